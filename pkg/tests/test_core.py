import json
import random

import pytest

from pmsched.core import (
    Instance,
    InstanceFormatError,
    Job,
    Machine,
    Resource,
    SetupTable,
    SolutionRepr,
    instance_from_dict,
    instance_to_dict,
    precedence_order_ok,
    validate_instance,
)
from pmsched import gen


def make_instance(jobs, machines=None, resources=(), horizon=50, setup_value=0):
    machines = machines or (Machine(id=1),)
    table = SetupTable([m.id for m in machines], [j.id for j in jobs])
    for m in machines:
        for j in jobs:
            if m.id not in j.eligible:
                continue
            table.set(m.id, None, j.id, setup_value)
            for p in jobs:
                if p.id != j.id and m.id in p.eligible:
                    table.set(m.id, p.id, j.id, setup_value)
    return Instance(
        machines=tuple(machines),
        jobs=tuple(jobs),
        resources=tuple(resources),
        setup=table,
        weights=(1.0, 1.0, 1.0),
        horizon=horizon,
    )


def test_fixture_instances_are_well_formed(six_job, single_job):
    assert validate_instance(six_job) == []
    assert validate_instance(single_job) == []


def test_validate_is_pure(six_job):
    assert validate_instance(six_job) == validate_instance(six_job)


def test_precedence_cycle_is_a_defect():
    jobs = (
        Job(id=1, eligible=(1,), proc={1: 2}, due=5, release=0, preds=((2, 0),)),
        Job(id=2, eligible=(1,), proc={1: 2}, due=5, release=0, preds=((1, 0),)),
    )
    defects = validate_instance(make_instance(jobs))
    assert any(d.invariant == "precedence-cycle" for d in defects)


def test_resource_coverage_gap_is_a_defect():
    jobs = (Job(id=1, eligible=(1,), proc={1: 2}, due=5, release=0),)
    inst = make_instance(jobs, resources=(Resource(id=1, capacity=((0, 5, 1), (6, 9, 1))),),
                         horizon=9)
    defects = validate_instance(inst)
    gap = [d for d in defects if d.invariant == "coverage-gap"]
    assert gap and "5" in gap[0].detail


def test_missing_setup_entry_is_a_defect():
    jobs = (
        Job(id=1, eligible=(1,), proc={1: 2}, due=5, release=0),
        Job(id=2, eligible=(1,), proc={1: 2}, due=5, release=0),
    )
    inst = make_instance(jobs)
    inst.setup.provided[0, 1, 1] = False  # drop the (machine 1, job1 -> job2) entry
    defects = validate_instance(inst)
    assert any(d.invariant == "setup-table" and "job 2" in d.detail for d in defects)


def test_proc_must_match_eligible_machines():
    jobs = (Job(id=1, eligible=(1,), proc={1: 2, 2: 3}, due=5, release=0),)
    defects = validate_instance(make_instance(jobs))
    assert any(d.invariant == "processing-times" for d in defects)


def test_downtime_and_window_defects():
    jobs = (Job(id=1, eligible=(1,), proc={1: 2}, due=5, release=0),)
    machines = (Machine(id=1, downtimes=((5, 3), (2, 4))),)
    defects = validate_instance(make_instance(jobs, machines=machines))
    kinds = {d.invariant for d in defects}
    assert "downtime-window" in kinds and "downtime-order" in kinds


def test_precedence_order_ok_on_fixture(six_job):
    ok = SolutionRepr([1, 2, 3, 5, 6, 4], {j.id: 1 for j in six_job.jobs})
    assert precedence_order_ok(six_job, ok)
    bad = SolutionRepr([1, 2, 3, 5, 4, 6], {j.id: 1 for j in six_job.jobs})
    assert not precedence_order_ok(six_job, bad)


def test_precedence_order_vacuous_without_precedences():
    jobs = tuple(Job(id=i, eligible=(1,), proc={1: 1}, due=5, release=0) for i in (1, 2, 3))
    inst = make_instance(jobs)
    for order in ([1, 2, 3], [3, 2, 1], [2, 3, 1]):
        assert precedence_order_ok(inst, SolutionRepr(order, {i: 1 for i in order}))


def test_precedence_order_matches_independent_topological_check(six_job):
    # independent notion: a permutation is a topological order iff committing
    # jobs in sequence never commits a job before all of its predecessors
    def topo_ok(order):
        done = set()
        for jid in order:
            if any(p not in done for p, _ in six_job.job(jid).preds):
                return False
            done.add(jid)
        return True

    rng = random.Random(7)
    ids = [j.id for j in six_job.jobs]
    for _ in range(300):
        order = ids[:]
        rng.shuffle(order)
        repr_ = SolutionRepr(order, {i: 1 for i in ids})
        assert precedence_order_ok(six_job, repr_) == topo_ok(order)


def test_instance_json_round_trip(six_job):
    doc = instance_to_dict(six_job)
    again = instance_to_dict(instance_from_dict(json.loads(json.dumps(doc))))
    assert doc == again


def test_generated_instance_json_round_trip():
    inst, _ = gen.generate(gen.GenConfig(n=12, k=3, s=4, c=2, seed=5))
    doc = instance_to_dict(inst)
    assert instance_to_dict(instance_from_dict(doc)) == doc


def test_dummy_setup_key_format(six_job):
    doc = instance_to_dict(six_job)
    assert "b1" in doc["setup"]["1"]
    assert "b2" in doc["setup"]["2"]


def test_malformed_document_raises():
    with pytest.raises(InstanceFormatError):
        instance_from_dict({"version": 99})
    with pytest.raises(InstanceFormatError):
        instance_from_dict({"version": 1, "horizon": 5})


def test_big_m_dominates_feasible_costs(six_job):
    n, v = six_job.n, six_job.horizon
    w1, w2, w3 = six_job.weights
    bound = w1 * n * v + w2 * v + w3 * n * six_job.max_setup()
    assert six_job.big_m() > bound
