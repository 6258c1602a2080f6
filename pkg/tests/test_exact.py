import itertools

import numpy as np
import pytest

from pmsched.core import Job, Machine, Resource, SolutionRepr, instance_to_dict
from pmsched.decoder import check_feasibility, decode
from pmsched import exact, gen

from conftest import tiny_instances
from test_core import make_instance


# --- placeholder jobs ---------------------------------------------------------

def test_fixture_placeholders(six_job):
    ph = exact.build_placeholder_jobs(six_job)
    r1 = [(p.start, p.end, p.demand) for p in ph if p.resource == 1]
    r2 = [(p.start, p.end, p.demand) for p in ph if p.resource == 2]
    assert r1 == [(5, 6, 4), (6, 9, 2), (9, 12, 4)]
    assert r2 == [(0, 3, 2), (9, 12, 3)]


def test_constant_capacity_needs_no_placeholders():
    jobs = (Job(id=1, eligible=(1,), proc={1: 2}, due=5, release=0),)
    inst = make_instance(jobs, resources=(Resource(id=1, capacity=((0, 50, 3),)),))
    assert exact.build_placeholder_jobs(inst) == []


def test_zero_capacity_resource_needs_no_placeholders():
    jobs = (Job(id=1, eligible=(1,), proc={1: 2}, due=5, release=0),)
    inst = make_instance(jobs, resources=(Resource(id=1, capacity=((0, 50, 0),)),))
    assert exact.build_placeholder_jobs(inst) == []


def test_placeholders_reconstruct_capacity_profile():
    for seed in range(4):
        inst, _ = gen.generate(gen.GenConfig(n=10, k=2, s=3, c=0, seed=seed))
        ph = exact.build_placeholder_jobs(inst)
        for r in inst.resources:
            profile = np.asarray(inst.capacity_array(r.id)).copy()
            for p in ph:
                if p.resource == r.id:
                    profile[p.start:p.end] += p.demand
            assert (profile == r.cmax).all()


# --- model export --------------------------------------------------------------

def test_six_job_export_counts(six_job):
    mzn, dzn = exact.render_model(six_job)
    assert mzn.count("cumulative(") == 2
    assert "nPH = 5;" in dzn
    assert "solve minimize objective;" in mzn


def test_single_job_export_has_no_cumulative(single_job):
    mzn, dzn = exact.render_model(single_job)
    assert mzn.count("cumulative(") == 0
    assert "nPH = 0;" in dzn
    assert "n = 1;" in dzn and "k = 1;" in dzn


def test_export_is_byte_deterministic(six_job, tmp_path):
    p1 = exact.export_constraint_model(six_job, tmp_path / "a")
    p2 = exact.export_constraint_model(six_job, tmp_path / "b")
    assert open(p1[0], "rb").read() == open(p2[0], "rb").read()
    assert open(p1[1], "rb").read() == open(p2[1], "rb").read()


def test_export_data_is_well_formed(six_job, tmp_path):
    mzn, dzn = exact.render_model(six_job)
    for line in dzn.splitlines():
        assert line.startswith("%") or line.rstrip().endswith(";")
    # every parameter declared in the model is assigned in the data file
    for name in ("n", "k", "nRes", "V", "maxDT", "maxPer", "nPrec", "nPH",
                 "elig", "proc", "setup", "release", "due", "z", "v",
                 "dtS", "dtE", "perS", "perE", "precJob", "precPred", "precLag",
                 "phRes", "phStart", "phEnd", "phDemand", "w1", "w2", "w3"):
        assert f"{name} = " in dzn, name


def test_machine_periods(six_job):
    periods = exact.machine_periods(six_job)
    assert periods[1] == [(0, 12)]
    assert periods[2] == [(0, 6), (8, 12)]


# --- oracles -------------------------------------------------------------------

def test_single_job_oracles(single_job):
    r = exact.exhaustive_time_indexed(single_job)
    assert r.status == exact.OPTIMAL and r.cost.aggregate == 5.0
    e = exact.enumerate_representations(single_job)
    assert e.status == exact.BEST and e.cost.aggregate == 5.0
    sched, cost = decode(single_job, e.repr)
    assert cost.aggregate == 5.0


def test_unsat_when_demand_never_fits():
    jobs = (Job(id=1, eligible=(1,), proc={1: 5}, due=10, release=0, demands={1: 1}),)
    inst = make_instance(jobs, resources=(Resource(id=1, capacity=((0, 50, 0),)),))
    assert exact.exhaustive_time_indexed(inst).status == exact.UNSAT
    assert exact.enumerate_representations(inst).status == exact.NONE_FEASIBLE


def test_budget_exhaustion_reported(six_job):
    r = exact.exhaustive_time_indexed(six_job, exact.SearchLimits(node_cap=10))
    assert r.status == exact.BUDGET_EXCEEDED
    big = gen.generate(gen.GenConfig(n=8, k=2, s=1, c=0, seed=0))[0]
    e = exact.enumerate_representations(big, exact.SearchLimits(node_cap=100))
    assert e.status == exact.BUDGET_EXCEEDED


def test_six_job_optimum_matches_enumeration(six_job):
    r = exact.exhaustive_time_indexed(six_job)
    e = exact.enumerate_representations(six_job)
    assert r.status == exact.OPTIMAL and e.status == exact.BEST
    assert r.cost.aggregate == e.cost.aggregate == 16.0
    assert check_feasibility(six_job, r.schedule).empty()
    assert check_feasibility(six_job, e.schedule).empty()


def test_oracles_agree_on_tiny_instances():
    for inst, _ in tiny_instances(10):
        a = exact.exhaustive_time_indexed(inst)
        b = exact.enumerate_representations(inst)
        assert a.status == exact.OPTIMAL and b.status == exact.BEST
        assert a.cost.aggregate == b.cost.aggregate
        assert check_feasibility(inst, a.schedule).empty()


def test_paired_unsat_verdicts():
    jobs = (
        Job(id=1, eligible=(1,), proc={1: 4}, due=10, release=0, demands={1: 2}),
        Job(id=2, eligible=(1,), proc={1: 4}, due=10, release=0, demands={1: 2}),
    )
    inst = make_instance(
        jobs, resources=(Resource(id=1, capacity=((0, 4, 2), (4, 12, 0))),), horizon=12
    )
    assert exact.exhaustive_time_indexed(inst).status == exact.UNSAT
    assert exact.enumerate_representations(inst).status == exact.NONE_FEASIBLE


def test_decoder_reaches_the_time_indexed_optimum():
    # every feasible schedule is dominated by decoding some representation
    for inst, _ in tiny_instances(6):
        r = exact.exhaustive_time_indexed(inst)
        assert r.status == exact.OPTIMAL
        ids = [j.id for j in inst.jobs]
        best = None
        for perm in itertools.permutations(ids):
            repr_ = SolutionRepr(list(perm), {})
            for combo in itertools.product(*(sorted(inst.job(j).eligible) for j in ids)):
                repr_.assign = dict(zip(ids, combo))
                from pmsched.core import precedence_order_ok

                if not precedence_order_ok(inst, repr_):
                    break
                _, cost = decode(inst, repr_)
                if cost.violations == 0 and (best is None or cost.aggregate < best):
                    best = cost.aggregate
        assert best is not None
        assert best == r.cost.aggregate
