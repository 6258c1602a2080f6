import math
import random

import pytest

from pmsched.anneal import (
    Move,
    NoMoveError,
    SAParams,
    accept,
    apply_move,
    cooling_rate,
    sample_move,
    solve,
)
from pmsched.construct import construct
from pmsched.core import Job, SolutionRepr, precedence_order_ok
from pmsched.core import Machine
from pmsched.decoder import decode
from pmsched import gen

from test_core import make_instance


def four_job_instance():
    jobs = (
        Job(id=1, eligible=(1, 2), proc={1: 2, 2: 2}, due=9, release=0),
        Job(id=2, eligible=(1,), proc={1: 2}, due=9, release=0, preds=((1, 0),)),
        Job(id=3, eligible=(1, 2), proc={1: 2, 2: 2}, due=9, release=0),
        Job(id=4, eligible=(2,), proc={2: 2}, due=9, release=0),
    )
    return make_instance(jobs, machines=(Machine(id=1), Machine(id=2)), horizon=30)


def enumerate_feasible_triples(instance, repr_):
    """All non-identity (job, insertion index, machine) triples, by brute force."""
    triples = []
    pos = {jid: i for i, jid in enumerate(repr_.order)}
    for j in instance.jobs:
        without = [x for x in repr_.order if x != j.id]
        for p in range(len(repr_.order)):
            cand = without[:p] + [j.id] + without[p:]
            cand_repr = SolutionRepr(cand, dict(repr_.assign))
            if not precedence_order_ok(instance, cand_repr):
                continue
            for m in sorted(j.eligible):
                if p == pos[j.id] and m == repr_.assign[j.id]:
                    continue
                triples.append((j.id, p, m))
    return triples


def test_apply_move_shifts_and_reassigns(six_job, six_job_repr):
    moved = apply_move(six_job_repr, Move(job=6, new_position=1, new_machine=2))
    assert moved.order == [1, 6, 2, 3, 5, 4]
    assert moved.assign[6] == 2
    assert six_job_repr.order == [1, 2, 3, 5, 6, 4]  # original untouched


def test_move_to_same_position_changes_machine_only(six_job, six_job_repr):
    moved = apply_move(six_job_repr, Move(job=6, new_position=4, new_machine=2))
    assert moved.order == six_job_repr.order
    assert moved.assign[6] == 2


def test_apply_then_inverse_restores(six_job, six_job_repr):
    move = Move(job=6, new_position=1, new_machine=2)
    moved = apply_move(six_job_repr, move)
    back = apply_move(moved, Move(job=6, new_position=4, new_machine=1))
    assert back.order == six_job_repr.order and back.assign == six_job_repr.assign


def test_apply_move_rejects_identity_and_bad_positions(six_job, six_job_repr):
    with pytest.raises(ValueError):
        apply_move(six_job_repr, Move(job=6, new_position=4, new_machine=1))
    with pytest.raises(ValueError):
        apply_move(six_job_repr, Move(job=6, new_position=99, new_machine=2))


def test_fixture_move_is_in_the_feasible_set(six_job, six_job_repr):
    triples = enumerate_feasible_triples(six_job, six_job_repr)
    assert (6, 1, 2) in triples


def test_chained_job_cannot_jump_before_its_predecessor():
    jobs = (
        Job(id=1, eligible=(1,), proc={1: 2}, due=9, release=0),
        Job(id=2, eligible=(1, 2), proc={1: 2, 2: 2}, due=9, release=0, preds=((1, 0),)),
    )
    inst = make_instance(jobs, machines=(Machine(id=1), Machine(id=2)))
    repr_ = SolutionRepr([1, 2], {1: 1, 2: 1})
    triples = enumerate_feasible_triples(inst, repr_)
    assert all(not (j == 2 and p == 0) for j, p, m in triples)


def test_sampling_is_uniform_over_the_feasible_set():
    inst = four_job_instance()
    repr_ = SolutionRepr([1, 2, 3, 4], {1: 1, 2: 1, 3: 2, 4: 2})
    triples = enumerate_feasible_triples(inst, repr_)
    rng = random.Random(2024)
    samples = 100_000
    counts = {t: 0 for t in triples}
    for _ in range(samples):
        mv = sample_move(inst, repr_, rng)
        counts[(mv.job, mv.new_position, mv.new_machine)] += 1
    assert set(counts) == set(triples)
    p = 1.0 / len(triples)
    expected = samples * p
    sigma = math.sqrt(samples * p * (1 - p))
    for t, c in counts.items():
        assert abs(c - expected) <= 3 * sigma, (t, c, expected)
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # chi-square with |triples|-1 dof should stay near its mean
    assert chi2 < 3 * len(triples)


def test_sampled_moves_preserve_precedence_order(six_job, six_job_repr):
    rng = random.Random(11)
    repr_ = six_job_repr.copy()
    for _ in range(500):
        mv = sample_move(six_job, repr_, rng)
        repr_ = apply_move(repr_, mv)
        assert precedence_order_ok(six_job, repr_)


def test_no_move_on_degenerate_instance(single_job):
    repr_ = SolutionRepr([1], {1: 1})
    with pytest.raises(NoMoveError):
        sample_move(single_job, repr_, random.Random(0))


def test_cooling_rate_examples():
    c = cooling_rate(600.0, 0.001, 1)
    assert c == pytest.approx(0.001 / 600.0, rel=1e-12)
    assert max(0.001, c * 600.0) == pytest.approx(0.001, rel=1e-12)
    assert cooling_rate(0.001, 0.001, 5) == 1.0
    c2 = cooling_rate(600.0, 0.001, 2)
    assert c2 == pytest.approx(math.sqrt(1.0 / 600000.0), rel=1e-9)
    assert c2 * c2 * 600.0 == pytest.approx(0.001, rel=1e-9)


def test_acceptance_probability_frequencies():
    rng = random.Random(7)
    trials = 100_000
    hits = sum(accept(5.0, 5.0, rng) for _ in range(trials))
    assert abs(hits / trials - math.exp(-1)) < 0.01
    hits = sum(accept(100.0, 5.0, rng) for _ in range(trials // 10))
    assert hits == 0
    hits = sum(accept(1e-12, 5.0, rng) for _ in range(1000))
    assert hits == 1000


def test_solve_is_deterministic_and_beats_construct(six_job):
    params = SAParams(iteration_budget=800, runs=3, seed=4)
    a = solve(six_job, params)
    b = solve(six_job, params)
    assert a.cost == b.cost and a.repr.order == b.repr.order and a.repr.assign == b.repr.assign
    _, _, ca_cost = construct(six_job)
    assert a.cost.aggregate <= ca_cost.aggregate
    assert a.cost.violations == 0  # feasible initial stays feasible
    assert [s.final_temperature for s in a.stats] == pytest.approx([0.001] * 3, rel=1e-9)


def test_solve_from_explicit_initial(six_job, six_job_repr):
    params = SAParams(iteration_budget=300, runs=2, seed=9)
    res = solve(six_job, params, initial=six_job_repr)
    _, initial_cost = decode(six_job, six_job_repr)
    assert res.cost.aggregate <= initial_cost.aggregate


def test_solve_returns_initial_when_no_moves(single_job):
    params = SAParams(iteration_budget=100, runs=2, seed=0)
    res = solve(single_job, params)
    assert res.cost.aggregate == 5.0
    assert all(s.iterations == 0 for s in res.stats)


def test_solve_parallel_workers_match_sequential(six_job):
    params_seq = SAParams(iteration_budget=300, runs=2, seed=8, workers=1)
    params_par = SAParams(iteration_budget=300, runs=2, seed=8, workers=2)
    a = solve(six_job, params_seq)
    b = solve(six_job, params_par)
    assert a.cost == b.cost
    assert [s.to_dict() for s in a.stats] == [s.to_dict() for s in b.stats]


def test_time_limited_run_terminates(six_job):
    params = SAParams(time_limit=0.2, runs=1, seed=1)
    res = solve(six_job, params)
    assert res.stats[0].iterations > 0
    assert res.stats[0].final_temperature == pytest.approx(0.001, rel=0.5)
