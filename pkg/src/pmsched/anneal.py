"""Simulated annealing over the permutation and assignment representation.

Each iteration samples one shift move uniformly from the feasible
neighborhood, re-decodes the moved representation from scratch and accepts
worsening moves with probability exp(-delta / t).  The geometric cooling
rate is recomputed every iteration from the remaining deadline so that the
temperature reaches its minimum exactly when the run ends.

Chains are reproducible: chain i draws from ``random.Random(seed + i)``
(Mersenne Twister), whose sequence is stable across platforms.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .construct import construct
from .core import CostBreakdown, Instance, Schedule, SolutionRepr, validate_instance
from .decoder import decode


class NoMoveError(RuntimeError):
    """The feasible neighborhood is empty (single job, single machine)."""


@dataclass
class SAParams:
    t_init: float = 600.0
    t_min: float = 0.001
    time_limit: float | None = None
    iteration_budget: int | None = None
    seed: int = 0
    runs: int = 12
    workers: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.t_min < self.t_init):
            raise ValueError("requires 0 < t_min < t_init")
        if self.time_limit is None and self.iteration_budget is None:
            raise ValueError("either time_limit or iteration_budget is required")


@dataclass(frozen=True)
class Move:
    job: int
    new_position: int
    new_machine: int


@dataclass
class ChainStats:
    iterations: int
    accepted: int
    rejected: int
    best_aggregate: float
    final_temperature: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "best_aggregate": self.best_aggregate,
            "final_temperature": self.final_temperature,
            "seed": self.seed,
        }


@dataclass
class SolveResult:
    schedule: Schedule
    cost: CostBreakdown
    repr: SolutionRepr
    stats: list[ChainStats]


def _insertion_windows(instance: Instance, repr: SolutionRepr) -> dict[int, tuple[int, int]]:
    """Inclusive feasible insertion-index window per job.

    Indices refer to the permutation with the job removed; inserting at the
    job's current position is the identity.  A position is feasible when
    every predecessor stays before the job and every dependent after it.
    """
    pos = {jid: i for i, jid in enumerate(repr.order)}
    n = len(repr.order)
    windows: dict[int, tuple[int, int]] = {}
    lo = {jid: 0 for jid in pos}
    hi = {jid: n - 1 for jid in pos}
    for j in instance.jobs:
        for p, _ in j.preds:
            # predecessor keeps its index after the job is removed
            lo[j.id] = max(lo[j.id], pos[p] + 1)
            # the dependent's removed-list index is one lower
            hi[p] = min(hi[p], pos[j.id] - 1)
    for jid in pos:
        windows[jid] = (lo[jid], hi[jid])
    return windows


def sample_move(instance: Instance, repr: SolutionRepr, rng: random.Random) -> Move:
    """Uniform draw from all feasible (job, position, machine) triples.

    The triple equal to the job's current placement is excluded.  Raises
    NoMoveError when nothing but identity triples exist.
    """
    windows = _insertion_windows(instance, repr)
    jobs = [instance.job(jid) for jid in repr.order]
    weights = []
    for job in jobs:
        lo, hi = windows[job.id]
        weights.append((hi - lo + 1) * len(job.eligible))
    total = sum(weights)
    if total <= len(jobs):
        raise NoMoveError("every feasible triple is the identity")
    pos = {jid: i for i, jid in enumerate(repr.order)}
    while True:
        r = rng.randrange(total)
        for job, w in zip(jobs, weights):
            if r < w:
                break
            r -= w
        eligible = sorted(job.eligible)
        lo, _ = windows[job.id]
        new_position = lo + r // len(eligible)
        new_machine = eligible[r % len(eligible)]
        if new_position == pos[job.id] and new_machine == repr.assign[job.id]:
            continue
        return Move(job=job.id, new_position=new_position, new_machine=new_machine)


def apply_move(repr: SolutionRepr, move: Move) -> SolutionRepr:
    """Reinsert the job at its new position with its new machine assignment."""
    if move.job not in repr.assign:
        raise ValueError(f"unknown job {move.job}")
    cur_pos = repr.order.index(move.job)
    if move.new_position == cur_pos and move.new_machine == repr.assign[move.job]:
        raise ValueError("identity move")
    order = list(repr.order)
    order.pop(cur_pos)
    if not 0 <= move.new_position <= len(order):
        raise ValueError(f"position {move.new_position} out of range")
    order.insert(move.new_position, move.job)
    assign = dict(repr.assign)
    assign[move.job] = move.new_machine
    return SolutionRepr(order=order, assign=assign)


def cooling_rate(t_current: float, t_min: float, steps_left: int) -> float:
    """Geometric rate that lands on t_min after `steps_left` applications."""
    if not 0 < t_min <= t_current:
        raise ValueError("requires 0 < t_min <= t_current")
    return (t_min / t_current) ** (1.0 / max(1, steps_left))


def accept(delta: float, t_current: float, rng: random.Random) -> bool:
    """Metropolis test for a worsening move (delta > 0)."""
    return rng.random() < math.exp(-delta / t_current)


def _run_chain(
    instance: Instance,
    initial: SolutionRepr,
    params: SAParams,
    chain_index: int,
) -> tuple[float, SolutionRepr, Schedule, CostBreakdown, ChainStats]:
    rng = random.Random(params.seed + chain_index)
    cur = initial.copy()
    cur_sched, cur_cost = decode(instance, cur)
    best_repr, best_sched, best_cost = cur.copy(), cur_sched, cur_cost

    t = params.t_init
    accepted = rejected = iterations = 0
    budget = params.iteration_budget
    start = time.monotonic()
    deadline = None if params.time_limit is None else start + params.time_limit

    while True:
        if budget is not None:
            if iterations >= budget:
                break
        elif time.monotonic() >= deadline:
            break
        try:
            move = sample_move(instance, cur, rng)
        except NoMoveError:
            break
        cand = apply_move(cur, move)
        cand_sched, cand_cost = decode(instance, cand)
        delta = cand_cost.aggregate - cur_cost.aggregate
        if delta <= 0 or accept(delta, t, rng):
            cur, cur_sched, cur_cost = cand, cand_sched, cand_cost
            accepted += 1
            if cur_cost.aggregate < best_cost.aggregate:
                best_repr, best_sched, best_cost = cur.copy(), cur_sched, cur_cost
        else:
            rejected += 1
        iterations += 1
        if budget is not None:
            steps_left = max(1, budget - iterations + 1)
        else:
            now = time.monotonic()
            mean = (now - start) / iterations
            remaining = max(0.0, deadline - now)
            steps_left = max(1, round(remaining / mean)) if mean > 0 else 1
        t = max(params.t_min, cooling_rate(t, params.t_min, steps_left) * t)

    stats = ChainStats(
        iterations=iterations,
        accepted=accepted,
        rejected=rejected,
        best_aggregate=best_cost.aggregate,
        final_temperature=t,
        seed=params.seed + chain_index,
    )
    return best_cost.aggregate, best_repr, best_sched, best_cost, stats


def solve(
    instance: Instance,
    params: SAParams,
    initial: SolutionRepr | None = None,
) -> SolveResult:
    """Run independent annealing chains and return the best result found.

    With ``initial=None`` every chain starts from the construction
    heuristic's solution.  Chains share nothing but the immutable instance;
    the reduction across chains is deterministic (aggregate, chain index).
    """
    defects = validate_instance(instance)
    if defects:
        raise ValueError(f"invalid instance: {defects[0]}")
    if initial is None:
        initial, _, _ = construct(instance)

    args = [(instance, initial, params, i) for i in range(params.runs)]
    if params.workers > 1 and params.runs > 1:
        with ProcessPoolExecutor(max_workers=params.workers) as pool:
            results = list(pool.map(_chain_entry, args))
    else:
        results = [_run_chain(*a) for a in args]

    stats = [r[4] for r in results]
    best_index = min(range(len(results)), key=lambda i: (results[i][0], i))
    _, best_repr, best_sched, best_cost, _ = results[best_index]
    return SolveResult(schedule=best_sched, cost=best_cost, repr=best_repr, stats=stats)


def _chain_entry(args):
    return _run_chain(*args)
