"""Due-date driven construction heuristic.

Builds a schedule from scratch: among the precedence-ready jobs with the
earliest due date, commit the (job, machine) pair with the earliest
possible completion time, evaluated against the committed partial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import CostBreakdown, Instance, Schedule, SolutionRepr, validate_instance
from .decoder import DecodeState, evaluate


@dataclass
class ActiveSet:
    """Jobs whose predecessors have all been committed."""

    active: set[int] = field(default_factory=set)
    remaining_preds: dict[int, int] = field(default_factory=dict)
    dependents: dict[int, list[int]] = field(default_factory=dict)

    @classmethod
    def from_instance(cls, instance: Instance) -> "ActiveSet":
        remaining = {}
        dependents: dict[int, list[int]] = {j.id: [] for j in instance.jobs}
        for j in instance.jobs:
            preds = {p for p, _ in j.preds}
            remaining[j.id] = len(preds)
            for p in preds:
                dependents[p].append(j.id)
        active = {jid for jid, cnt in remaining.items() if cnt == 0}
        return cls(active=active, remaining_preds=remaining, dependents=dependents)


def update_active(active: ActiveSet, committed: int) -> ActiveSet:
    """Remove the committed job and admit jobs it was the last blocker for."""
    if committed not in active.active:
        raise ValueError(f"job {committed} is not active")
    active.active.discard(committed)
    for dep in active.dependents.get(committed, ()):
        active.remaining_preds[dep] -= 1
        if active.remaining_preds[dep] == 0:
            active.active.add(dep)
    return active


def construct(instance: Instance) -> tuple[SolutionRepr, Schedule, CostBreakdown]:
    """Run the dispatching loop until every job is committed.

    Ties on completion time are broken by the lowest job id, then the
    lowest machine id.  If no active earliest-due job fits anywhere, the
    one with the smallest id is placed ignoring resource capacities and
    flagged, so the result is always structurally total.
    """
    defects = validate_instance(instance)
    if defects:
        raise ValueError(f"invalid instance: {defects[0]}")

    state = DecodeState(instance)
    active = ActiveSet.from_instance(instance)
    order: list[int] = []
    assign: dict[int, int] = {}

    while active.active:
        d_star = min(instance.job(jid).due for jid in active.active)
        candidates = sorted(
            jid for jid in active.active if instance.job(jid).due == d_star
        )
        best: tuple[int, int, int] | None = None  # (completion, job, machine)
        for jid in candidates:
            job = instance.job(jid)
            for mid in sorted(job.eligible):
                placed = state.probe(job, mid)
                if placed is None:
                    continue
                key = (placed[1], jid, mid)
                if best is None or key < best:
                    best = key
        if best is not None:
            _, jid, mid = best
        else:
            # every candidate is stuck: schedule the smallest one anyway
            jid = candidates[0]
            job = instance.job(jid)
            mid = min(
                job.eligible,
                key=lambda m: (state.fallback(job, m)[1], m),
            )
        state.commit(jid, mid)
        order.append(jid)
        assign[jid] = mid
        update_active(active, jid)

    repr = SolutionRepr(order=order, assign=assign)
    sched = state.schedule()
    return repr, sched, evaluate(instance, sched)
