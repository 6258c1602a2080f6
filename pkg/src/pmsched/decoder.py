"""Decode solution representations into timetables, evaluate and verify them.

The decoder commits jobs in permutation order onto their assigned machines
at the earliest feasible start.  ``check_feasibility`` re-verifies a
finished schedule constraint by constraint from per-slot ground truth and
deliberately shares no state or incremental logic with the decoding path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    CostBreakdown,
    Instance,
    Job,
    Placement,
    Schedule,
    SolutionRepr,
    precedence_order_ok,
    split_working,
)

VIOLATED_RESOURCE = "resource"
VIOLATED_MACHINE = "machine_availability"


def compute_end(
    start: int,
    setup_len: int,
    proc: int,
    downtimes: tuple[tuple[int, int], ...],
) -> tuple[int, tuple[tuple[int, int], ...]]:
    """End time of a job placed at `start`, pausing across downtimes.

    Chronological fix-point: the naive end is pushed past every downtime
    window it reaches.  A window is spanned exactly when the job starts
    before it and ends after it; ending exactly at a window start does not
    span it.  `start` must not lie inside a window and `downtimes` must be
    sorted by window start.
    """
    end = start + setup_len + proc
    spanned = []
    for us, ue in downtimes:
        if start < us and end > us:
            end += ue - us
            spanned.append((us, ue))
    return end, tuple(spanned)


def skip_downtimes(t: int, downtimes: tuple[tuple[int, int], ...]) -> int:
    """Smallest legal start >= t (a start may not lie inside a downtime)."""
    for us, ue in downtimes:
        if us <= t < ue:
            return ue
        if us > t:
            break
    return t


class ResourceTimeline:
    """Residual per-slot capacity of every resource over [0, V).

    Reserving and then releasing the same ranges restores the prior state
    exactly; all arithmetic is integer.
    """

    def __init__(self, instance: Instance):
        self.residual: dict[int, np.ndarray] = {
            r.id: instance.capacity_array(r.id).copy() for r in instance.resources
        }

    def reserve(self, needs: list[tuple[int, int]], ranges: list[tuple[int, int]]) -> None:
        for rid, amt in needs:
            arr = self.residual[rid]
            for a, b in ranges:
                arr[a:b] -= amt

    def release(self, needs: list[tuple[int, int]], ranges: list[tuple[int, int]]) -> None:
        for rid, amt in needs:
            arr = self.residual[rid]
            for a, b in ranges:
                arr[a:b] += amt

    def last_deficient_slot(
        self, rid: int, need: int, ranges: list[tuple[int, int]]
    ) -> int | None:
        """Latest slot in `ranges` whose residual is below `need`, if any."""
        arr = self.residual[rid]
        for a, b in reversed(ranges):
            seg = arr[a:b]
            mask = seg < need
            if mask.any():
                return b - 1 - int(np.argmax(mask[::-1]))
        return None


def earliest_start(
    instance: Instance,
    timeline: ResourceTimeline,
    machine_id: int,
    job: Job,
    prev: int | None,
    lower_bound: int,
) -> int | None:
    """Minimum feasible start >= lower_bound for `job` on the machine.

    Feasible means: the start is outside every downtime, the end (with
    pauses) is within the horizon, and every occupied slot leaves enough
    residual capacity for the job's and the machine's demands.  Returns
    None when no such start exists.

    The scan jumps from each candidate directly past the latest blocking
    slot in the occupied window; any start at or before a blocking slot
    keeps that slot inside the window because ends are non-decreasing in
    the start time, so no feasible start is skipped.
    """
    machine = instance.machine(machine_id)
    downtimes = machine.downtimes
    setup_len = instance.setup.get(machine_id, prev, job.id)
    proc = job.proc[machine_id]
    needs = instance.combined_demands(job, machine_id)
    horizon = instance.horizon

    t = skip_downtimes(lower_bound, downtimes)
    while True:
        end, spanned = compute_end(t, setup_len, proc, downtimes)
        if end > horizon:
            return None
        if not needs:
            return t
        ranges = split_working(t, end, spanned)
        block = None
        for rid, amt in needs:
            slot = timeline.last_deficient_slot(rid, amt, ranges)
            if slot is not None and (block is None or slot > block):
                block = slot
        if block is None:
            return t
        t = skip_downtimes(block + 1, downtimes)


class DecodeState:
    """Incremental dispatching state: timeline, machine chains, placements."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.timeline = ResourceTimeline(instance)
        self.placements: dict[int, Placement] = {}
        self.machine_last: dict[int, tuple[int | None, int]] = {
            m.id: (None, 0) for m in instance.machines
        }
        self.ends: dict[int, int] = {}

    def lower_bound(self, job: Job, machine_id: int) -> int:
        lb = max(job.release, self.machine_last[machine_id][1])
        for pred, lag in job.preds:
            lb = max(lb, self.ends[pred] + lag)
        return lb

    def probe(self, job: Job, machine_id: int) -> tuple[int, int, tuple] | None:
        """Earliest feasible (start, end, spanned) on the machine, or None."""
        prev = self.machine_last[machine_id][0]
        lb = self.lower_bound(job, machine_id)
        t = earliest_start(self.instance, self.timeline, machine_id, job, prev, lb)
        if t is None:
            return None
        downtimes = self.instance.machine(machine_id).downtimes
        setup_len = self.instance.setup.get(machine_id, prev, job.id)
        end, spanned = compute_end(t, setup_len, job.proc[machine_id], downtimes)
        return t, end, spanned

    def fallback(self, job: Job, machine_id: int) -> tuple[int, int, tuple, str]:
        """Place ignoring resources: earliest legal start, flagged accordingly.

        When the placement still fits the horizon only resources were the
        blocker; when even the earliest legal start overruns the horizon
        the machine calendar itself cannot host the job.
        """
        downtimes = self.instance.machine(machine_id).downtimes
        prev = self.machine_last[machine_id][0]
        setup_len = self.instance.setup.get(machine_id, prev, job.id)
        t = skip_downtimes(self.lower_bound(job, machine_id), downtimes)
        end, spanned = compute_end(t, setup_len, job.proc[machine_id], downtimes)
        flag = VIOLATED_RESOURCE if end <= self.instance.horizon else VIOLATED_MACHINE
        return t, end, spanned, flag

    def commit(self, jid: int, machine_id: int) -> Placement:
        job = self.instance.job(jid)
        if machine_id not in job.eligible:
            raise ValueError(f"job {jid} is not eligible on machine {machine_id}")
        prev = self.machine_last[machine_id][0]
        placed = self.probe(job, machine_id)
        if placed is not None:
            start, end, spanned = placed
            violated = None
        else:
            start, end, spanned, violated = self.fallback(job, machine_id)
        setup_len = self.instance.setup.get(machine_id, prev, jid)
        placement = Placement(
            job=jid,
            machine=machine_id,
            start=start,
            end=end,
            setup_len=setup_len,
            prev=prev,
            spanned=spanned,
            violated=violated,
        )
        if violated is None:
            # violated jobs are scheduled with their demands ignored
            needs = self.instance.combined_demands(job, machine_id)
            if needs:
                self.timeline.reserve(needs, placement.working_ranges())
        self.placements[jid] = placement
        self.machine_last[machine_id] = (jid, end)
        self.ends[jid] = end
        return placement

    def schedule(self) -> Schedule:
        return Schedule(dict(self.placements))


def decode(instance: Instance, repr: SolutionRepr) -> tuple[Schedule, CostBreakdown]:
    """Decode a representation by committing jobs in order, earliest first.

    Jobs whose resource requirements cannot be met anywhere in the horizon
    are placed at their earliest calendar-legal start and flagged; the
    schedule stays structurally total so that local search can repair it.
    """
    if sorted(repr.order) != sorted(j.id for j in instance.jobs):
        raise ValueError("permutation must contain every job exactly once")
    if not precedence_order_ok(instance, repr):
        raise ValueError("permutation violates a precedence constraint")
    state = DecodeState(instance)
    for jid in repr.order:
        state.commit(jid, repr.assign[jid])
    sched = state.schedule()
    return sched, evaluate(instance, sched)


def evaluate(instance: Instance, schedule: Schedule) -> CostBreakdown:
    """Weighted tardiness + makespan + setup cost, with big-M per violation."""
    w1, w2, w3 = instance.weights
    tard = 0
    makespan = 0
    setup_total = 0
    violations = 0
    for j in instance.jobs:
        p = schedule.placements[j.id]
        tard += max(0, p.end - j.due)
        makespan = max(makespan, p.end)
        setup_total += instance.setup.get(p.machine, p.prev, j.id)
        if p.violated is not None:
            violations += 1
    big_m = instance.big_m()
    aggregate = w1 * tard + w2 * makespan + w3 * setup_total + big_m * violations
    return CostBreakdown(
        tardiness=tard,
        makespan=makespan,
        setup_total=setup_total,
        violations=violations,
        big_m=big_m,
        aggregate=aggregate,
    )


# --- independent feasibility verification -----------------------------------

@dataclass(frozen=True)
class Violation:
    detail: str
    job: int | None = None
    resource: int | None = None
    slot: int | None = None
    jobs: tuple[int, ...] = ()


@dataclass
class ViolationReport:
    """Violations found by direct verification, grouped by constraint family."""

    release: list[Violation] = field(default_factory=list)
    downtime_boundary: list[Violation] = field(default_factory=list)
    precedence_lag: list[Violation] = field(default_factory=list)
    prev_chain: list[Violation] = field(default_factory=list)
    eligibility: list[Violation] = field(default_factory=list)
    resource_capacity: list[Violation] = field(default_factory=list)
    horizon: list[Violation] = field(default_factory=list)
    end_time: list[Violation] = field(default_factory=list)

    FAMILIES = (
        "release",
        "downtime_boundary",
        "precedence_lag",
        "prev_chain",
        "eligibility",
        "resource_capacity",
        "horizon",
        "end_time",
    )

    def empty(self) -> bool:
        return all(not getattr(self, fam) for fam in self.FAMILIES)

    def count(self) -> int:
        return sum(len(getattr(self, fam)) for fam in self.FAMILIES)

    def to_dict(self) -> dict:
        out: dict = {}
        for fam in self.FAMILIES:
            out[fam] = [
                {
                    "detail": v.detail,
                    "job": v.job,
                    "resource": v.resource,
                    "slot": v.slot,
                    "jobs": list(v.jobs),
                }
                for v in getattr(self, fam)
            ]
        return out


def _true_working_ranges(instance: Instance, p: Placement) -> list[tuple[int, int]]:
    """[start, end) minus the assigned machine's downtime windows."""
    ranges = []
    cur = p.start
    for us, ue in instance.machine(p.machine).downtimes:
        if ue <= cur:
            continue
        if us >= p.end:
            break
        if cur < us:
            ranges.append((cur, min(us, p.end)))
        cur = max(cur, ue)
    if cur < p.end:
        ranges.append((cur, p.end))
    return ranges


def check_feasibility(instance: Instance, schedule: Schedule) -> ViolationReport:
    """Re-verify every scheduling constraint by direct per-slot scanning.

    Nothing here trusts the decoder's bookkeeping: spanned windows, working
    slots and resource usage are all recomputed from the placements and the
    instance alone.
    """
    report = ViolationReport()
    placements = schedule.placements
    horizon = instance.horizon

    known = {j.id for j in instance.jobs}
    for j in instance.jobs:
        if j.id not in placements:
            report.prev_chain.append(Violation("job missing from schedule", job=j.id))
    jobs_placed = [instance.job(jid) for jid in sorted(placements) if jid in known]

    # eligibility and per-job checks
    for j in jobs_placed:
        p = placements[j.id]
        if p.machine not in j.eligible:
            report.eligibility.append(
                Violation(f"machine {p.machine} not in eligible set", job=j.id)
            )
            continue
        if p.start < j.release:
            report.release.append(
                Violation(f"start {p.start} before release {j.release}", job=j.id)
            )
        downtimes = instance.machine(p.machine).downtimes
        for us, ue in downtimes:
            if us <= p.start < ue:
                report.downtime_boundary.append(
                    Violation(f"start {p.start} inside downtime [{us},{ue})", job=j.id, slot=p.start)
                )
            if us < p.end <= ue:
                report.downtime_boundary.append(
                    Violation(f"end {p.end} inside downtime [{us},{ue})", job=j.id, slot=p.end)
                )
        expected_setup = instance.setup.get(p.machine, p.prev, j.id)
        if p.setup_len != expected_setup:
            report.end_time.append(
                Violation(
                    f"recorded setup {p.setup_len} differs from table value {expected_setup}",
                    job=j.id,
                )
            )
        spanned = tuple(
            (us, ue) for us, ue in downtimes if p.start < us and p.end > ue
        )
        expected_end = p.start + expected_setup + j.proc[p.machine] + sum(
            ue - us for us, ue in spanned
        )
        if p.end != expected_end:
            report.end_time.append(
                Violation(f"end {p.end} does not satisfy the end-time equation "
                          f"(expected {expected_end})", job=j.id)
            )
        if tuple(p.spanned) != spanned:
            report.end_time.append(
                Violation(f"recorded spanned windows {p.spanned} differ from {spanned}", job=j.id)
            )
        if p.end > horizon:
            report.horizon.append(
                Violation(f"end {p.end} exceeds horizon {horizon}", job=j.id)
            )
        if p.start < 0:
            report.horizon.append(Violation(f"negative start {p.start}", job=j.id))
        for pred, lag in j.preds:
            if pred not in placements:
                continue
            pred_end = placements[pred].end
            if p.start < pred_end + lag:
                report.precedence_lag.append(
                    Violation(
                        f"start {p.start} < predecessor {pred} end {pred_end} + lag {lag}",
                        job=j.id,
                    )
                )

    # previous-job chains: one dummy anchor per used machine, distinct prevs,
    # a simple path covering every job on the machine, non-overlapping in time
    prev_seen: dict[int, int] = {}
    for j in jobs_placed:
        p = placements[j.id]
        if p.prev is not None:
            if p.prev in prev_seen:
                report.prev_chain.append(
                    Violation(f"previous job {p.prev} assigned to both jobs "
                              f"{prev_seen[p.prev]} and {j.id}", job=j.id)
                )
            else:
                prev_seen[p.prev] = j.id
            if p.prev == j.id:
                report.prev_chain.append(Violation("job is its own predecessor", job=j.id))
            elif p.prev not in placements:
                report.prev_chain.append(
                    Violation(f"previous job {p.prev} is not in the schedule", job=j.id)
                )
            elif placements[p.prev].machine != p.machine:
                report.prev_chain.append(
                    Violation(f"previous job {p.prev} runs on machine "
                              f"{placements[p.prev].machine}, not {p.machine}", job=j.id)
                )
    by_machine: dict[int, list[Placement]] = {}
    for j in jobs_placed:
        by_machine.setdefault(placements[j.id].machine, []).append(placements[j.id])
    for mid, group in sorted(by_machine.items()):
        anchors = [p for p in group if p.prev is None]
        if len(anchors) != 1:
            report.prev_chain.append(
                Violation(f"machine {mid} has {len(anchors)} chain anchors, expected 1")
            )
            continue
        successor = {p.prev: p for p in group if p.prev is not None}
        seen = []
        cur = anchors[0]
        while cur is not None:
            seen.append(cur.job)
            nxt = successor.get(cur.job)
            if nxt is not None and nxt.start < cur.end:
                report.prev_chain.append(
                    Violation(f"start {nxt.start} before previous job {cur.job} "
                              f"end {cur.end}", job=nxt.job)
                )
            cur = nxt
            if len(seen) > len(group):
                break
        if sorted(seen) != sorted(p.job for p in group):
            report.prev_chain.append(
                Violation(f"machine {mid} chain covers jobs {sorted(seen)}, "
                          f"expected {sorted(p.job for p in group)}")
            )

    # per-slot resource usage from scratch
    if instance.resources and horizon > 0:
        usage = {r.id: np.zeros(horizon, dtype=np.int64) for r in instance.resources}
        running: dict[int, list[tuple[int, int, int]]] = {r.id: [] for r in instance.resources}
        for j in jobs_placed:
            p = placements[j.id]
            if p.machine not in j.eligible:
                continue
            ranges = _true_working_ranges(instance, p)
            for rid, amt in instance.combined_demands(j, p.machine):
                for a, b in ranges:
                    a2, b2 = max(0, a), min(horizon, b)
                    if a2 < b2:
                        usage[rid][a2:b2] += amt
                        running[rid].append((a2, b2, j.id))
        for r in instance.resources:
            over = usage[r.id] > instance.capacity_array(r.id)
            if not over.any():
                continue
            idx = np.nonzero(over)[0]
            run_start = int(idx[0])
            prev_slot = run_start
            runs = []
            for s in idx[1:]:
                s = int(s)
                if s != prev_slot + 1:
                    runs.append((run_start, prev_slot))
                    run_start = s
                prev_slot = s
            runs.append((run_start, prev_slot))
            for a, b in runs:
                involved = sorted(
                    {jid for (ra, rb, jid) in running[r.id] if ra <= b and rb > a}
                )
                cap = int(instance.capacity_array(r.id)[a])
                report.resource_capacity.append(
                    Violation(
                        f"usage {int(usage[r.id][a])} exceeds capacity {cap} "
                        f"on slots [{a},{b + 1})",
                        resource=r.id,
                        slot=a,
                        jobs=tuple(involved),
                    )
                )
    return report
