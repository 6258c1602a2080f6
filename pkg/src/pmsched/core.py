"""Immutable domain model, instance validation and JSON interchange.

Time is discrete: all durations, lags and calendar boundaries are
non-negative integers over the horizon ``[0 .. V]``.  Every window in the
model is half-open ``[start, end)``; a job occupies the integer slots
``start .. end - 1`` except while paused by a machine downtime.  Under
this convention a job may end exactly at a downtime start and may start
exactly at a downtime end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

INSTANCE_FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    """Raised when an instance or schedule document is malformed."""


class SetupTable:
    """Dense sequence-dependent setup times, including machine-start dummies.

    Entries are indexed by (machine, predecessor, job) where the
    predecessor is either a job or the machine-start dummy of the machine
    (``prev=None``).  An entry is meaningful only when the job is eligible
    on the machine and the predecessor can actually occur on it; the
    ``provided`` mask tracks which entries were supplied.
    """

    def __init__(self, machine_ids: Iterable[int], job_ids: Iterable[int]):
        self.machine_ids = tuple(machine_ids)
        self.job_ids = tuple(job_ids)
        self.machine_pos = {m: i for i, m in enumerate(self.machine_ids)}
        # predecessor index 0 is the machine-start dummy, job j sits at 1 + rank(j)
        self.job_pos = {j: i for i, j in enumerate(self.job_ids)}
        k, n = len(self.machine_ids), len(self.job_ids)
        self.values = np.zeros((k, n + 1, n), dtype=np.int32)
        self.provided = np.zeros((k, n + 1, n), dtype=bool)

    def _pred_index(self, prev: int | None) -> int:
        return 0 if prev is None else 1 + self.job_pos[prev]

    def set(self, machine: int, prev: int | None, job: int, value: int) -> None:
        mi, pi, ji = self.machine_pos[machine], self._pred_index(prev), self.job_pos[job]
        self.values[mi, pi, ji] = value
        self.provided[mi, pi, ji] = True

    def get(self, machine: int, prev: int | None, job: int) -> int:
        mi, pi, ji = self.machine_pos[machine], self._pred_index(prev), self.job_pos[job]
        return int(self.values[mi, pi, ji])

    def has(self, machine: int, prev: int | None, job: int) -> bool:
        mi, pi, ji = self.machine_pos[machine], self._pred_index(prev), self.job_pos[job]
        return bool(self.provided[mi, pi, ji])

    def max_value(self) -> int:
        if not self.provided.any():
            return 0
        return int(self.values[self.provided].max())

    @classmethod
    def from_dict(
        cls,
        machine_ids: Iterable[int],
        job_ids: Iterable[int],
        mapping: Mapping,
    ) -> "SetupTable":
        """Build from the nested JSON layout {machine: {pred or dummy: {job: dur}}}."""
        table = cls(machine_ids, job_ids)
        for m_key, preds in mapping.items():
            m = int(m_key)
            dummy_key = f"b{m}"
            for p_key, jobs in preds.items():
                prev = None if str(p_key) == dummy_key else int(p_key)
                for j_key, dur in jobs.items():
                    table.set(m, prev, int(j_key), int(dur))
        return table

    def to_dict(self) -> dict:
        out: dict = {}
        for mi, m in enumerate(self.machine_ids):
            preds: dict = {}
            for pi in range(self.values.shape[1]):
                row = {
                    str(self.job_ids[ji]): int(self.values[mi, pi, ji])
                    for ji in range(self.values.shape[2])
                    if self.provided[mi, pi, ji]
                }
                if row:
                    key = f"b{m}" if pi == 0 else str(self.job_ids[pi - 1])
                    preds[key] = row
            out[str(m)] = preds
        return out


@dataclass(frozen=True)
class Machine:
    """A machine with downtime windows and per-job-run resource demands."""

    id: int
    downtimes: tuple[tuple[int, int], ...] = ()
    demands: Mapping[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Resource:
    """A shared resource whose capacity varies over calendar intervals."""

    id: int
    capacity: tuple[tuple[int, int, int], ...] = ()

    @property
    def cmax(self) -> int:
        """Maximum capacity provided anywhere in the horizon."""
        return max((c for _, _, c in self.capacity), default=0)


@dataclass(frozen=True)
class Job:
    id: int
    eligible: tuple[int, ...]
    proc: Mapping[int, int]
    due: int
    release: int
    demands: Mapping[int, int] = field(default_factory=dict)
    preds: tuple[tuple[int, int], ...] = ()
    material: int | None = None


@dataclass(eq=False)
class Instance:
    """A complete problem description.

    Instances are immutable by convention after construction and safe to
    share across concurrent workers.  ``name`` identifies the instance in
    reports and schedule documents; it is not part of the interchange
    schema and never affects equality of the serialized form.
    """

    machines: tuple[Machine, ...]
    jobs: tuple[Job, ...]
    resources: tuple[Resource, ...]
    setup: SetupTable
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    horizon: int = 0
    name: str = ""

    def __post_init__(self) -> None:
        self._job_by_id = {j.id: j for j in self.jobs}
        self._machine_by_id = {m.id: m for m in self.machines}
        self._resource_by_id = {r.id: r for r in self.resources}
        self._cap_arrays: dict[int, np.ndarray] = {}

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def k(self) -> int:
        return len(self.machines)

    def job(self, jid: int) -> Job:
        return self._job_by_id[jid]

    def machine(self, mid: int) -> Machine:
        return self._machine_by_id[mid]

    def resource(self, rid: int) -> Resource:
        return self._resource_by_id[rid]

    def capacity_array(self, rid: int) -> np.ndarray:
        """Per-slot capacity of a resource over [0, V), built lazily."""
        arr = self._cap_arrays.get(rid)
        if arr is None:
            arr = np.zeros(self.horizon, dtype=np.int64)
            for s, e, c in self._resource_by_id[rid].capacity:
                arr[max(0, s):min(self.horizon, e)] = c
            arr.setflags(write=False)
            self._cap_arrays[rid] = arr
        return arr

    def combined_demands(self, job: Job, machine_id: int) -> list[tuple[int, int]]:
        """Positive per-resource needs of running `job` on the machine (z + v)."""
        v = self._machine_by_id[machine_id].demands
        needs: dict[int, int] = dict(job.demands)
        for rid, amt in v.items():
            needs[rid] = needs.get(rid, 0) + amt
        return [(rid, amt) for rid, amt in sorted(needs.items()) if amt > 0]

    def max_setup(self) -> int:
        return self.setup.max_value()

    def big_m(self) -> float:
        """Penalty constant strictly dominating any feasible aggregate cost."""
        w1, w2, w3 = self.weights
        n, v = self.n, self.horizon
        return w1 * n * v + w2 * v + w3 * n * self.max_setup() + 1.0


@dataclass
class SolutionRepr:
    """Global job permutation plus a machine assignment per job."""

    order: list[int]
    assign: dict[int, int]

    def copy(self) -> "SolutionRepr":
        return SolutionRepr(list(self.order), dict(self.assign))

    def position(self, jid: int) -> int:
        return self.order.index(jid)


@dataclass(frozen=True)
class Placement:
    """One job's slot in a decoded schedule."""

    job: int
    machine: int
    start: int
    end: int
    setup_len: int
    prev: int | None
    spanned: tuple[tuple[int, int], ...] = ()
    violated: str | None = None

    def working_ranges(self) -> list[tuple[int, int]]:
        """The half-open slot ranges the job actually occupies (pauses removed)."""
        return split_working(self.start, self.end, self.spanned)


def split_working(start: int, end: int, spanned: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    ranges = []
    cur = start
    for us, ue in spanned:
        if cur < us:
            ranges.append((cur, us))
        cur = ue
    if cur < end:
        ranges.append((cur, end))
    return ranges


@dataclass
class Schedule:
    placements: dict[int, Placement]

    def machine_chains(self) -> dict[int, list[Placement]]:
        """Placements per machine in increasing start order."""
        chains: dict[int, list[Placement]] = {}
        for p in self.placements.values():
            chains.setdefault(p.machine, []).append(p)
        for seq in chains.values():
            seq.sort(key=lambda p: (p.start, p.job))
        return chains

    @property
    def makespan(self) -> int:
        return max((p.end for p in self.placements.values()), default=0)


@dataclass(frozen=True)
class CostBreakdown:
    tardiness: int
    makespan: int
    setup_total: int
    violations: int
    big_m: float
    aggregate: float


@dataclass(frozen=True)
class Defect:
    """A violated instance invariant, as data rather than an exception."""

    invariant: str
    entity: str
    detail: str

    def __str__(self) -> str:  # pragma: no cover - convenience only
        return f"[{self.invariant}] {self.entity}: {self.detail}"


def precedence_cycle(instance: Instance) -> list[int] | None:
    """Return job ids on a precedence cycle, or None if the graph is acyclic."""
    indeg = {j.id: 0 for j in instance.jobs}
    dependents: dict[int, list[int]] = {j.id: [] for j in instance.jobs}
    for j in instance.jobs:
        for pred, _ in j.preds:
            if pred in indeg and pred != j.id:
                indeg[j.id] += 1
                dependents[pred].append(j.id)
    ready = [jid for jid, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        jid = ready.pop()
        seen += 1
        for dep in dependents[jid]:
            indeg[dep] -= 1
            if indeg[dep] == 0:
                ready.append(dep)
    if seen == len(indeg):
        return None
    return sorted(jid for jid, d in indeg.items() if d > 0)


def validate_instance(instance: Instance) -> list[Defect]:
    """Check every instance invariant; an empty list means well-formed."""
    defects: list[Defect] = []
    add = defects.append
    v = instance.horizon

    if v < 0:
        add(Defect("horizon", "instance", f"horizon must be >= 0, got {v}"))
    if any(w < 0 for w in instance.weights):
        add(Defect("weights", "instance", f"weights must be non-negative, got {instance.weights}"))

    mids = [m.id for m in instance.machines]
    if len(set(mids)) != len(mids):
        add(Defect("machine-ids", "machines", "duplicate machine ids"))
    jids = [j.id for j in instance.jobs]
    if len(set(jids)) != len(jids):
        add(Defect("job-ids", "jobs", "duplicate job ids"))
    rids = [r.id for r in instance.resources]
    if len(set(rids)) != len(rids):
        add(Defect("resource-ids", "resources", "duplicate resource ids"))
    mid_set, jid_set, rid_set = set(mids), set(jids), set(rids)

    for m in instance.machines:
        prev_end = 0
        for us, ue in m.downtimes:
            if us >= ue:
                add(Defect("downtime-window", f"machine {m.id}", f"window [{us},{ue}) is empty or inverted"))
            if us < prev_end:
                add(Defect("downtime-order", f"machine {m.id}", f"window [{us},{ue}) overlaps or is unsorted"))
            if us < 0 or ue > v:
                add(Defect("downtime-bounds", f"machine {m.id}", f"window [{us},{ue}) outside [0,{v})"))
            prev_end = max(prev_end, ue)
        for rid, amt in m.demands.items():
            if rid not in rid_set:
                add(Defect("machine-demand", f"machine {m.id}", f"unknown resource {rid}"))
            if amt < 0:
                add(Defect("machine-demand", f"machine {m.id}", f"negative demand on resource {rid}"))

    for r in instance.resources:
        cursor = 0
        for s, e, c in r.capacity:
            if s >= e:
                add(Defect("capacity-interval", f"resource {r.id}", f"interval [{s},{e}) is empty or inverted"))
            if c < 0:
                add(Defect("capacity-interval", f"resource {r.id}", f"negative capacity {c} on [{s},{e})"))
            if s != cursor:
                kind = "coverage-gap" if s > cursor else "coverage-overlap"
                add(Defect(kind, f"resource {r.id}", f"expected interval starting at {cursor}, got [{s},{e})"))
            cursor = e
        if cursor != v:
            add(Defect("coverage-gap", f"resource {r.id}", f"intervals end at {cursor}, horizon is {v}"))

    for j in instance.jobs:
        if not j.eligible:
            add(Defect("eligibility", f"job {j.id}", "no eligible machine"))
        if any(m not in mid_set for m in j.eligible):
            add(Defect("eligibility", f"job {j.id}", f"unknown machine in eligible set {j.eligible}"))
        if set(j.proc.keys()) != set(j.eligible):
            add(Defect("processing-times", f"job {j.id}",
                       "processing times must be defined exactly for the eligible machines"))
        if any(d < 0 for d in j.proc.values()):
            add(Defect("processing-times", f"job {j.id}", "negative processing time"))
        if j.due < 0:
            add(Defect("due-date", f"job {j.id}", f"negative due date {j.due}"))
        if j.release < 0:
            add(Defect("release-date", f"job {j.id}", f"negative release date {j.release}"))
        for rid, amt in j.demands.items():
            if rid not in rid_set:
                add(Defect("job-demand", f"job {j.id}", f"unknown resource {rid}"))
            if amt < 0:
                add(Defect("job-demand", f"job {j.id}", f"negative demand on resource {rid}"))
        for pred, lag in j.preds:
            if pred == j.id:
                add(Defect("self-precedence", f"job {j.id}", "job lists itself as predecessor"))
            elif pred not in jid_set:
                add(Defect("precedence", f"job {j.id}", f"unknown predecessor {pred}"))
            if lag < 0:
                add(Defect("precedence-lag", f"job {j.id}", f"negative lag {lag} on predecessor {pred}"))

    cycle = precedence_cycle(instance)
    if cycle is not None:
        add(Defect("precedence-cycle", "jobs " + ",".join(map(str, cycle)), "precedence graph has a cycle"))

    for m in instance.machines:
        if m.id not in mid_set:
            continue
        eligible_here = [j for j in instance.jobs if m.id in j.eligible]
        preds_here: list[int | None] = [None] + [j.id for j in eligible_here]
        for j in eligible_here:
            for p in preds_here:
                if p == j.id:
                    continue
                if not instance.setup.has(m.id, p, j.id):
                    label = f"b{m.id}" if p is None else str(p)
                    add(Defect("setup-table", f"machine {m.id}",
                               f"missing setup entry for predecessor {label} -> job {j.id}"))
                elif instance.setup.get(m.id, p, j.id) < 0:
                    label = f"b{m.id}" if p is None else str(p)
                    add(Defect("setup-table", f"machine {m.id}",
                               f"negative setup for predecessor {label} -> job {j.id}"))
    return defects


def precedence_order_ok(instance: Instance, repr: SolutionRepr) -> bool:
    """True iff every predecessor appears before its dependent in the permutation."""
    pos = {jid: i for i, jid in enumerate(repr.order)}
    for j in instance.jobs:
        pj = pos[j.id]
        for pred, _ in j.preds:
            if pos[pred] >= pj:
                return False
    return True


# --- JSON interchange -------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    doc: dict = {
        "version": INSTANCE_FORMAT_VERSION,
        "horizon": instance.horizon,
        "weights": [float(w) for w in instance.weights],
        "machines": [
            {
                "id": m.id,
                "downtimes": [[us, ue] for us, ue in m.downtimes],
                "demands": {str(r): int(a) for r, a in sorted(m.demands.items())},
            }
            for m in instance.machines
        ],
        "resources": [
            {"id": r.id, "capacity": [[s, e, c] for s, e, c in r.capacity]}
            for r in instance.resources
        ],
        "jobs": [],
        "setup": instance.setup.to_dict(),
    }
    for j in instance.jobs:
        jd: dict = {
            "id": j.id,
            "eligible": list(j.eligible),
            "proc": {str(m): int(d) for m, d in sorted(j.proc.items())},
            "due": j.due,
            "release": j.release,
            "demands": {str(r): int(a) for r, a in sorted(j.demands.items())},
            "preds": [[p, lag] for p, lag in j.preds],
        }
        if j.material is not None:
            jd["material"] = j.material
        doc["jobs"].append(jd)
    return doc


def instance_from_dict(doc: Mapping, name: str = "") -> Instance:
    try:
        if int(doc["version"]) != INSTANCE_FORMAT_VERSION:
            raise InstanceFormatError(f"unsupported instance format version {doc['version']}")
        machines = tuple(
            Machine(
                id=int(m["id"]),
                downtimes=tuple((int(a), int(b)) for a, b in m.get("downtimes", [])),
                demands={int(r): int(a) for r, a in m.get("demands", {}).items()},
            )
            for m in doc["machines"]
        )
        resources = tuple(
            Resource(
                id=int(r["id"]),
                capacity=tuple((int(s), int(e), int(c)) for s, e, c in r.get("capacity", [])),
            )
            for r in doc["resources"]
        )
        jobs = tuple(
            Job(
                id=int(j["id"]),
                eligible=tuple(int(m) for m in j["eligible"]),
                proc={int(m): int(d) for m, d in j["proc"].items()},
                due=int(j["due"]),
                release=int(j["release"]),
                demands={int(r): int(a) for r, a in j.get("demands", {}).items()},
                preds=tuple((int(p), int(lag)) for p, lag in j.get("preds", [])),
                material=j.get("material"),
            )
            for j in doc["jobs"]
        )
        setup = SetupTable.from_dict(
            [m.id for m in machines], [j.id for j in jobs], doc.get("setup", {})
        )
        w = doc["weights"]
        weights = (float(w[0]), float(w[1]), float(w[2]))
        return Instance(
            machines=machines,
            jobs=jobs,
            resources=resources,
            setup=setup,
            weights=weights,
            horizon=int(doc["horizon"]),
            name=name,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"malformed instance document: {exc}") from exc


def write_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def read_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    import os

    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return instance_from_dict(doc, name=stem)


def schedule_to_dict(schedule: Schedule, cost: CostBreakdown, instance_id: str = "") -> dict:
    jobs = []
    for jid in sorted(schedule.placements):
        p = schedule.placements[jid]
        jobs.append(
            {
                "id": p.job,
                "machine": p.machine,
                "start": p.start,
                "end": p.end,
                "setup_len": p.setup_len,
                "prev": p.prev if p.prev is not None else f"b{p.machine}",
                "spanned": [[us, ue] for us, ue in p.spanned],
                "violated": p.violated,
            }
        )
    return {
        "instance_id": instance_id,
        "jobs": jobs,
        "cost": {
            "T": cost.tardiness,
            "C": cost.makespan,
            "S": cost.setup_total,
            "violations": cost.violations,
            "aggregate": cost.aggregate,
        },
    }


def schedule_from_dict(doc: Mapping) -> tuple[Schedule, dict]:
    try:
        placements = {}
        for j in doc["jobs"]:
            prev = j["prev"]
            prev_id = None if isinstance(prev, str) else int(prev)
            placements[int(j["id"])] = Placement(
                job=int(j["id"]),
                machine=int(j["machine"]),
                start=int(j["start"]),
                end=int(j["end"]),
                setup_len=int(j["setup_len"]),
                prev=prev_id,
                spanned=tuple((int(a), int(b)) for a, b in j.get("spanned", [])),
                violated=j.get("violated"),
            )
        return Schedule(placements), dict(doc.get("cost", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed schedule document: {exc}") from exc


def write_schedule(schedule: Schedule, cost: CostBreakdown, path, instance_id: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schedule_to_dict(schedule, cost, instance_id), fh, indent=2)
        fh.write("\n")


def read_schedule(path) -> tuple[Schedule, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return schedule_from_dict(json.load(fh))
