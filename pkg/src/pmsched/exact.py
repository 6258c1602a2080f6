"""Ground-truth oracles for small instances and constraint-model export.

Everything in this module reimplements the scheduling semantics from the
domain model alone: end times, calendar legality, per-slot resource
accounting and costs are all computed here with plain integer loops and
share no code with the decoder.  That independence is what makes the
oracles usable as cross-checks.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

from .core import (
    CostBreakdown,
    Instance,
    Placement,
    Schedule,
    SolutionRepr,
    validate_instance,
)

OPTIMAL = "OPTIMAL"
BEST = "BEST"
UNSAT = "UNSAT"
NONE_FEASIBLE = "NONE_FEASIBLE"
BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


@dataclass(frozen=True)
class PlaceholderJob:
    """Fixed synthetic task soaking up capacity below a resource's maximum."""

    resource: int
    start: int
    end: int
    demand: int


@dataclass(frozen=True)
class SearchLimits:
    node_cap: int = 10_000_000


@dataclass
class OracleResult:
    status: str
    schedule: Schedule | None = None
    cost: CostBreakdown | None = None
    repr: SolutionRepr | None = None
    nodes: int = 0


def build_placeholder_jobs(instance: Instance) -> list[PlaceholderJob]:
    """One placeholder per capacity interval below the resource maximum."""
    out: list[PlaceholderJob] = []
    for r in instance.resources:
        cmax = r.cmax
        for s, e, c in r.capacity:
            if c < cmax:
                out.append(PlaceholderJob(resource=r.id, start=s, end=e, demand=cmax - c))
    return out


def machine_periods(instance: Instance) -> dict[int, list[tuple[int, int]]]:
    """Available intervals between downtimes per machine, empty ones dropped."""
    periods: dict[int, list[tuple[int, int]]] = {}
    for m in instance.machines:
        cur = 0
        spans = []
        for us, ue in m.downtimes:
            if cur < us:
                spans.append((cur, us))
            cur = max(cur, ue)
        if cur < instance.horizon:
            spans.append((cur, instance.horizon))
        periods[m.id] = spans
    return periods


@dataclass
class ModelArtifacts:
    """Derived structures the exported constraint model is built from."""

    machine_periods: dict[int, list[tuple[int, int]]]
    max_periods: int
    placeholders: list[PlaceholderJob]
    cumulative_groups: list[tuple[int, int]] = field(default_factory=list)


def model_artifacts(instance: Instance) -> ModelArtifacts:
    periods = machine_periods(instance)
    return ModelArtifacts(
        machine_periods=periods,
        max_periods=max((len(p) for p in periods.values()), default=0) or 1,
        placeholders=build_placeholder_jobs(instance),
        cumulative_groups=[(r.id, r.cmax) for r in instance.resources],
    )


# --- shared primitive arithmetic (independent of the decoder) ---------------

def _end_with_pauses(start: int, work: int, downtimes) -> tuple[int, list[tuple[int, int]]]:
    end = start + work
    spanned = []
    for us, ue in downtimes:
        if start < us and end > us:
            end += ue - us
            spanned.append((us, ue))
    return end, spanned


def _start_legal(t: int, downtimes) -> bool:
    return all(not (us <= t < ue) for us, ue in downtimes)


def _work_slots(start: int, end: int, spanned) -> list[tuple[int, int]]:
    out = []
    cur = start
    for us, ue in spanned:
        if cur < us:
            out.append((cur, us))
        cur = ue
    if cur < end:
        out.append((cur, end))
    return out


def _capacity_table(instance: Instance) -> dict[int, list[int]]:
    caps: dict[int, list[int]] = {}
    for r in instance.resources:
        arr = [0] * instance.horizon
        for s, e, c in r.capacity:
            for t in range(max(0, s), min(instance.horizon, e)):
                arr[t] = c
        caps[r.id] = arr
    return caps


def _needs(instance: Instance, jid: int, mid: int) -> list[tuple[int, int]]:
    job = instance.job(jid)
    v = instance.machine(mid).demands
    merged: dict[int, int] = dict(job.demands)
    for rid, amt in v.items():
        merged[rid] = merged.get(rid, 0) + amt
    return [(rid, amt) for rid, amt in sorted(merged.items()) if amt > 0]


def _aggregate(instance: Instance, placements: dict[int, Placement]) -> CostBreakdown:
    w1, w2, w3 = instance.weights
    tard = setup_total = makespan = 0
    for j in instance.jobs:
        p = placements[j.id]
        tard += max(0, p.end - j.due)
        makespan = max(makespan, p.end)
        setup_total += p.setup_len
    aggregate = w1 * tard + w2 * makespan + w3 * setup_total
    return CostBreakdown(
        tardiness=tard,
        makespan=makespan,
        setup_total=setup_total,
        violations=0,
        big_m=instance.big_m(),
        aggregate=aggregate,
    )


class _Budget(Exception):
    pass


# --- exhaustive branch-and-prune over (machine, start) pairs ----------------

def exhaustive_time_indexed(instance: Instance, limits: SearchLimits | None = None) -> OracleResult:
    """Provably optimal schedule by branching over every (machine, start).

    Jobs are committed in non-decreasing start order (ties by job id), so
    machine predecessor chains and setups are well defined at commit time.
    Partial-cost pruning against the incumbent never discards a feasible
    improvement because remaining jobs can only add cost.
    """
    defects = validate_instance(instance)
    if defects:
        raise ValueError(f"invalid instance: {defects[0]}")
    limits = limits or SearchLimits()
    horizon = instance.horizon
    w1, w2, w3 = instance.weights
    caps = _capacity_table(instance)
    usage = {rid: [0] * horizon for rid in caps}
    machine_last: dict[int, tuple[int | None, int]] = {m.id: (None, 0) for m in instance.machines}
    downtimes = {m.id: m.downtimes for m in instance.machines}
    ends: dict[int, int] = {}
    placements: dict[int, Placement] = {}
    remaining = {j.id for j in instance.jobs}
    preds = {j.id: tuple(j.preds) for j in instance.jobs}
    order_key = {j.id: (j.due, j.id) for j in instance.jobs}

    best: dict = {"aggregate": None, "schedule": None, "cost": None}
    counter = {"nodes": 0}

    def commit_ranges(ranges, needs, sign):
        for rid, amt in needs:
            arr = usage[rid]
            for a, b in ranges:
                for t in range(a, b):
                    arr[t] += sign * amt

    def fits(ranges, needs) -> bool:
        for rid, amt in needs:
            arr = usage[rid]
            cap = caps[rid]
            for a, b in ranges:
                for t in range(a, b):
                    if arr[t] + amt > cap[t]:
                        return False
        return True

    def dfs(depth, last_start, last_jid, t_acc, s_acc, c_acc):
        if depth == len(instance.jobs):
            aggregate = w1 * t_acc + w2 * c_acc + w3 * s_acc
            if best["aggregate"] is None or aggregate < best["aggregate"]:
                best["aggregate"] = aggregate
                best["schedule"] = Schedule(dict(placements))
                best["cost"] = _aggregate(instance, placements)
            return
        ready = sorted(
            (jid for jid in remaining if all(p in ends for p, _ in preds[jid])),
            key=lambda jid: order_key[jid],
        )
        for jid in ready:
            job = instance.job(jid)
            for mid in sorted(job.eligible):
                prev, prev_end = machine_last[mid]
                lb = max(job.release, prev_end, last_start)
                for p, lag in preds[jid]:
                    lb = max(lb, ends[p] + lag)
                setup_len = instance.setup.get(mid, prev, jid)
                work = setup_len + job.proc[mid]
                needs = _needs(instance, jid, mid)
                for t in range(lb, horizon + 1):
                    # every examined (job, machine, start) candidate is a node,
                    # so the cap bounds total work, not just commits
                    counter["nodes"] += 1
                    if counter["nodes"] > limits.node_cap:
                        raise _Budget()
                    if t == last_start and jid < last_jid:
                        continue
                    if not _start_legal(t, downtimes[mid]):
                        continue
                    end, spanned = _end_with_pauses(t, work, downtimes[mid])
                    if end > horizon:
                        break
                    ranges = _work_slots(t, end, spanned)
                    if not fits(ranges, needs):
                        continue
                    new_t = t_acc + max(0, end - job.due)
                    new_c = max(c_acc, end)
                    new_s = s_acc + setup_len
                    if (
                        best["aggregate"] is not None
                        and w1 * new_t + w2 * new_c + w3 * new_s >= best["aggregate"]
                    ):
                        continue
                    placements[jid] = Placement(
                        job=jid, machine=mid, start=t, end=end,
                        setup_len=setup_len, prev=prev, spanned=tuple(spanned),
                    )
                    commit_ranges(ranges, needs, +1)
                    machine_last[mid] = (jid, end)
                    ends[jid] = end
                    remaining.discard(jid)
                    dfs(depth + 1, t, jid, new_t, new_s, new_c)
                    remaining.add(jid)
                    del ends[jid]
                    machine_last[mid] = (prev, prev_end)
                    commit_ranges(ranges, needs, -1)
                    del placements[jid]

    try:
        dfs(0, 0, 0, 0, 0, 0)
    except _Budget:
        return OracleResult(status=BUDGET_EXCEEDED, nodes=counter["nodes"])
    if best["aggregate"] is None:
        return OracleResult(status=UNSAT, nodes=counter["nodes"])
    return OracleResult(
        status=OPTIMAL, schedule=best["schedule"], cost=best["cost"], nodes=counter["nodes"]
    )


# --- full enumeration of solution representations ---------------------------

def _greedy_place(instance: Instance, order, assign, caps) -> dict[int, Placement] | None:
    """Earliest-start placement by per-slot scanning; None when any job is stuck."""
    horizon = instance.horizon
    usage = {rid: [0] * horizon for rid in caps}
    machine_last: dict[int, tuple[int | None, int]] = {m.id: (None, 0) for m in instance.machines}
    ends: dict[int, int] = {}
    placements: dict[int, Placement] = {}
    for jid in order:
        job = instance.job(jid)
        mid = assign[jid]
        downtimes = instance.machine(mid).downtimes
        prev, prev_end = machine_last[mid]
        lb = max(job.release, prev_end)
        for p, lag in job.preds:
            lb = max(lb, ends[p] + lag)
        setup_len = instance.setup.get(mid, prev, jid)
        work = setup_len + job.proc[mid]
        needs = _needs(instance, jid, mid)
        placed = None
        for t in range(lb, horizon + 1):
            if not _start_legal(t, downtimes):
                continue
            end, spanned = _end_with_pauses(t, work, downtimes)
            if end > horizon:
                break
            ok = True
            for rid, amt in needs:
                arr, cap = usage[rid], caps[rid]
                for a, b in _work_slots(t, end, spanned):
                    if any(arr[x] + amt > cap[x] for x in range(a, b)):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                placed = (t, end, spanned)
                break
        if placed is None:
            return None
        t, end, spanned = placed
        for rid, amt in needs:
            arr = usage[rid]
            for a, b in _work_slots(t, end, spanned):
                for x in range(a, b):
                    arr[x] += amt
        placements[jid] = Placement(
            job=jid, machine=mid, start=t, end=end,
            setup_len=setup_len, prev=prev, spanned=tuple(spanned),
        )
        machine_last[mid] = (jid, end)
        ends[jid] = end
    return placements


def enumerate_representations(instance: Instance, limits: SearchLimits | None = None) -> OracleResult:
    """Best feasible result over every precedence-valid permutation/assignment."""
    defects = validate_instance(instance)
    if defects:
        raise ValueError(f"invalid instance: {defects[0]}")
    limits = limits or SearchLimits()
    jids = [j.id for j in instance.jobs]
    combos = math.factorial(len(jids))
    for j in instance.jobs:
        combos *= len(j.eligible)
    if combos > limits.node_cap:
        return OracleResult(status=BUDGET_EXCEEDED)
    caps = _capacity_table(instance)
    pred_map = {j.id: [p for p, _ in j.preds] for j in instance.jobs}
    eligible = {j.id: sorted(j.eligible) for j in instance.jobs}

    best: tuple[float, SolutionRepr, dict] | None = None
    nodes = 0
    for perm in itertools.permutations(jids):
        pos = {jid: i for i, jid in enumerate(perm)}
        if any(pos[p] > pos[jid] for jid in perm for p in pred_map[jid]):
            continue
        for machines in itertools.product(*(eligible[jid] for jid in jids)):
            nodes += 1
            assign = dict(zip(jids, machines))
            placements = _greedy_place(instance, perm, assign, caps)
            if placements is None:
                continue
            cost = _aggregate(instance, placements)
            if best is None or cost.aggregate < best[0]:
                best = (cost.aggregate, SolutionRepr(list(perm), assign), placements)
    if best is None:
        return OracleResult(status=NONE_FEASIBLE, nodes=nodes)
    aggregate, repr_, placements = best
    return OracleResult(
        status=BEST,
        schedule=Schedule(placements),
        cost=_aggregate(instance, placements),
        repr=repr_,
        nodes=nodes,
    )


# --- constraint model export -------------------------------------------------

def render_model(instance: Instance) -> tuple[str, str]:
    """Deterministic MiniZinc model and data texts for the instance."""
    arts = model_artifacts(instance)
    n, k = instance.n, instance.k
    jobs = instance.jobs
    machines = instance.machines
    resources = instance.resources
    horizon = instance.horizon
    res_index = {r.id: i + 1 for i, r in enumerate(resources)}
    job_index = {j.id: i + 1 for i, j in enumerate(jobs)}
    mach_index = {m.id: i + 1 for i, m in enumerate(machines)}

    max_dt = max((len(m.downtimes) for m in machines), default=0)
    max_per = arts.max_periods

    # data file -----------------------------------------------------------
    lines = ["% generated data file; index maps to source ids follow"]
    for j in jobs:
        lines.append(f"% job {job_index[j.id]} = {j.id}")
    for m in machines:
        lines.append(f"% machine {mach_index[m.id]} = {m.id}")
    for r in resources:
        lines.append(f"% resource {res_index[r.id]} = {r.id}")
    lines += [
        f"n = {n};",
        f"k = {k};",
        f"nRes = {len(resources)};",
        f"V = {horizon};",
        f"maxDT = {max_dt};",
        f"maxPer = {max_per};",
        f"w1 = {float(instance.weights[0])};",
        f"w2 = {float(instance.weights[1])};",
        f"w3 = {float(instance.weights[2])};",
    ]
    elig = ", ".join(
        "{" + ",".join(str(mach_index[m]) for m in sorted(j.eligible)) + "}" for j in jobs
    )
    lines.append(f"elig = [{elig}];")
    proc_vals = []
    for j in jobs:
        for m in machines:
            proc_vals.append(str(j.proc.get(m.id, 0)))
    lines.append(f"proc = array2d(1..{n}, 1..{k}, [{', '.join(proc_vals)}]);")
    setup_vals = []
    for m in machines:
        for p in [None] + [jp.id for jp in jobs]:
            for j in jobs:
                if p == j.id or not instance.setup.has(m.id, p, j.id):
                    setup_vals.append("0")
                else:
                    setup_vals.append(str(instance.setup.get(m.id, p, j.id)))
    lines.append(f"setup = array3d(1..{k}, 0..{n}, 1..{n}, [{', '.join(setup_vals)}]);")
    lines.append(f"release = [{', '.join(str(j.release) for j in jobs)}];")
    lines.append(f"due = [{', '.join(str(j.due) for j in jobs)}];")
    z_vals = [str(j.demands.get(r.id, 0)) for j in jobs for r in resources]
    lines.append(f"z = array2d(1..{n}, 1..{len(resources)}, [{', '.join(z_vals)}]);")
    v_vals = [str(m.demands.get(r.id, 0)) for m in machines for r in resources]
    lines.append(f"v = array2d(1..{k}, 1..{len(resources)}, [{', '.join(v_vals)}]);")
    dts, dte = [], []
    for m in machines:
        pads = list(m.downtimes) + [(horizon, horizon)] * (max_dt - len(m.downtimes))
        dts += [str(us) for us, _ in pads]
        dte += [str(ue) for _, ue in pads]
    lines.append(f"dtS = array2d(1..{k}, 1..{max_dt}, [{', '.join(dts)}]);")
    lines.append(f"dtE = array2d(1..{k}, 1..{max_dt}, [{', '.join(dte)}]);")
    pers, pere = [], []
    for m in machines:
        spans = arts.machine_periods[m.id]
        pads = spans + [(horizon, horizon)] * (max_per - len(spans))
        pers += [str(a) for a, _ in pads]
        pere += [str(b) for _, b in pads]
    lines.append(f"perS = array2d(1..{k}, 1..{max_per}, [{', '.join(pers)}]);")
    lines.append(f"perE = array2d(1..{k}, 1..{max_per}, [{', '.join(pere)}]);")
    prec = [
        (job_index[j.id], job_index[p], lag) for j in jobs for p, lag in j.preds
    ]
    lines.append(f"nPrec = {len(prec)};")
    lines.append(f"precJob = [{', '.join(str(a) for a, _, _ in prec)}];")
    lines.append(f"precPred = [{', '.join(str(b) for _, b, _ in prec)}];")
    lines.append(f"precLag = [{', '.join(str(c) for _, _, c in prec)}];")
    ph = arts.placeholders
    lines.append(f"nPH = {len(ph)};")
    lines.append(f"phRes = [{', '.join(str(res_index[p.resource]) for p in ph)}];")
    lines.append(f"phStart = [{', '.join(str(p.start) for p in ph)}];")
    lines.append(f"phEnd = [{', '.join(str(p.end) for p in ph)}];")
    lines.append(f"phDemand = [{', '.join(str(p.demand) for p in ph)}];")
    dzn = "\n".join(lines) + "\n"

    # model file ----------------------------------------------------------
    mzn = _MODEL_HEADER
    groups = []
    for r in resources:
        ri = res_index[r.id]
        groups.append(
            f"""% resource {ri}: calendar dips become fixed placeholder tasks
constraint cumulative(
  [partStart[j, p] | j in JOB, p in PER] ++ [phStart[i] | i in PH where phRes[i] == {ri}],
  [partDur[j, p] | j in JOB, p in PER] ++ [phEnd[i] - phStart[i] | i in PH where phRes[i] == {ri}],
  [z[j, {ri}] + v[mach[j], {ri}] | j in JOB, p in PER] ++ [phDemand[i] | i in PH where phRes[i] == {ri}],
  {r.cmax});
""")
    mzn += "\n" + "".join(groups) + _MODEL_FOOTER
    return mzn, dzn


_MODEL_HEADER = """% Parallel machine schedule with sequence setups, precedence lags,
% machine downtimes (jobs pause across them) and calendar resources.
% All windows are half-open [start, end).
include "globals.mzn";

int: n;
int: k;
int: nRes;
int: V;
int: maxDT;
int: maxPer;
int: nPrec;
int: nPH;
float: w1;
float: w2;
float: w3;

set of int: JOB = 1..n;
set of int: MACH = 1..k;
set of int: JOBX = 1..n+k;  % jobs, then one start dummy per machine
set of int: DT = 1..maxDT;
set of int: PER = 1..maxPer;
set of int: PH = 1..nPH;

array[JOB] of set of int: elig;
array[JOB, MACH] of int: proc;
array[MACH, 0..n, JOB] of int: setup;  % predecessor 0 is the machine start
array[JOB] of int: release;
array[JOB] of int: due;
array[JOB, 1..nRes] of int: z;
array[MACH, 1..nRes] of int: v;
array[MACH, DT] of int: dtS;
array[MACH, DT] of int: dtE;
array[MACH, PER] of int: perS;
array[MACH, PER] of int: perE;
array[1..nPrec] of int: precJob;
array[1..nPrec] of int: precPred;
array[1..nPrec] of int: precLag;
array[PH] of int: phRes;
array[PH] of int: phStart;
array[PH] of int: phEnd;
array[PH] of int: phDemand;

array[JOB] of var 0..V: startT;
array[JOB] of var 0..V: endT;
array[JOB] of var MACH: mach;
array[JOB] of var JOBX: prevJ;
array[JOB, DT] of var bool: across;
array[JOB] of var PER: startPeriod;
array[JOB] of var PER: endPeriod;
array[JOB, PER] of var 0..V: partStart;
array[JOB, PER] of var 0..V: partDur;

array[JOBX] of var MACH: machX;
array[JOBX] of var 0..V: endX;
constraint forall(j in JOB)(machX[j] == mach[j] /\\ endX[j] == endT[j]);
constraint forall(m in MACH)(machX[n + m] == m /\\ endX[n + m] == 0);

array[JOB] of var 0..n: prevIdx;
constraint forall(j in JOB)(prevIdx[j] == if prevJ[j] > n then 0 else prevJ[j] endif);
array[JOB] of var int: setupOf;
constraint forall(j in JOB)(setupOf[j] == setup[mach[j], prevIdx[j], j]);

constraint forall(j in JOB)(mach[j] in elig[j]);
constraint alldifferent(prevJ);
constraint forall(j in JOB)(prevJ[j] != j);
constraint forall(j in JOB)(machX[prevJ[j]] == mach[j]);
constraint forall(j in JOB)(startT[j] >= endX[prevJ[j]]);
constraint forall(j in JOB)(startT[j] >= release[j]);

constraint forall(j in JOB, d in DT)(
  across[j, d] <-> (startT[j] < dtS[mach[j], d] /\\ endT[j] > dtE[mach[j], d]));
constraint forall(j in JOB)(
  endT[j] == startT[j] + setupOf[j] + proc[j, mach[j]]
           + sum(d in DT)(bool2int(across[j, d]) * (dtE[mach[j], d] - dtS[mach[j], d])));
constraint forall(j in JOB, d in DT)(
  (startT[j] < dtS[mach[j], d] \\/ startT[j] >= dtE[mach[j], d]) /\\
  (endT[j] <= dtS[mach[j], d] \\/ endT[j] > dtE[mach[j], d]));

constraint forall(i in 1..nPrec)(
  startT[precJob[i]] >= endT[precPred[i]] + precLag[i]);

constraint forall(j in JOB)(
  perS[mach[j], startPeriod[j]] <= startT[j] /\\ startT[j] < perE[mach[j], startPeriod[j]]);
constraint forall(j in JOB)(
  (endT[j] == startT[j] /\\ endPeriod[j] == startPeriod[j]) \\/
  (perS[mach[j], endPeriod[j]] < endT[j] /\\ endT[j] <= perE[mach[j], endPeriod[j]]));

constraint forall(j in JOB, p in PER)(
  partStart[j, p] == max(startT[j], perS[mach[j], p]) /\\
  partDur[j, p] == max(0, min(endT[j], perE[mach[j], p]) - max(startT[j], perS[mach[j], p])));
constraint forall(j in JOB)(
  sum(p in PER)(partDur[j, p]) == setupOf[j] + proc[j, mach[j]]);
"""

_MODEL_FOOTER = """
var int: T;
constraint T == sum(j in JOB)(max(0, endT[j] - due[j]));
var int: C;
constraint C == max([endT[j] | j in JOB]);
var int: S;
constraint S == sum(j in JOB)(setupOf[j]);
var float: objective;
constraint objective == w1 * int2float(T) + w2 * int2float(C) + w3 * int2float(S);

solve minimize objective;

output [
  "obj=", show(objective), "\\n"
] ++ [
  "job \\(j): machine \\(mach[j]) start \\(startT[j]) end \\(endT[j])\\n"
  | j in JOB
];
"""


def export_constraint_model(instance: Instance, base_path) -> tuple[str, str]:
    """Write `<base>.mzn` and `<base>.dzn`; returns the two paths."""
    base, ext = os.path.splitext(str(base_path))
    if ext not in ("", ".mzn"):
        base = str(base_path)
    mzn, dzn = render_model(instance)
    mzn_path, dzn_path = base + ".mzn", base + ".dzn"
    with open(mzn_path, "w", encoding="utf-8") as fh:
        fh.write(mzn)
    with open(dzn_path, "w", encoding="utf-8") as fh:
        fh.write(dzn)
    return mzn_path, dzn_path
