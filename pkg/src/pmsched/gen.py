"""Random instance generator certified by a reference solution.

The generator first draws job materials, processing and setup times and
resource demands, then packs all jobs back to back into a reference
solution.  Due dates, release dates, machine downtimes, precedence chains
and resource calendars are all derived from that reference, which therefore
stays feasible for the emitted instance: every generated instance is
satisfiable by construction.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    Instance,
    Job,
    Machine,
    Placement,
    Resource,
    Schedule,
    SetupTable,
    SolutionRepr,
    validate_instance,
)


class GenerationError(ValueError):
    """Raised when a configuration cannot produce a well-formed instance."""


class ChainPackingError(GenerationError):
    """Raised when the requested number of precedence chains cannot be packed."""


@dataclass(frozen=True)
class GenConfig:
    n: int
    k: int
    s: int
    c: int = 0
    materials: int | None = None
    proc_range: tuple[int, int] = (1, 100)
    setup_range: tuple[int, int] = (1, 50)
    demand_range: tuple[int, int] = (1, 3)
    lag_mode: str = "uniform-gap"
    downtime_count_range: tuple[int, int] = (0, 2)
    due_slack: int = 20
    release_slack: int = 20
    horizon_factor: float = 1.5
    seed: int = 0
    name: str = ""

    def check(self) -> None:
        if self.n < 1 or self.k < 1 or self.s < 0:
            raise GenerationError(f"need n >= 1, k >= 1, s >= 0, got n={self.n} k={self.k} s={self.s}")
        if not 0 <= self.c <= self.n // 2:
            raise GenerationError(f"chain count must lie in [0, n/2], got {self.c}")
        for label, rng_ in (("proc", self.proc_range), ("setup", self.setup_range),
                            ("demand", self.demand_range), ("downtime count", self.downtime_count_range)):
            lo, hi = rng_
            if lo > hi or lo < 0:
                raise GenerationError(f"bad {label} range {rng_}")
        if self.proc_range[0] < 1:
            raise GenerationError("processing times must be at least 1")
        if self.lag_mode not in ("uniform-gap", "zero"):
            raise GenerationError(f"unknown lag mode {self.lag_mode!r}")
        if self.horizon_factor < 1.0:
            raise GenerationError("horizon factor must be >= 1")
        if self.due_slack < 0 or self.release_slack < 0:
            raise GenerationError("slacks must be non-negative")

    @property
    def material_count(self) -> int:
        return self.materials if self.materials is not None else max(2, self.n // 5)


#: Instance-size grid shipped as ready-made configurations: job counts 10
#: and 20, chain counts n/10 and n/4, 2 or 5 machines, 5 or 10 resources.
PRESETS: dict[str, GenConfig] = {}
for _n in (10, 20):
    for _c in (_n // 10, _n // 4):
        for _k in (2, 5):
            for _s in (5, 10):
                _name = f"n{_n}c{_c}k{_k}s{_s}"
                PRESETS[_name] = GenConfig(n=_n, k=_k, s=_s, c=_c, name=_name)


def preset(name: str, seed: int = 0) -> GenConfig:
    if name not in PRESETS:
        raise GenerationError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    base = PRESETS[name]
    return replace(base, seed=seed, name=f"{name}-seed{seed}")


@dataclass
class ReferenceSolution:
    """The generator's own feasible schedule plus its resource usage profile."""

    schedule: Schedule
    repr: SolutionRepr
    usage: dict[int, np.ndarray]
    makespan: int
    horizon: int


def _stage_rngs(seed: int, count: int) -> list[random.Random]:
    master = random.Random(seed)
    return [random.Random(master.getrandbits(63)) for _ in range(count)]


def build_reference_solution(instance: Instance, rng: random.Random,
                             horizon: int | None = None) -> ReferenceSolution:
    """Pack shuffled jobs back to back, greedily minimizing each setup.

    Every job goes to the eligible machine whose current last job yields the
    smallest setup time (ties to the lowest machine id), starting exactly at
    that machine's last end.
    """
    order = [j.id for j in instance.jobs]
    rng.shuffle(order)
    last: dict[int, tuple[int | None, int]] = {m.id: (None, 0) for m in instance.machines}
    placements: dict[int, Placement] = {}
    for jid in order:
        job = instance.job(jid)
        mid = min(
            sorted(job.eligible),
            key=lambda m: (instance.setup.get(m, last[m][0], jid), m),
        )
        prev, start = last[mid]
        setup_len = instance.setup.get(mid, prev, jid)
        end = start + setup_len + job.proc[mid]
        placements[jid] = Placement(
            job=jid, machine=mid, start=start, end=end,
            setup_len=setup_len, prev=prev,
        )
        last[mid] = (jid, end)
    makespan = max((p.end for p in placements.values()), default=0)
    if horizon is None:
        horizon = makespan
    by_start = sorted(placements.values(), key=lambda p: (p.start, p.job))
    repr = SolutionRepr(
        order=[p.job for p in by_start],
        assign={p.job: p.machine for p in by_start},
    )
    usage = {r.id: np.zeros(horizon, dtype=np.int64) for r in instance.resources}
    for p in placements.values():
        job = instance.job(p.job)
        for rid, amt in instance.combined_demands(job, p.machine):
            usage[rid][p.start:p.end] += amt
    return ReferenceSolution(
        schedule=Schedule(placements), repr=repr, usage=usage,
        makespan=makespan, horizon=horizon,
    )


def derive_resource_calendar(reference: ReferenceSolution, rid: int) -> tuple[tuple[int, int, int], ...]:
    """Capacity intervals for one resource from the reference usage profile.

    The horizon is split into maximal runs of zero versus nonzero usage;
    each nonzero run provides exactly its peak usage, zero runs provide
    nothing.  The intervals cover [0, horizon) without gaps.
    """
    horizon = reference.horizon
    if horizon == 0:
        return ()
    usage = reference.usage[rid]
    flags = usage > 0
    change = (np.nonzero(np.diff(flags))[0] + 1).tolist()
    bounds = [0] + change + [horizon]
    intervals = []
    for a, b in zip(bounds, bounds[1:]):
        cap = int(usage[a:b].max()) if flags[a] else 0
        intervals.append((a, b, cap))
    return tuple(intervals)


def sample_precedence_chains(
    reference: ReferenceSolution,
    c: int,
    rng: random.Random,
    lag_mode: str = "uniform-gap",
    attempts_per_chain: int = 50,
) -> dict[int, list[tuple[int, int]]]:
    """Draw `c` chains of 2 to 4 reference-disjoint jobs; returns preds per job.

    Consecutive chain members (p, q), ordered by reference start, yield a
    precedence q after p with a lag drawn uniformly from the idle gap
    between them, so the reference stays feasible.  Each job joins at most
    one chain.  Raises ChainPackingError when a chain cannot be formed.
    """
    placements = reference.schedule.placements
    unused = set(placements)
    preds: dict[int, list[tuple[int, int]]] = {}
    for chain_no in range(c):
        chain: list[int] | None = None
        for _attempt in range(attempts_per_chain):
            want = rng.randint(2, 4)
            pool = sorted(unused)
            if len(pool) < 2:
                break
            first = rng.choice(pool)
            picked = [first]
            cur_end = placements[first].end
            while len(picked) < want:
                nexts = [j for j in pool if j not in picked and placements[j].start >= cur_end]
                if not nexts:
                    break
                nxt = rng.choice(nexts)
                picked.append(nxt)
                cur_end = placements[nxt].end
            if len(picked) >= 2:
                chain = sorted(picked, key=lambda j: placements[j].start)
                break
        if chain is None:
            raise ChainPackingError(f"could not pack chain {chain_no + 1} of {c}")
        for p, q in zip(chain, chain[1:]):
            gap = placements[q].start - placements[p].end
            lag = rng.randint(0, gap) if lag_mode == "uniform-gap" else 0
            preds.setdefault(q, []).append((p, lag))
        unused.difference_update(chain)
    return preds


def derive_dates_and_downtimes(
    reference: ReferenceSolution,
    config: GenConfig,
    rng: random.Random,
) -> tuple[dict[int, int], dict[int, int], dict[int, list[tuple[int, int]]]]:
    """Due dates, release dates and machine downtimes anchored to the reference.

    Downtimes are drawn first, inside each machine's idle tail so committed
    work is never touched; then releases (at or before each reference
    start) and due dates (jittered around each reference end).
    """
    placements = reference.schedule.placements
    horizon = reference.horizon
    machine_ids = list(range(1, config.k + 1))
    machine_last_end = {mid: 0 for mid in machine_ids}
    for p in placements.values():
        machine_last_end[p.machine] = max(machine_last_end[p.machine], p.end)
    downtimes: dict[int, list[tuple[int, int]]] = {}
    for mid in machine_ids:
        count = rng.randint(*config.downtime_count_range)
        gap_start = machine_last_end[mid]
        gap_len = horizon - gap_start
        size = min(2 * count, gap_len)
        size -= size % 2
        if size < 2:
            downtimes[mid] = []
            continue
        points = sorted(rng.sample(range(gap_start, horizon), size))
        downtimes[mid] = [(points[i], points[i + 1]) for i in range(0, size, 2)]

    release: dict[int, int] = {}
    due: dict[int, int] = {}
    for jid in sorted(placements):
        p = placements[jid]
        release[jid] = max(0, p.start - rng.randint(0, config.release_slack))
        d = p.end + rng.randint(-config.due_slack, config.due_slack)
        due[jid] = max(d, release[jid] + 1)
    return due, release, downtimes


def generate(config: GenConfig) -> tuple[Instance, ReferenceSolution]:
    """Produce a satisfiable instance and the reference solution certifying it."""
    config.check()
    n, k, s = config.n, config.k, config.s
    mcount = config.material_count
    (rng_mat, rng_elig, rng_proc, rng_setup, rng_dem,
     rng_mdem, rng_ref, rng_chain, rng_dates) = _stage_rngs(config.seed, 9)

    job_ids = list(range(1, n + 1))
    machine_ids = list(range(1, k + 1))

    material = {jid: rng_mat.randint(1, mcount) for jid in job_ids}
    class_resources: dict[int, list[int]] = {}
    for mat in range(1, mcount + 1):
        if s == 0:
            class_resources[mat] = []
        else:
            count = rng_mat.randint(1, min(2, s))
            class_resources[mat] = sorted(rng_mat.sample(range(1, s + 1), count))

    eligible = {
        jid: tuple(sorted(rng_elig.sample(machine_ids, rng_elig.randint(1, k))))
        for jid in job_ids
    }
    proc = {
        jid: {m: rng_proc.randint(*config.proc_range) for m in eligible[jid]}
        for jid in job_ids
    }
    demands = {
        jid: {rid: rng_dem.randint(*config.demand_range) for rid in class_resources[material[jid]]}
        for jid in job_ids
    }
    machine_demands: dict[int, dict[int, int]] = {}
    for mid in machine_ids:
        if s > 0 and rng_mdem.random() < 0.3:
            machine_demands[mid] = {rng_mdem.randint(1, s): 1}
        else:
            machine_demands[mid] = {}

    # setups at material-pair granularity per machine; pseudo-material 0 is
    # the machine-start dummy and same-material changeovers cost nothing
    setup = SetupTable(machine_ids, job_ids)
    mat_idx = np.array([material[jid] for jid in job_ids], dtype=np.intp)
    for mid in machine_ids:
        pair = np.zeros((mcount + 1, mcount + 1), dtype=np.int32)
        for a in range(mcount + 1):
            for b in range(1, mcount + 1):
                if a != b or a == 0:
                    pair[a, b] = rng_setup.randint(*config.setup_range)
        el = np.array([setup.job_pos[jid] for jid in job_ids if mid in eligible[jid]],
                      dtype=np.intp)
        if el.size == 0:
            continue
        mi = setup.machine_pos[mid]
        setup.values[mi][0, el] = pair[0, mat_idx[el]]
        setup.provided[mi][0, el] = True
        block = pair[np.ix_(mat_idx[el], mat_idx[el])]
        setup.values[mi][np.ix_(1 + el, el)] = block
        setup.provided[mi][np.ix_(1 + el, el)] = True
        self_idx = 1 + el
        setup.values[mi][self_idx, el] = 0
        setup.provided[mi][self_idx, el] = False

    draft_jobs = tuple(
        Job(id=jid, eligible=eligible[jid], proc=proc[jid], due=0, release=0,
            demands=demands[jid], preds=(), material=material[jid])
        for jid in job_ids
    )
    draft = Instance(
        machines=tuple(Machine(id=m, downtimes=(), demands=machine_demands[m])
                       for m in machine_ids),
        jobs=draft_jobs,
        resources=tuple(Resource(id=r, capacity=()) for r in range(1, s + 1)),
        setup=setup,
        weights=(1.0, 1.0, 1.0),
        horizon=0,
    )

    reference = build_reference_solution(draft, rng_ref)
    horizon = int(math.ceil(config.horizon_factor * reference.makespan))
    usage = {rid: np.zeros(horizon, dtype=np.int64) for rid in reference.usage}
    for rid, arr in reference.usage.items():
        usage[rid][: len(arr)] = arr
    reference = ReferenceSolution(
        schedule=reference.schedule, repr=reference.repr, usage=usage,
        makespan=reference.makespan, horizon=horizon,
    )

    due, release, downtimes = derive_dates_and_downtimes(reference, config, rng_dates)

    calendars = {rid: derive_resource_calendar(reference, rid) for rid in usage}

    preds: dict[int, list[tuple[int, int]]] = {}
    c_eff = config.c
    while True:
        try:
            preds = sample_precedence_chains(
                reference, c_eff, random.Random(rng_chain.getrandbits(63)),
                lag_mode=config.lag_mode,
            )
            break
        except ChainPackingError:
            if c_eff == 0:
                raise
            c_eff -= 1

    jobs = tuple(
        Job(
            id=jid,
            eligible=eligible[jid],
            proc=proc[jid],
            due=due[jid],
            release=release[jid],
            demands=demands[jid],
            preds=tuple(preds.get(jid, ())),
            material=material[jid],
        )
        for jid in job_ids
    )
    machines = tuple(
        Machine(id=m, downtimes=tuple(downtimes.get(m, ())), demands=machine_demands[m])
        for m in machine_ids
    )
    resources = tuple(Resource(id=r, capacity=calendars[r]) for r in range(1, s + 1))
    name = config.name or f"rand-n{n}k{k}s{s}c{config.c}-seed{config.seed}"
    instance = Instance(
        machines=machines,
        jobs=jobs,
        resources=resources,
        setup=setup,
        weights=(1.0, 1.0, 1.0),
        horizon=horizon,
        name=name,
    )
    defects = validate_instance(instance)
    if defects:
        raise GenerationError(f"generator produced an invalid instance: {defects[0]}")
    return instance, reference
