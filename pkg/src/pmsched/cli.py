"""Command line interface.

Exit codes are a total function of the outcome:

====  ======================================================
code  meaning
====  ======================================================
0     success (including an UNSAT oracle verdict)
2     malformed input, unknown preset or bad flag values
3     `validate` found violations
4     oracle node budget exhausted
====  ======================================================

Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import replace

from . import exact, gen
from .anneal import SAParams, solve
from .construct import construct
from .core import (
    CostBreakdown,
    Instance,
    InstanceFormatError,
    read_instance,
    read_schedule,
    schedule_to_dict,
    validate_instance,
    write_instance,
    write_schedule,
)
from .decoder import check_feasibility, evaluate
from .gantt import render_gantt

BENCH_CSV_VERSION = 1
BENCH_COLUMNS = [
    "version", "instance", "method", "seed",
    "makespan", "tardiness", "setup_total", "violations",
    "tardy_jobs", "aggregate", "wall_time_s",
]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fail(code: int, message: str) -> int:
    print(json.dumps({"error": {"code": code, "message": message}}), file=sys.stderr)
    return code


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError(2, f"expected three comma-separated weights, got {text!r}")
    try:
        w = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise CliError(2, f"bad weights {text!r}: {exc}") from exc
    return w  # type: ignore[return-value]


def _parse_range(text: str, label: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise CliError(2, f"expected lo,hi for {label}, got {text!r}")
    return int(parts[0]), int(parts[1])


def _load_instance(path, weights: str | None) -> Instance:
    try:
        instance = read_instance(path)
    except FileNotFoundError as exc:
        raise CliError(2, f"instance file not found: {exc}") from exc
    except (InstanceFormatError, json.JSONDecodeError) as exc:
        raise CliError(2, f"cannot parse instance: {exc}") from exc
    if weights:
        instance = replace(instance, weights=_parse_weights(weights))
    defects = validate_instance(instance)
    if defects:
        raise CliError(2, f"invalid instance: {defects[0]}")
    return instance


def _tardy_jobs(instance: Instance, schedule) -> int:
    return sum(
        1 for j in instance.jobs if schedule.placements[j.id].end > j.due
    )


def _cost_json(cost: CostBreakdown) -> dict:
    return {
        "T": cost.tardiness,
        "C": cost.makespan,
        "S": cost.setup_total,
        "violations": cost.violations,
        "aggregate": cost.aggregate,
    }


def _gen_config(args) -> gen.GenConfig:
    if args.preset:
        return gen.preset(args.preset, seed=args.seed)
    if args.n is None or args.k is None or args.s is None:
        raise CliError(2, "either --preset or all of --n/--k/--s are required")
    kwargs = dict(n=args.n, k=args.k, s=args.s, c=args.c or 0, seed=args.seed)
    if args.materials is not None:
        kwargs["materials"] = args.materials
    if args.proc_range:
        kwargs["proc_range"] = _parse_range(args.proc_range, "--proc-range")
    if args.setup_range:
        kwargs["setup_range"] = _parse_range(args.setup_range, "--setup-range")
    if args.demand_range:
        kwargs["demand_range"] = _parse_range(args.demand_range, "--demand-range")
    if args.downtime_range:
        kwargs["downtime_count_range"] = _parse_range(args.downtime_range, "--downtime-range")
    if args.due_slack is not None:
        kwargs["due_slack"] = args.due_slack
    if args.release_slack is not None:
        kwargs["release_slack"] = args.release_slack
    if args.horizon_factor is not None:
        kwargs["horizon_factor"] = args.horizon_factor
    if args.lag_mode:
        kwargs["lag_mode"] = args.lag_mode
    return gen.GenConfig(**kwargs)


def cmd_generate(args) -> int:
    config = _gen_config(args)
    try:
        instance, reference = gen.generate(config)
    except gen.GenerationError as exc:
        raise CliError(2, str(exc)) from exc
    if args.weights:
        instance = replace(instance, weights=_parse_weights(args.weights))
    write_instance(instance, args.out)
    ref_path = args.reference_out or str(args.out).rsplit(".json", 1)[0] + ".reference.json"
    ref_cost = evaluate(instance, reference.schedule)
    write_schedule(reference.schedule, ref_cost, ref_path, instance_id=instance.name)
    print(json.dumps({
        "instance": instance.name,
        "out": str(args.out),
        "reference_out": str(ref_path),
        "n": instance.n, "k": instance.k, "s": len(instance.resources),
        "horizon": instance.horizon,
        "reference_cost": _cost_json(ref_cost),
    }))
    return 0


def cmd_construct(args) -> int:
    instance = _load_instance(args.instance, args.weights)
    _, schedule, cost = construct(instance)
    if args.out:
        write_schedule(schedule, cost, args.out, instance_id=instance.name)
    print(json.dumps({"instance": instance.name, "cost": _cost_json(cost),
                      "out": str(args.out) if args.out else None}))
    return 0


def cmd_solve(args) -> int:
    instance = _load_instance(args.instance, args.weights)
    params = SAParams(
        t_init=args.t_init,
        t_min=args.t_min,
        time_limit=args.time_limit,
        iteration_budget=args.iteration_budget,
        seed=args.seed,
        runs=args.runs,
        workers=args.workers,
    )
    result = solve(instance, params)
    if args.out:
        write_schedule(result.schedule, result.cost, args.out, instance_id=instance.name)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump({"chains": [s.to_dict() for s in result.stats]}, fh, indent=2)
            fh.write("\n")
    print(json.dumps({"instance": instance.name, "cost": _cost_json(result.cost),
                      "out": str(args.out) if args.out else None}))
    return 0


def cmd_validate(args) -> int:
    instance = _load_instance(args.instance, args.weights)
    try:
        schedule, _ = read_schedule(args.schedule)
    except FileNotFoundError as exc:
        raise CliError(2, f"schedule file not found: {exc}") from exc
    except (InstanceFormatError, json.JSONDecodeError) as exc:
        raise CliError(2, f"cannot parse schedule: {exc}") from exc
    report = check_feasibility(instance, schedule)
    doc = report.to_dict()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    print(json.dumps({"instance": instance.name, "violations": report.count(),
                      "report": doc}))
    return 0 if report.empty() else 3


def cmd_oracle(args) -> int:
    instance = _load_instance(args.instance, args.weights)
    limits = exact.SearchLimits(node_cap=args.node_cap)
    if args.mode == "time-indexed":
        result = exact.exhaustive_time_indexed(instance, limits)
    else:
        result = exact.enumerate_representations(instance, limits)
    out = {"instance": instance.name, "mode": args.mode, "status": result.status,
           "nodes": result.nodes}
    if result.cost is not None:
        out["cost"] = _cost_json(result.cost)
        if args.out and result.schedule is not None:
            write_schedule(result.schedule, result.cost, args.out, instance_id=instance.name)
            out["out"] = str(args.out)
    print(json.dumps(out))
    return 4 if result.status == exact.BUDGET_EXCEEDED else 0


def cmd_export_model(args) -> int:
    instance = _load_instance(args.instance, args.weights)
    mzn_path, dzn_path = exact.export_constraint_model(instance, args.out)
    print(json.dumps({"instance": instance.name, "mzn": mzn_path, "dzn": dzn_path}))
    return 0


def cmd_gantt(args) -> int:
    instance = _load_instance(args.instance, args.weights)
    try:
        schedule, cost_doc = read_schedule(args.schedule)
    except (InstanceFormatError, json.JSONDecodeError, FileNotFoundError) as exc:
        raise CliError(2, f"cannot parse schedule: {exc}") from exc
    title = args.title or (
        f"{instance.name}  aggregate={cost_doc.get('aggregate')}" if cost_doc else instance.name
    )
    svg = render_gantt(instance, schedule, title=title)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(json.dumps({"instance": instance.name, "out": str(args.out)}))
    return 0


def _bench_instances(args):
    if args.instances:
        for path in args.instances:
            yield _load_instance(path, args.weights), None
        return
    if not args.preset:
        raise CliError(2, "bench needs --instances or --preset")
    for i in range(args.count):
        config = gen.preset(args.preset, seed=args.seed + i)
        instance, reference = gen.generate(config)
        if args.weights:
            instance = replace(instance, weights=_parse_weights(args.weights))
        yield instance, reference


def cmd_bench(args) -> int:
    rows = []
    per_instance: dict[str, dict[str, CostBreakdown]] = {}
    for instance, _ in _bench_instances(args):
        t0 = time.perf_counter()
        ca_repr, ca_sched, ca_cost = construct(instance)
        ca_time = time.perf_counter() - t0
        rows.append([BENCH_CSV_VERSION, instance.name, "CA", args.seed,
                     ca_cost.makespan, ca_cost.tardiness, ca_cost.setup_total,
                     ca_cost.violations, _tardy_jobs(instance, ca_sched),
                     ca_cost.aggregate, round(ca_time, 3)])
        params = SAParams(
            time_limit=args.time_limit,
            iteration_budget=args.iteration_budget,
            seed=args.seed,
            runs=args.runs,
            workers=args.workers,
        )
        t0 = time.perf_counter()
        result = solve(instance, params, initial=ca_repr)
        sa_time = time.perf_counter() - t0
        rows.append([BENCH_CSV_VERSION, instance.name, "SA", args.seed,
                     result.cost.makespan, result.cost.tardiness, result.cost.setup_total,
                     result.cost.violations, _tardy_jobs(instance, result.schedule),
                     result.cost.aggregate, round(sa_time, 3)])
        per_instance[instance.name] = {"CA": ca_cost, "SA": result.cost}

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
        writer.writerows(rows)

    summary: dict[str, float | None] = {}
    for label, attr in (("C", "makespan"), ("T", "tardiness"), ("S", "setup_total"),
                        ("aggregate", "aggregate")):
        rels = []
        for costs in per_instance.values():
            ca_v = getattr(costs["CA"], attr)
            sa_v = getattr(costs["SA"], attr)
            if ca_v > 0:
                rels.append(1.0 - sa_v / ca_v)
        summary[label] = statistics.mean(rels) if rels else None
    doc = {"instances": len(per_instance), "out": str(args.out),
           "mean_relative_improvement": summary}
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    print(json.dumps(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmsched",
        description="Parallel machine scheduling with calendars: generate, "
                    "construct, anneal, validate, prove and chart.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random satisfiable instance")
    p.add_argument("--preset", help="named size configuration, e.g. n10c1k2s5")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--materials", type=int)
    p.add_argument("--proc-range")
    p.add_argument("--setup-range")
    p.add_argument("--demand-range")
    p.add_argument("--downtime-range")
    p.add_argument("--due-slack", type=int)
    p.add_argument("--release-slack", type=int)
    p.add_argument("--horizon-factor", type=float)
    p.add_argument("--lag-mode", choices=["uniform-gap", "zero"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights")
    p.add_argument("--out", required=True)
    p.add_argument("--reference-out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("construct", help="run the construction heuristic")
    p.add_argument("--instance", required=True)
    p.add_argument("--weights")
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("solve", help="simulated annealing from the constructed start")
    p.add_argument("--instance", required=True)
    p.add_argument("--weights")
    p.add_argument("--time-limit", type=float, help="seconds per run")
    p.add_argument("--iteration-budget", type=int, help="deterministic deadline in iterations")
    p.add_argument("--runs", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-init", type=float, default=600.0)
    p.add_argument("--t-min", type=float, default=0.001)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--stats")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="verify a schedule against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--weights")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="exact verdict for small instances")
    p.add_argument("--instance", required=True)
    p.add_argument("--weights")
    p.add_argument("--mode", choices=["time-indexed", "representations"],
                   default="time-indexed")
    p.add_argument("--node-cap", type=int, default=10_000_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export-model", help="write the .mzn model and .dzn data files")
    p.add_argument("--instance", required=True)
    p.add_argument("--weights")
    p.add_argument("--out", required=True, help="base path; .mzn/.dzn are appended")
    p.set_defaults(func=cmd_export_model)

    p = sub.add_parser("gantt", help="render a schedule as SVG")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--weights")
    p.add_argument("--title")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gantt)

    p = sub.add_parser("bench", help="compare construction vs annealing over instances")
    p.add_argument("--instances", nargs="*")
    p.add_argument("--preset")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights")
    p.add_argument("--time-limit", type=float)
    p.add_argument("--iteration-budget", type=int)
    p.add_argument("--runs", type=int, default=12)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, str(exc))
    except (gen.GenerationError, InstanceFormatError, ValueError) as exc:
        return _fail(2, str(exc))
    except OSError as exc:
        return _fail(2, f"i/o error: {exc}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
