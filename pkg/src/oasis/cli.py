"""Command-line interface.

Subcommands:

- ``generate``: sample a trace from a JSON spec and write it to a file.
- ``simulate``: run one scheduler over a trace file.
- ``compare``: run several schedulers over a seed sweep, write CSV tables
  and plot-data series.
- ``ratio``: offline-optimum / online-total ratios on small instances.
- ``verify``: execute the property suites; non-zero exit on failure.

Config files are JSON objects whose keys mirror the TraceSpec fields;
command-line flags override file values. Every command prints one final
machine-parseable line ``SUMMARY {...json...}``.

Exit codes: 0 success, 2 bad config/spec, 3 scheduler constraint
violation, 4 property-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from multiprocessing import Pool

import numpy as np

from .baselines import BaselineConfig
from .oracle import OracleLimits, OracleSizeError, solve_offline
from .pricing import compute_constants
from .engine import OnlineScheduler
from .simulate import SCHEDULERS, SchedulingViolation, SimOptions, run_simulation
from .tracegen import TraceSpec, TraceSpecError, estimated_load, generate_trace, read_trace, write_trace
from . import verify as verify_mod

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_SUITE = 4


def _summary(payload: dict) -> None:
    print("SUMMARY " + json.dumps(payload, sort_keys=True))


def _load_spec(path: str | None, seed: int | None) -> TraceSpec:
    raw = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    spec = TraceSpec.from_dict(raw)
    if seed is not None:
        spec = dataclasses.replace(spec, seed=seed)
    return spec


def _parse_seeds(text: str) -> list[int]:
    """Seed lists: '0:20' (half-open range) or comma-separated values."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _sim_options(args, jobs=None) -> SimOptions:
    baseline = BaselineConfig(
        fixed_workers=args.fixed_workers,
        fixed_ps=args.fixed_ps,
        rrh_threshold=args.rrh_threshold,
    )
    return SimOptions(
        baseline=baseline,
        estimate_scale=args.estimate_scale,
        track_duality=getattr(args, "track_duality", False),
        inject_overcommit=getattr(args, "inject_capacity_bug", False),
    )


def cmd_generate(args) -> int:
    try:
        spec = _load_spec(args.config, args.seed)
        jobs, cluster = generate_trace(spec)
    except (TraceSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_trace(args.out, jobs, cluster)
    load = estimated_load(jobs, cluster) if jobs else 0.0
    _summary({
        "command": "generate", "out": str(args.out), "jobs": len(jobs),
        "slots": cluster.slots, "seed": spec.seed, "load": round(load, 4),
    })
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        jobs, cluster = read_trace(args.trace)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    options = _sim_options(args)
    try:
        report = run_simulation(jobs, cluster, args.scheduler, options)
    except SchedulingViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    if args.out:
        _write_job_csv(f"{args.out}jobs.csv", [report])
    _summary(report.summary_row() | {"command": "simulate"})
    return EXIT_OK


def _compare_one(packed):
    spec_dict, seed, schedulers, options_fields = packed
    spec = dataclasses.replace(TraceSpec.from_dict(spec_dict), seed=seed)
    jobs, cluster = generate_trace(spec)
    options = SimOptions(
        baseline=BaselineConfig(**options_fields["baseline"]),
        estimate_scale=options_fields["estimate_scale"],
    )
    load = estimated_load(jobs, cluster) if jobs else 0.0
    reports = []
    for s in schedulers:
        report = run_simulation(jobs, cluster, s, options, seed=seed)
        report.load = load
        reports.append(report)
    return reports


def cmd_compare(args) -> int:
    schedulers = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    unknown = [s for s in schedulers if s not in SCHEDULERS]
    if unknown:
        print(f"error: unknown schedulers {unknown}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        reports = []
        if args.trace:
            jobs, cluster = read_trace(args.trace)
            options = _sim_options(args)
            for s in schedulers:
                reports.append(run_simulation(jobs, cluster, s, options))
        else:
            seeds = _parse_seeds(args.seeds)
            spec = _load_spec(args.config, None)
            packed = [
                (
                    spec.to_dict(),
                    seed,
                    schedulers,
                    {
                        "baseline": {
                            "fixed_workers": args.fixed_workers,
                            "fixed_ps": args.fixed_ps,
                            "rrh_threshold": args.rrh_threshold,
                        },
                        "estimate_scale": args.estimate_scale,
                    },
                )
                for seed in seeds
            ]
            if args.jobs > 1:
                with Pool(args.jobs) as pool:
                    for group in pool.map(_compare_one, packed):
                        reports.extend(group)
            else:
                for item in packed:
                    reports.extend(_compare_one(item))
    except (TraceSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchedulingViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION

    if args.out:
        _write_summary_csv(f"{args.out}summary.csv", reports)
        _write_job_csv(f"{args.out}jobs.csv", reports)
        _write_plot_data(args.out, reports, schedulers)

    by_sched = {
        s: [r.total_utility for r in reports if r.scheduler == s] for s in schedulers
    }
    _summary({
        "command": "compare",
        "schedulers": schedulers,
        "runs": len(reports),
        "mean_utility": {s: round(float(np.mean(v)), 3) for s, v in by_sched.items() if v},
    })
    return EXIT_OK


def cmd_ratio(args) -> int:
    try:
        spec = _load_spec(args.config, None)
        seeds = _parse_seeds(args.seeds)
    except (TraceSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    limits = OracleLimits(
        max_jobs=args.max_jobs, max_slots=args.max_slots,
        max_servers=args.max_servers, max_chunk_epochs=args.max_chunk_epochs,
    )
    ratios = []
    for seed in seeds:
        jobs, cluster = generate_trace(dataclasses.replace(spec, seed=seed))
        try:
            opt = solve_offline(jobs, cluster, limits).optimal_utility
        except OracleSizeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        constants = compute_constants(jobs, cluster)
        engine = OnlineScheduler(cluster, constants)
        for job in sorted(jobs, key=lambda j: j.arrival):
            engine.on_arrival(job)
        total, _ = engine.objective_values()
        ratio = 1.0 if opt <= 0 else (float("inf") if total <= 0 else opt / total)
        alpha = constants.alpha()
        ratios.append(ratio)
        print(f"seed={seed} opt={opt:.4f} online={total:.4f} ratio={ratio:.4f} 2alpha={2 * alpha:.2f}")
    arr = np.asarray(ratios)
    _summary({
        "command": "ratio", "seeds": len(seeds),
        "ratio_min": round(float(arr.min()), 4),
        "ratio_median": round(float(np.median(arr)), 4),
        "ratio_max": round(float(arr.max()), 4),
    })
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify_mod.run_all(
        subroutine_instances=args.instances,
        greedy_instances=args.instances * 2,
        boundary_populations=max(5, args.instances // 15),
        feasibility_jobs=args.feasibility_jobs,
        duality_jobs=args.duality_jobs,
        competitive_instances=args.competitive_instances,
        seed=args.seed,
        inject=args.inject_capacity_bug,
    )
    passed = True
    for result in results:
        print(result.line())
        for detail in result.details[:5]:
            print("   ", detail)
        passed &= result.passed
    _summary({
        "command": "verify",
        "passed": passed,
        "suites": {r.name: r.passed for r in results},
    })
    return EXIT_OK if passed else EXIT_SUITE


def _write_summary_csv(path, reports) -> None:
    rows = [r.summary_row() for r in reports]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _write_job_csv(path, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "scheduler", "seed", "job_id", "class", "arrival", "admitted",
            "completed", "completion_slot", "utility", "timeliness", "latency_ms",
        ])
        for report in reports:
            for r in report.records:
                writer.writerow([
                    report.scheduler, report.seed, r.job_id, r.job_class, r.arrival,
                    int(r.admitted), int(r.completed),
                    r.completion_slot if r.completion_slot is not None else "",
                    f"{r.utility:.6f}",
                    f"{r.timeliness:.3f}" if r.timeliness is not None else "",
                    f"{r.latency_s * 1e3:.3f}",
                ])


def _write_plot_data(prefix, reports, schedulers) -> None:
    """x/y series for utility-per-seed and a timeliness histogram."""
    seeds = sorted({r.seed for r in reports}, key=lambda x: (x is None, x))
    with open(f"{prefix}utility_series.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "load"] + schedulers)
        for seed in seeds:
            group = [r for r in reports if r.seed == seed]
            load = next((r.load for r in group if r.load is not None), None)
            row = [seed, f"{load:.4f}" if load is not None else ""]
            for s in schedulers:
                vals = [r.total_utility for r in group if r.scheduler == s]
                row.append(f"{vals[0]:.4f}" if vals else "")
            writer.writerow(row)
    edges = np.arange(-20.5, 21.5, 1.0)
    with open(f"{prefix}timeliness_hist.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right"] + schedulers)
        counts = {}
        for s in schedulers:
            samples = [x for r in reports if r.scheduler == s for x in r.timeliness_samples()]
            counts[s], _ = np.histogram(np.clip(samples, -20, 20), bins=edges) if samples else (np.zeros(len(edges) - 1, dtype=int), None)
        for i in range(len(edges) - 1):
            writer.writerow([edges[i], edges[i + 1]] + [int(counts[s][i]) for s in schedulers])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oasis", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sim_flags(p):
        p.add_argument("--fixed-workers", type=int, default=8, help="baseline fixed worker count")
        p.add_argument("--fixed-ps", type=int, default=4, help="baseline fixed parameter-server count")
        p.add_argument("--rrh-threshold", type=float, default=0.0, help="RRH admission threshold")
        p.add_argument("--estimate-scale", type=float, default=1.0,
                       help="multiplier on the price ceiling/floor ratio (estimation error study)")

    p = sub.add_parser("generate", help="sample a trace and write it to a file")
    p.add_argument("--config", help="JSON trace spec (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="override the spec's seed")
    p.add_argument("--out", required=True, help="output trace path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run one scheduler over a trace file")
    p.add_argument("--trace", required=True)
    p.add_argument("--scheduler", default="oasis", choices=SCHEDULERS)
    p.add_argument("--out", help="prefix for the per-job CSV")
    add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run several schedulers over a seed sweep")
    p.add_argument("--trace", help="single trace file (alternative to --config/--seeds)")
    p.add_argument("--config", help="JSON trace spec for the sweep")
    p.add_argument("--seeds", default="0:10", help="'lo:hi' range or comma list")
    p.add_argument("--schedulers", default="oasis,fifo,drf,rrh")
    p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    p.add_argument("--out", help="prefix for summary/jobs/plot-data CSVs")
    add_sim_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ratio", help="offline-optimum ratios on small instances")
    p.add_argument("--config", help="JSON trace spec (must stay within oracle limits)")
    p.add_argument("--seeds", default="0:10")
    p.add_argument("--max-jobs", type=int, default=6)
    p.add_argument("--max-slots", type=int, default=6)
    p.add_argument("--max-servers", type=int, default=6)
    p.add_argument("--max-chunk-epochs", type=int, default=6)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--instances", type=int, default=200, help="oracle-equivalence comparisons")
    p.add_argument("--competitive-instances", type=int, default=50)
    p.add_argument("--feasibility-jobs", type=int, default=300)
    p.add_argument("--duality-jobs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-capacity-bug", action="store_true",
                   help="negative control: plant a capacity overflow and expect the validator to catch it")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
