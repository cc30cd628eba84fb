"""Command-line entry point: ``larpcesk run | summarize | list-scenarios``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench, simulators as sims
from .exceptions import ConfigError

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="larpcesk", description="Stochastic Kriging surrogate benchmarks.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log per-rep progress")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenarios from a JSON config")
    run.add_argument("--config", required=True, help="JSON scenario file")
    run.add_argument("--scenario", action="append", help="only run these scenario names (repeatable)")
    run.add_argument("--seed", type=int, help="override every scenario's master seed")
    run.add_argument("--reps", type=int, help="override the number of macro-replications")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--jobs", type=int, default=1, help="parallel macro-replications")
    run.add_argument("--dump-ed", action="store_true", help="write each rep's design to CSV")

    summ = sub.add_parser("summarize", help="rebuild summary.csv from results.csv")
    summ.add_argument("--in", dest="indir", required=True, help="directory holding results.csv")

    sub.add_parser("list-scenarios", help="print the built-in presets")
    return ap


def _select(specs, names, seed, reps):
    if names:
        known = {s.name for s in specs}
        missing = sorted(set(names) - known)
        if missing:
            raise ConfigError(f"scenarios not in config: {missing}")
        specs = [s for s in specs if s.name in names]
    if seed is not None:
        specs = [replace(s, seed=seed) for s in specs]
    if reps is not None:
        if reps < 1:
            raise ConfigError("--reps must be >= 1")
        specs = [replace(s, macro_replications=reps) for s in specs]
    return specs


def cmd_run(args) -> int:
    try:
        specs = _select(sims.load_config(args.config), args.scenario, args.seed, args.reps)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump = None
    if args.dump_ed:
        dump = out / "designs"
        dump.mkdir(exist_ok=True)

    results, methods = [], {}
    for spec in specs:
        _, _, methods[spec.name] = bench.validation_set(spec)
        print(f"[{spec.name}] {spec.macro_replications} reps, surrogates {', '.join(spec.surrogates)}", flush=True)
        rows = bench.run_scenario(spec, jobs=args.jobs, dump_dir=dump)
        results.extend(rows)

    summary = bench.summarize(results)
    bench.write_results(out / "results.csv", results)
    bench.write_timings(out / "timings.csv", results)
    bench.write_summary(out / "summary.csv", summary)
    bench.write_metadata(out / "metadata.json", specs, methods)
    _print_summary(summary)

    bad = bench.failed_fraction(results)
    if bad > bench.FAIL_FRACTION:
        print(f"{100 * bad:.0f}% of macro-replications had failures", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _print_summary(summary):
    head = f"{'scenario':<16}{'surrogate':<14}{'ok':>4}{'ERMSE mean':>12}{'median':>10}{'NMAE mean':>12}{'basis':>7}{'impr %':>8}"
    print(head)
    for s in summary:
        print(
            f"{s['scenario']:<16}{s['surrogate']:<14}{s['n_ok']:>4}{s['mean_ermse']:>12.4f}"
            f"{s['median_ermse']:>10.4f}{s['mean_nmae']:>12.3e}{s['median_n_basis']:>7g}"
            f"{s['ermse_improvement_mean_pct']:>8.1f}"
        )


def cmd_summarize(args) -> int:
    path = Path(args.indir) / "results.csv"
    if not path.exists():
        print(f"no results.csv in {args.indir}", file=sys.stderr)
        return EXIT_CONFIG
    results = bench.read_results(path)
    if not results:
        print("results.csv is empty", file=sys.stderr)
        return EXIT_CONFIG
    summary = bench.summarize(results)
    bench.write_summary(Path(args.indir) / "summary.csv", summary)
    _print_summary(summary)
    return EXIT_PARTIAL if bench.failed_fraction(results) > bench.FAIL_FRACTION else EXIT_OK


def cmd_list(_args) -> int:
    for name, s in sims.PRESETS.items():
        extra = []
        if s.T is not None:
            extra.append(f"T={s.T:g}")
        if s.C is not None:
            extra.append(f"C={s.C}")
        if s.p_full is not None:
            extra.append(f"p_full={s.p_full}")
        print(f"{name:<14}{s.case:<10} k={s.k:<4} p={s.p:<3} q={s.q:<4g} {' '.join(extra)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    return {"run": cmd_run, "summarize": cmd_summarize, "list-scenarios": cmd_list}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
