"""Command-line entry point ``sample``.

Exit codes: 0 success, 2 invalid config or input, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from anneal_path import bench
from anneal_path.errors import InputError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
THREADS_ENV = "ANNEAL_PATH_THREADS"


def _jobs(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env is None or env.strip() == "":
        return 1
    try:
        jobs = int(env)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
    if jobs < 1:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
    return jobs


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _cmd_run(args) -> int:
    cfg = bench.load_config(args.config, seed=args.seed)
    out = args.out if args.out is not None else cfg.output_dir
    if out is None:
        raise InputError("no output directory: pass --out or set output.dir")
    out = Path(out)
    if out.exists() and not out.is_dir():
        raise InputError(f"output path {out} is not a directory")
    result = bench.run_experiment(cfg, out, jobs=_jobs(args.jobs))
    final = result.report.final()
    notes = result.report.notes
    print(f"wrote {len(result.files)} files to {out}")
    print(f"occupied modes: {notes['occupied_modes']}/{notes['n_modes']}")
    for name in result.report.metrics:
        print(f"  {name:>7s} = {final[name]:.6g}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    reports = [bench.load_report(p) for p in args.reports]
    table, summary = bench.compare_runs(reports)
    if args.out is None:
        sys.stdout.write(table)
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(table)
        (out / "comparison.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out / 'comparison.csv'} and {out / 'comparison.json'}")
    return EXIT_OK


def _cmd_cost(args) -> int:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise bench.ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise bench.ConfigError(f"malformed JSON: {exc.msg}", exc.lineno, str(path)) from exc
    models, iters, particles = bench.parse_cost_config(data)
    sys.stdout.write(bench.cost_table_csv(bench.estimate_mc_cost(models, iters, particles)))
    return EXIT_OK


def _cmd_preset(args) -> int:
    if args.action == "list":
        for name in bench.PRESETS:
            print(f"{name}\t{bench.preset_description(name)}")
    else:
        if args.name is None:
            raise InputError("preset show needs a preset name")
        print(json.dumps(bench.preset_config(args.name, path=args.path), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sample", description="Annealed Langevin sampling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True, help="experiment config (JSON)")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--jobs", type=_positive_int, help=f"worker threads (fallback: ${THREADS_ENV}, then 1)")
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="merge metrics.json reports side by side")
    cmp_.add_argument("reports", nargs="+", help="metrics.json files")
    cmp_.add_argument("--out", help="directory for comparison.csv/json (default: stdout)")
    cmp_.set_defaults(func=_cmd_compare)

    cost = sub.add_parser("cost", help="tabulate score-query cost of the recursive estimator")
    cost.add_argument("--config", required=True, help="cost config (JSON)")
    cost.set_defaults(func=_cmd_cost)

    preset = sub.add_parser("preset", help="list presets or print a preset config")
    preset.add_argument("action", choices=("list", "show"))
    preset.add_argument("name", nargs="?", choices=bench.PRESETS)
    preset.add_argument("--path", default="dilation", help="path variant for 'show' (or 'none')")
    preset.set_defaults(func=_cmd_preset)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
