"""Command-line front door: run experiments, validate guarantees, sweep delays.

Exit codes: 0 success, 1 failed validation assertions, 2 configuration or
usage errors, 3 I/O errors.  Progress goes to stdout, errors to stderr, and
all data to files.  ``DAAF_SEED`` overrides the config seed; a ``--seed``
flag overrides both.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import load_config_file
from .errors import ConfigurationError
from .harness import mean_delay_sweep, run_experiment
from .outputs import write_outputs, write_sweep
from .validation import SUITE_NAMES, run_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _apply_overrides(cfg, args):
    seed = cfg.master_seed
    env_seed = os.environ.get("DAAF_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigurationError(f"DAAF_SEED must be an integer, got {env_seed!r}")
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    workers = args.workers if getattr(args, "workers", None) is not None else cfg.workers
    return dataclasses.replace(cfg, master_seed=seed, workers=workers)


def cmd_run(args) -> int:
    cfg, _ = load_config_file(args.config)
    cfg = _apply_overrides(cfg, args)
    print(
        f"running {len(cfg.policies)} policies x {cfg.replications} replications, "
        f"T={cfg.instance.horizon}, seed={cfg.master_seed}, workers={cfg.workers}"
    )
    summary = run_experiment(cfg)
    written = write_outputs(summary, args.out)
    for path in written:
        print(f"wrote {path}")
    print(f"done in {summary.wall_time:.1f}s")
    return EXIT_OK


def cmd_validate(args) -> int:
    report = run_suite(args.suite, workers=args.workers or 1, master_seed=args.seed or 0, reps=args.reps)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    n_failed = sum(not c.passed for c in report.checks)
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"[{status}] {check.name} (margin {check.margin:.6g})")
    print(f"report written to {out}")
    if n_failed:
        print(f"{n_failed} of {len(report.checks)} checks failed", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, config_means = load_config_file(args.config)
    cfg = _apply_overrides(cfg, args)
    if args.means is not None:
        try:
            means = [float(x) for x in args.means.split(",") if x.strip() != ""]
        except ValueError:
            raise ConfigurationError(f"--means must be a comma-separated number list, got {args.means!r}")
    else:
        means = config_means
    if not means:
        raise ConfigurationError("no sweep means given (config sweep_means or --means)")
    print(f"sweeping delay locations {means} with {cfg.replications} replications each")
    sweep = mean_delay_sweep(cfg, means)
    for path in write_sweep(sweep, args.out):
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daaf",
        description="Bandits with delayed, aggregated anonymous feedback: simulation benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config (or bundled preset name)")
    p_run.add_argument("--config", required=True, help="config path or preset name (fig3a, fig3b, fig4)")
    p_run.add_argument("--out", default="daaf-out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p_run.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="run a statistical/arithmetic validation suite")
    p_val.add_argument("--suite", required=True, choices=SUITE_NAMES)
    p_val.add_argument("--out", default="validation_report.json", help="JSON report path")
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--workers", type=int, default=None)
    p_val.add_argument("--reps", type=int, default=None, help="override Monte-Carlo replication count")
    p_val.set_defaults(func=cmd_validate)

    p_sweep = sub.add_parser("sweep", help="mean-delay sweep: relative final regret per policy")
    p_sweep.add_argument("--config", required=True, help="config path or preset name")
    p_sweep.add_argument("--means", default=None, help="comma-separated delay locations, e.g. 0,25,50,100")
    p_sweep.add_argument("--out", default="daaf-out", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
