"""Command-line entry point.

    nlsq run --experiment fig1b --out dir/ --seed 7 [--config cfg.json]
             [--dim N] [--threads K]
    nlsq validate config.json

The worker count falls back to the NLSQ_THREADS environment variable, then
to the number of available cores.
"""
from __future__ import annotations

import argparse
import sys

from .harness import (EXPERIMENTS, ExperimentConfig, default_config,
                      run_experiment, validate_config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsq",
                                     description="nonlinear-squeezing experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV panels")
    run.add_argument("--experiment", choices=EXPERIMENTS,
                     help="experiment id (required unless --config provides one)")
    run.add_argument("--config", help="JSON config file; flags override its fields")
    run.add_argument("--out", help="output directory (default: out)")
    run.add_argument("--seed", type=int, help="master RNG seed (default: 7)")
    run.add_argument("--dim", type=int, help="Fock-space truncation override")
    run.add_argument("--threads", type=int, help="worker count (default: cores)")

    val = sub.add_parser("validate", help="check a config and estimate its runtime")
    val.add_argument("config", help="JSON config file")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if args.experiment:
            cfg.experiment = args.experiment
    else:
        if not args.experiment:
            raise SystemExit("error: provide --experiment or --config")
        cfg = default_config(args.experiment)
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.dim is not None:
        cfg.dim = args.dim
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        cfg = ExperimentConfig.load(args.config)
        diags = validate_config(cfg)
        for d in diags:
            print(f"{d.level}: {d.message}")
        return 1 if any(d.level == "error" for d in diags) else 0

    cfg = _config_from_args(args)
    diags = validate_config(cfg)
    for d in diags:
        print(f"{d.level}: {d.message}")
    if any(d.level == "error" for d in diags):
        return 1
    summary = run_experiment(cfg)
    print(f"wrote {', '.join(summary.files)} and {summary.manifest} "
          f"in {cfg.out} ({summary.wall_time_s:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
