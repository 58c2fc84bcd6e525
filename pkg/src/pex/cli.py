"""The ``pex`` command line: simulate | phase1 | phase2 | launch | backtest | report.

Each subcommand reads a JSON config, resolves CLI overrides into it, and
works inside a run directory named by the resolved config's hash. Exit
codes: 0 success, 1 config/file error, 2 calibration gate tripped.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from pex import workflow
from pex.workflow import ExperimentConfig, WorkflowError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--out", required=True, help="parent directory for run artifacts")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pex", description="personalized experimentation workflow"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate the randomized training log")
    _add_common(p)

    p = sub.add_parser("phase1", help="train CATE models, search policies offline")
    _add_common(p)
    p.add_argument("--k", type=int, default=None, help="override candidate count")
    p.add_argument(
        "--accept", action="store_true", help="proceed past the calibration gate"
    )
    p.add_argument(
        "--retrain",
        action="store_true",
        help="fold a launched run's randomized holdout into the training data",
    )

    p = sub.add_parser("phase2", help="test candidates online and tune")
    _add_common(p)
    p.add_argument("--rounds", type=int, default=None, help="override tuning rounds")
    p.add_argument(
        "--candidate-index",
        type=int,
        default=None,
        help="record this measured candidate as the recommendation",
    )

    p = sub.add_parser("launch", help="route traffic through the chosen policy")
    _add_common(p)
    p.add_argument(
        "--accept", action="store_true", help="launch the phase-2 recommendation"
    )
    p.add_argument(
        "--candidate-index", type=int, default=None, help="launch this measured candidate"
    )

    p = sub.add_parser("backtest", help="compare the launched policy to the holdout")
    _add_common(p)

    p = sub.add_parser("report", help="emit plot-ready CSV tables from artifacts")
    _add_common(p)
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        overrides["k"] = args.k
    if getattr(args, "rounds", None) is not None:
        overrides["rounds"] = args.rounds
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command == "simulate":
            return workflow.cmd_simulate(config, args.out)
        if args.command == "phase1":
            return workflow.cmd_phase1(
                config, args.out, accept=args.accept, retrain=args.retrain
            )
        if args.command == "phase2":
            return workflow.cmd_phase2(
                config, args.out, candidate_index=args.candidate_index
            )
        if args.command == "launch":
            return workflow.cmd_launch(
                config, args.out, accept=args.accept, candidate_index=args.candidate_index
            )
        if args.command == "backtest":
            return workflow.cmd_backtest(config, args.out)
        if args.command == "report":
            return workflow.cmd_report(config, args.out)
        raise WorkflowError(f"unknown command {args.command}")
    except WorkflowError as exc:
        print(f"pex {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
