"""CLI entry point for DATOS Lab."""

import argparse
import logging
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .harness import VALIDATION_GROUPS, compare_experiment, run_experiment, run_validation
from .data import LibsvmFormatError
from .sim import EngineError, GraphGenerationError, Narrator, ReferenceSolverError, VerboseNarrator

# Failures of a run, as opposed to a bad configuration
RUN_ERRORS = (EngineError, ReferenceSolverError, GraphGenerationError, LibsvmFormatError, OSError, ValueError)


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog="datos",
        description="DATOS Lab - decentralized adaptive three-operator splitting experiments",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    for name, help_text in (
        ("run", "Run the configured algorithm"),
        ("compare", "Run every configured algorithm and merge their traces"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("config", type=str, help="Experiment TOML file")
        sub.add_argument("--out", type=str, default=None, help="Output directory (overrides output.dir)")
        sub.add_argument("--seed", type=int, default=None, help="Seed (overrides the config seed)")
        sub.add_argument("--every", type=int, default=100, help="Progress line every N rounds (default: 100)")
        sub.add_argument("--verbose", "-v", action="store_true", help="Narrate every round, debug logging")
        sub.add_argument("--quiet", "-q", action="store_true", help="Suppress narration")

    val = subparsers.add_parser("validate", help="Run the fast invariant suite")
    val.add_argument(
        "--group",
        action="append",
        choices=sorted(VALIDATION_GROUPS),
        help="Only run this group (repeatable)",
    )
    return parser


def _narrator(args: argparse.Namespace) -> Narrator:
    if args.verbose:
        return VerboseNarrator(quiet=args.quiet)
    return Narrator(every=args.every, quiet=args.quiet)


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load(args: argparse.Namespace) -> ExperimentConfig:
    return load_config(args.config, seed=args.seed, out=args.out)


def _banner(narrator: Narrator, cfg: ExperimentConfig, algorithms: list[str]) -> None:
    narrator.banner(
        "DATOS LAB",
        [
            f"problem: {cfg.problem.family}  graph: {cfg.graph.kind} m={cfg.graph.m}  seed: {cfg.seed}",
            f"algorithms: {', '.join(algorithms)}  k_max: {cfg.solver.k_max}",
        ],
    )


def cmd_run(args: argparse.Namespace) -> int:
    """Run one algorithm and write trace.csv plus plot data."""
    _configure_logging(args.verbose)
    try:
        cfg = _load(args)
        narrator = _narrator(args)
        _banner(narrator, cfg, [cfg.solver.algorithm])
        trace = run_experiment(cfg, narrator=narrator.print_tick)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RUN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    print(narrator.summary(trace))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    """Run several algorithms on the same problem and network."""
    _configure_logging(args.verbose)
    try:
        cfg = _load(args)
        narrator = _narrator(args)
        _banner(narrator, cfg, cfg.solver.algorithms)
        traces = compare_experiment(cfg, narrator=narrator.print_tick)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RUN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    for trace in traces:
        print(narrator.summary(trace))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    """Run the invariant groups and print pass/fail per group."""
    _configure_logging(False)
    results = run_validation(args.group)
    for result in results:
        status = "PASS" if result.ok else "FAIL"
        print(f"{status}  {result.name}")
        for failure in result.failures[:10]:
            print(f"      {failure}")
    return 0 if all(r.ok for r in results) else 1


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    if args.command == "run":
        return cmd_run(args)
    elif args.command == "compare":
        return cmd_compare(args)
    elif args.command == "validate":
        return cmd_validate(args)

    return 0


if __name__ == "__main__":
    sys.exit(main())
