"""
Command-line entry point: uniformize run | describe | verify.

Exit codes: 0 success, 2 invalid configuration or parameters, 3 numerical
guard failure (tail weight, CFL bound, norm drift, failed verification).
"""
import argparse
import logging
import sys
from typing import List, Optional

from . import __version__
from .config import load_config
from .errors import ConfigError, NumericalGuardError, UniformizeError
from .harness import describe, run
from .verification import DEFAULT_SEED, run_verification

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uniformize",
        description="Uniformized n-particle systems and their mean-field limit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only.")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run the scenario of a config file.")
    run_parser.add_argument("--config", required=True, help="Path to the JSON experiment config.")
    run_parser.add_argument("--out-dir", help="Output directory (overrides output.directory).")
    run_parser.add_argument("--format", choices=["csv", "json"], help="Table format (overrides output.format).")
    run_parser.add_argument("--threads", type=int, default=1, help="Worker threads for independent jobs.")
    run_parser.add_argument("--seed", type=int, help="Seed for randomized trials (overrides run.seed).")

    describe_parser = commands.add_parser("describe", help="Print derived sizes of a config without running it.")
    describe_parser.add_argument("--config", required=True, help="Path to the JSON experiment config.")

    verify_parser = commands.add_parser("verify", help="Run the algebra, identity and commutation suites.")
    verify_parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for the random trials.")
    return parser


def _configure_logging(args: argparse.Namespace):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format="[%(module)-12s] %(message)s", level=level, stream=sys.stderr)


def _run(args: argparse.Namespace) -> int:
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    config = load_config(args.config).with_overrides(args.out_dir, args.format, args.seed)
    result = run(config, threads=args.threads)
    if not result.passed:
        logger.error("Scenario %s finished with failed checks", config.scenario)
        return EXIT_NUMERICAL
    return EXIT_OK


def _describe(args: argparse.Namespace) -> int:
    print(describe(load_config(args.config)))
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    reports = run_verification(seed=args.seed)
    for report in reports:
        print("\n".join(report.lines()))
    return EXIT_OK if all(report.passed for report in reports) else EXIT_NUMERICAL


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    handlers = {"run": _run, "describe": _describe, "verify": _verify}
    try:
        return handlers[args.command](args)
    except NumericalGuardError as exc:
        logger.error("Numerical guard: %s", exc)
        return EXIT_NUMERICAL
    except (UniformizeError, ValueError) as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        logger.error("Cannot write results: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
