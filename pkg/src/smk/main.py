"""Main application entry point."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .cli.commands import ExitCode, run
from .cli.schema import parse_config
from .config import settings
from .errors import ConfigError

logger = logging.getLogger(__name__)


def configure_logging(quiet: bool = False) -> None:
    """Log to stderr; output files never carry log lines."""
    if quiet:
        level = logging.WARNING
    else:
        level = logging.DEBUG if settings.debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _seed(value: str) -> int:
    seed = int(value, 0)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed {value} is not a 64-bit unsigned integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Simulate and solve stepped semi-Markov models.",
    )
    parser.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    parser.add_argument("--seed", type=_seed, help="Master seed (overrides SMK_SEED)")
    parser.add_argument("--threads", type=int, help="Monte Carlo worker threads")
    parser.add_argument("--out", help="Output path (defaults to the config, then stdout)")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command-line application."""
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    if args.threads is not None and args.threads < 1:
        sys.stderr.write("error: --threads must be at least 1\n")
        return ExitCode.VALIDATION_FAILURE

    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        sys.stderr.write(f"error: cannot read {args.config}: {exc.strerror}\n")
        return ExitCode.VALIDATION_FAILURE

    try:
        config, model = parse_config(text)
    except ConfigError as exc:
        location = f" [{exc.field}]" if exc.field else ""
        sys.stderr.write(f"error{location}: {exc}\n")
        return ExitCode.VALIDATION_FAILURE

    return run(config, model, seed=args.seed, output=args.out, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
