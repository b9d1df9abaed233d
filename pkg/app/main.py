from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.cli.commands import COMMANDS, CommandContext, handle_command
from app.cli.config import load_config
from app.contour.nodes import configure_cache
from app.errors import ConvergenceError, FracError, NearSingularError
from app.problem.solver import SolveError
from app.settings import load_settings

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger("fracdir")


def _setup_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), stream=sys.stderr)


def _non_negative(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracdir", description="Fractional Cauchy-Dirichlet solver and regularity lab")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="INI run configuration")
    parser.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] directory)")
    parser.add_argument("--refine", type=_non_negative, default=0, help="halve h and T/M this many times")
    parser.add_argument("--seed", type=_non_negative, default=0, help="seed for randomized probes")
    parser.add_argument("--log-level", default=None, help="overrides FRACDIR_LOG_LEVEL")
    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SolveError):
        return exit_code_for(exc.cause)
    if isinstance(exc, (ConvergenceError, NearSingularError)):
        return EXIT_NUMERICAL
    return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = load_settings()
    _setup_logging(args.log_level or settings.log_level)
    configure_cache(settings.contour_cache_size)

    try:
        config = load_config(args.config) if args.config is not None else None
        ctx = CommandContext(settings=settings, config=config, out_dir=args.out, refine=args.refine, seed=args.seed)
        result = handle_command(ctx, args.command)
    except FracError as exc:
        code = exit_code_for(exc)
        logger.error("command=%s failed exit=%s error=%s", args.command, code, exc)
        print(f"error: {exc}", file=sys.stderr)
        return code

    sys.stdout.write(result.report.text)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
