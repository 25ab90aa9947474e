"""Command-line entry point: `diffeoreg {register,modal,check,flow-eval} --config PATH`."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandera as pa

from diffeoreg.cli.checks import run_check
from diffeoreg.cli.commands import run_flow_eval, run_modal, run_register
from diffeoreg.cli.config import load_config
from diffeoreg.errors import ConfigError, RegistrationError
from diffeoreg.io.artifacts import read_vector

logger = logging.getLogger("diffeoreg")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

COMMANDS = ("register", "modal", "check", "flow-eval")


def _param_sweep(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffeoreg",
        description="Parametric diffeomorphic registration with vector flows and compositional maps.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", type=Path, required=True, help="Run config (.json or .toml)")
        sub.add_argument("--out", default=None, help="Output directory (overrides output.directory)")
        sub.add_argument("--seed", type=int, default=None, help="Random seed (overrides seed)")
        sub.add_argument("--threads", type=int, default=None, help="Worker threads (overrides threads)")
        sub.add_argument(
            "--log-level",
            default="INFO",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="Logging level",
        )
        if name == "register":
            sub.add_argument("--param-sweep", type=_param_sweep, default=None, help="Comma-separated mu values")
            sub.add_argument("--coefficients", type=Path, default=None, help="Warm-start coefficient file")
        if name == "flow-eval":
            sub.add_argument("--coefficients", type=Path, required=True, help="Coefficient file to evaluate")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    config = load_config(args.config).with_overrides(out=args.out, seed=args.seed, threads=args.threads)
    if args.command == "register":
        initial = read_vector(args.coefficients) if args.coefficients is not None else None
        return run_register(config, args.param_sweep, initial)
    if args.command == "modal":
        return run_modal(config)
    if args.command == "check":
        return run_check(config)
    return run_flow_eval(config, args.coefficients)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ConfigError, pa.errors.SchemaErrors, pa.errors.SchemaError) as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_VALIDATION
    except (RegistrationError, np.linalg.LinAlgError) as exc:
        logger.error("Numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
