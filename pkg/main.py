"""
Command-line entry point.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import BaseModel, ValidationError

from api.commands import cmd_find, cmd_packing_demo, cmd_verify
from core.config import Settings, settings
from core.exceptions import AppException, InvalidOption, create_error_report
from sos.pipeline import FindOptions

logger = logging.getLogger(__name__)


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _permutation(text: str):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated indices, got {text!r}"
        ) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Exact sum-of-squares certificates for polynomials.",
    )
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
    )
    parser.add_argument("--version", action="version", version=settings.app_version)
    commands = parser.add_subparsers(dest="command", required=True)

    find = commands.add_parser("find", help="search for a certificate")
    find.add_argument("input", type=Path, help="polynomial file")
    find.add_argument("--out", type=Path, help="certificate destination")
    find.add_argument("--report", type=Path, help="JSON report destination")
    find.add_argument("--no-symmetry", action="store_true", help="skip symmetry blocks")
    find.add_argument("--dense", action="store_true", help="use the full monomial basis")
    find.add_argument("--swap", type=_permutation, help="explicit swap, e.g. 1,0,3,2")
    find.add_argument("--trace", type=Path, help="solver progress destination")
    find.add_argument("--denominator-bound", type=int)
    find.add_argument("--feas-tol", type=float)

    verify = commands.add_parser("verify", help="check a certificate exactly")
    verify.add_argument("target", type=Path, help="polynomial file")
    verify.add_argument("certificate", type=Path, help="certificate file")
    verify.add_argument("--report", type=Path, help="JSON report destination")

    demo = commands.add_parser(
        "paper-demo",
        aliases=["packing-demo"],
        help="rebuild and check the packing polynomial",
    )
    demo.add_argument("--samples", type=int, default=settings.samples)
    demo.add_argument("--seed", type=int, default=settings.seed)
    demo.add_argument("--rediscover", action="store_true", help="search for a fresh certificate")
    demo.add_argument("--out", type=Path, help="five-square certificate destination")
    demo.add_argument("--rediscover-out", type=Path, help="rediscovered certificate destination")
    demo.add_argument("--report", type=Path, help="JSON report destination")
    demo.add_argument("--denominator-bound", type=int)
    demo.add_argument("--feas-tol", type=float)
    return parser


def _emit(report: BaseModel, destination: Optional[Path]) -> None:
    text = report.model_dump_json(indent=2)
    if destination is None:
        sys.stdout.write(text + "\n")
    else:
        destination.write_text(text + "\n", encoding="utf-8")
        logger.info("Report written to %s", destination)


def run(args: argparse.Namespace, config: Settings) -> int:
    if args.command == "find":
        options = FindOptions(
            symmetry=not args.no_symmetry,
            dense=args.dense,
            swap=args.swap,
            trace_path=args.trace,
            config=config,
        )
        report, code = cmd_find(args.input, args.out, options)
    elif args.command == "verify":
        report, code = cmd_verify(args.target, args.certificate)
    else:
        report, code = cmd_packing_demo(
            samples=args.samples,
            seed=args.seed,
            rediscover=args.rediscover,
            out=args.out,
            rediscover_out=args.rediscover_out,
            config=config,
        )
    _emit(report, args.report)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_level or settings.log_level)
    logger.info("Starting %s v%s", settings.app_name, settings.app_version)
    try:
        try:
            config = settings.with_overrides(
                denominator_bound=getattr(args, "denominator_bound", None),
                feas_tol=getattr(args, "feas_tol", None),
            )
        except ValidationError as exc:
            raise InvalidOption(
                "Invalid option",
                {"errors": [error["msg"] for error in exc.errors()]},
            ) from exc
        return run(args, config)
    except AppException as exc:
        logger.error("%s: %s", type(exc).__name__, exc.message)
        sys.stdout.write(json.dumps(create_error_report(exc), indent=2) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
