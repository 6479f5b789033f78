"""Command line interface: ``python -m nonlocal_blowup <subcommand> --config PATH``."""

from __future__ import annotations

import argparse
import logging
import sys

from .runner import run_config

SUBCOMMANDS = ("solve", "certify", "classify", "sweep", "compare", "eig")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonlocal-blowup",
        description="Simulate, certify and classify the nonlocal reaction-diffusion problem.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run a '{name}' experiment config")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default: next to the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps and scale fans")
        p.add_argument("--seed", type=int, default=None, help="reserved; every computation is deterministic")
        p.add_argument("--emit-gnuplot", action="store_true", help="write a gnuplot script next to each CSV")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        logging.error("--threads must be at least 1")
        return 2
    return run_config(
        args.config,
        args.out,
        threads=args.threads,
        gnuplot=args.emit_gnuplot,
        expected_kind=args.command,
    )


if __name__ == "__main__":
    sys.exit(main())
