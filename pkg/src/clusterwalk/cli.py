"""Command-line entry point: ``walk run``, ``walk preset``, ``walk list-presets``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .lattice import BoundaryCrossing
from .oracle import CapacityError
from .presets import UnknownPreset, list_presets, preset
from .report import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREACH = 3
EXIT_CAPACITY = 4

OUT_ENV = "CLUSTERWALK_OUT_DIR"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walk", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a TOML scenario file")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./out)")
    r.add_argument("--verify", action="store_true", help="cross-check against the dense oracle")

    pr = sub.add_parser("preset", help="run a built-in experiment")
    pr.add_argument("name")
    pr.add_argument("--steps", type=int)
    pr.add_argument("--out", type=Path)
    pr.add_argument("--verify", action="store_true")

    sub.add_parser("list-presets", help="show available presets")
    return p


def _out_dir(arg: Path | None, name: str) -> Path:
    if arg is not None:
        return arg
    return Path(os.environ.get(OUT_ENV, "out")) / name


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    if args.command == "list-presets":
        for name in list_presets():
            print(name)
        return EXIT_OK
    try:
        if args.command == "run":
            config = load_config(args.config)
        else:
            if args.steps is not None and args.steps < 1:
                raise ConfigError("--steps must be a positive integer", "steps")
            config = preset(args.name, args.steps)
        out = _out_dir(args.out, config.name)
        report = run(config, out, verify=args.verify or None)
    except (ConfigError, UnknownPreset, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, BoundaryCrossing) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    for key, value in report.summary.items():
        print(f"{key}: {value}")
    print(f"wrote {len(report.outputs)} files to {out}")
    if report.breaches:
        for b in report.breaches:
            print(f"breach: {b}", file=sys.stderr)
        return EXIT_BREACH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
