"""``sgpbounds`` command-line entry point.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failure of a non-sweep command.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from ..gp_exact import DESK_GUARD, DeskScaleError
from ..linalg import ConditioningError
from .config import EXPERIMENTS, ConfigError, load_config
from .runners import run_compare, run_single, run_spectrum, run_sweep

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
log = logging.getLogger("sgpbounds")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgpbounds", description="Sparse GP bound experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run a {name} experiment")
        s.add_argument("--config", required=True, help="YAML experiment config")
        s.add_argument("--out", default=None, help="output directory (overrides config 'out')")
        s.add_argument("--seed", type=int, default=0, help="master seed")
        s.add_argument("--threads", type=int, default=1, help="parallel cells for sweep/compare")
        s.add_argument(
            "--desk-guard", type=int, default=DESK_GUARD,
            help="largest N for O(N^3) exact computations; 0 disables the guard",
        )
    return p


def _dispatch(args, cfg):
    out = args.out or cfg.out
    guard = None if args.desk_guard == 0 else args.desk_guard
    if args.command == "sweep":
        return run_sweep(cfg, out, args.seed, args.threads, guard)
    if args.command == "compare":
        return run_compare(cfg, out, args.seed, args.threads, guard)
    if args.command == "spectrum":
        return run_spectrum(cfg, out)
    return run_single(cfg, out, args.seed, guard)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        log.error("--threads must be at least 1")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}")
        result = _dispatch(args, cfg)
    except (ConfigError, DeskScaleError) as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except (ConditioningError, np.linalg.LinAlgError, FloatingPointError) as e:
        log.error("numerical failure: %s", e)
        return EXIT_NUMERIC
    print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
