"""Command line entry point.

    wpmtc validate CONFIG
    wpmtc run CONFIG --experiment {histogram,fairness,energy,all} [--seed N] [--out DIR]
              [--layouts N]
    wpmtc default-config

Exit codes: 0 success, 1 I/O error, 2 invalid configuration, 3 numeric/geometry
failure.
Log verbosity comes from ``WPMTC_LOG_LEVEL`` (default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import default_config_text, dumps_config, load_config
from .errors import ConfigError, WpmtcError
from .experiments import EXPERIMENTS, run_experiment

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpmtc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file and print its normalized form")
    p.add_argument("config")

    p = sub.add_parser("run", help="run experiments and write CSV outputs")
    p.add_argument("config")
    p.add_argument("--experiment", choices=[*EXPERIMENTS, "all"], default="all")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    p.add_argument("--layouts", type=int, default=0, metavar="N",
                   help="also average fairness/energy curves over N redrawn cluster layouts")

    sub.add_parser("default-config", help="print the shipped default scenario")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("WPMTC_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "default-config":
        sys.stdout.write(default_config_text())
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            sys.stdout.write(dumps_config(cfg))
            return EXIT_OK
        manifest = run_experiment(cfg, args.experiment, args.seed, args.out, args.layouts)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WpmtcError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name in sorted(manifest.files):
        print(name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
