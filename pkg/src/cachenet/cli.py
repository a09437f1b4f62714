"""Command-line front end.

Subcommands:
    run <config.json>         run the experiment described in a config file
    preset <name> [...]       run a bundled experiment preset
    validate <config.json>    check a configuration and report problems

Exit codes: 0 success, 2 configuration/validation error, 3 numerical-quality
error, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import sys

from .analytic import NumericalQualityError
from .config import ConfigError, load_document, network_from_dict
from .experiments import PRESET_NAMES, run_experiment, run_preset
from .numerics import ConvergenceError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachenet",
        description="Coverage, success-probability and ASE evaluation for a "
        "two-tier network with cache-equipped macro and mmWave pico BSs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment in a config file")
    p_run.add_argument("config", help="JSON configuration with an experiment section")

    p_pre = sub.add_parser("preset", help="run a bundled experiment preset")
    p_pre.add_argument("name", choices=PRESET_NAMES)
    p_pre.add_argument("--engine", choices=("analytic", "mc", "both"), default="both")
    p_pre.add_argument("--drops", type=int, default=None, help="Monte Carlo drops per curve")
    p_pre.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    p_pre.add_argument("--out", default=None, help="output CSV path (stem for multi-curve presets)")
    p_pre.add_argument("--no-figure", action="store_true", help="skip the PNG figure")

    p_val = sub.add_parser("validate", help="validate a configuration file")
    p_val.add_argument("config")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            written = run_experiment(load_document(args.config))
            for path in written:
                print(f"wrote {path}")
        elif args.command == "preset":
            engines = ("analytic", "mc") if args.engine == "both" else (args.engine,)
            written = run_preset(
                args.name,
                engines=engines,
                n_drops=args.drops,
                seed=args.seed,
                out=args.out,
                figure=not args.no_figure,
            )
            for path in written:
                print(f"wrote {path}")
        else:  # validate
            doc = load_document(args.config)
            network_from_dict(doc)
            if "experiment" in doc:
                from .experiments import spec_from_document

                spec_from_document(doc)
            print(f"{args.config}: OK")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalQualityError, ConvergenceError) as exc:
        print(f"numerical-quality error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
