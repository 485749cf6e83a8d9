"""Command-line driver: load a scenario, simulate it and write the result files.

Exit codes: 0 success, 2 config error, 3 assumption violation, 4 numerical failure.
Set ``HIERDETECT_LOG_LEVEL`` (e.g. ``DEBUG``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import simulation
from .exceptions import AssumptionViolation, ConfigError, LPError
from .scenario import load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERICAL = 4
LOG_ENV = "HIERDETECT_LOG_LEVEL"

log = logging.getLogger("hierdetect")


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i:j, got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hierdetect", description=__doc__.splitlines()[0])
    p.add_argument("scenario", help="scenario JSON file, or the name of a bundled scenario")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--horizon-override", type=int, metavar="STEPS", help="override the number of steps")
    p.add_argument("--no-if", action="store_true", help="skip the Monte-Carlo intersection fraction")
    p.add_argument("--out-dir", help="output directory (default: the scenario's output.dir)")
    p.add_argument("--project", type=_pair, action="append", default=[], metavar="I:J",
                   help="emit D_ell/D_s polygons projected on coordinates I and J; repeatable")
    p.add_argument("--validate-only", action="store_true", help="load and validate, then exit")
    return p


def _configure_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()
    try:
        cfg = load_scenario(args.scenario)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.horizon_override is not None:
            if args.horizon_override < 1:
                raise ConfigError("--horizon-override: must be >= 1")
            changes["horizon"] = args.horizon_override
        if changes:
            cfg = dataclasses.replace(cfg, **changes)
        n = int(sum(cfg.model.dims))
        for a, b in args.project:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ConfigError(f"--project {a}:{b}: need two distinct coordinates in [0, {n})")
        if args.validate_only:
            print(f"{cfg.name}: ok ({cfg.model.size} subsystems, {cfg.horizon} steps)")
            return EXIT_OK
        outputs = simulation.run(cfg, compute_if=False if args.no_if else None,
                                 projections=args.project or None)
        out_dir = Path(args.out_dir or cfg.output.directory)
        simulation.emit(outputs, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolation as exc:
        for v in exc.violations:
            print(f"assumption violated: {v}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except LPError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    s = outputs.summary()
    first = s["first_detection_time"]
    print(f"{cfg.name}: {cfg.horizon} steps, "
          + ("no detection" if first is None else f"first detection at {first:g} s (step {s['first_detection_step']})")
          + f", results in {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
