"""Command line entry point.

    dyadiclab run --config cfg.ini [--out DIR] [--workers N]
    dyadiclab validate --config cfg.ini
    dyadiclab list-experiments

Exit codes: 0 success, 2 validation failure, 3 an asserted tolerance was
breached (for CI gating).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, FeasibilityError
from .experiments import EXPERIMENTS, ExperimentConfig, run, validate


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dyadiclab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write CSV/plots")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory (default: config value)")
    p_run.add_argument("--workers", type=int, default=None)

    p_val = sub.add_parser("validate", help="static feasibility check of a config")
    p_val.add_argument("--config", required=True)

    sub.add_parser("list-experiments", help="print the experiment registry")

    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name in sorted(EXPERIMENTS):
            print(name)
        return 0

    try:
        cfg = ExperimentConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        ok, msgs = validate(cfg)
        for m in msgs:
            print(m)
        print("feasible" if ok else "infeasible")
        return 0 if ok else 2

    out_dir = args.out if args.out is not None else cfg["out"]
    try:
        table = run(cfg, out_dir=out_dir, workers=args.workers)
    except (ConfigError, FeasibilityError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    n_fail = len(table.failures)
    print(f"{cfg['experiment']}: {len(table.rows)} rows, {n_fail} failures "
          f"-> {out_dir}/{cfg['experiment']}.csv")
    for row in table.failures:
        print("FAIL: " + ", ".join(row), file=sys.stderr)
    return 3 if n_fail else 0


if __name__ == "__main__":
    sys.exit(main())
