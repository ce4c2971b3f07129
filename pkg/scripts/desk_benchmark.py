#!/usr/bin/env python3
"""Desk-scale benchmark: generate the synthetic suite, sweep all four
detectors, and emit every report artifact (trend plot, scatter data,
regression tables, rank summary).

The full-size study uses --reps 30 --dims 2..32:2 and takes a while;
the default here is the 5x4 desk configuration.
"""

import argparse
import sys
from pathlib import Path

from daodet.cli import main as cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="desk_benchmark", help="output directory")
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument("--dims", default="2,8,16,32")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--threads", default=None)
    args = parser.parse_args()

    out = Path(args.out)
    data_dir, report_dir = out / "data", out / "report"
    records = out / "records.csv"

    steps = [
        ["gen", "--reps", str(args.reps), "--dims", args.dims,
         "--seed", str(args.seed), "--out", str(data_dir)],
        ["run", "--data", str(data_dir), "--k", "5..100:5", "--estimator", "mle",
         "--out", str(records)]
        + (["--threads", args.threads] if args.threads else []),
        ["report", "--records", str(records),
         "--analysis", "fig1", "fig2", "tables", "ranks", "--out", str(report_dir)],
    ]
    for step in steps:
        code = cli(step)
        if code != 0:
            return code
    print(f"\nartifacts under {out}/: data/, records.csv, report/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
