#!/usr/bin/env python3
"""Per-run detector timing on one 1600x32 synthetic dataset.

A run determines the k-NN sets for one candidate k from the shared
pairwise distances and scores; dimensionality-aware runs also pay for the
LID estimation pass of their (detector k, LID k) combination. Absolute
numbers are hardware-bound; the ratios are the interesting part.
"""

import argparse

from daodet.evaluation import time_detectors
from daodet.synthgen import SynthSpec, generate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=9)
    parser.add_argument("--dim-c2", type=int, default=16)
    args = parser.parse_args()

    ds, _ = generate(SynthSpec(dim_c2=args.dim_c2, seed=args.seed))
    print(f"dataset {ds.name}: n={ds.n}, d={ds.dim}")
    ks = list(range(5, 101, 5))
    timed = time_detectors(ds, ["knn", "slof", "lof", "dao"], ks)
    for det, (mean_s, std_s) in timed.items():
        print(f"  {det:5s} {mean_s * 1e3:7.2f} ms +- {std_s * 1e3:.2f} ms per run")
    means = {det: m for det, (m, _) in timed.items()}
    base = [means["knn"], means["slof"], means["lof"]]
    print(f"baseline spread x{max(base) / min(base):.2f}, dao/slof x{means['dao'] / means['slof']:.2f}")


if __name__ == "__main__":
    main()
