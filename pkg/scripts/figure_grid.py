"""Export G and its continuous counterpart n*x near zero for a count file.

    python3 scripts/figure_grid.py path/to/counts.csv --hi 0.001 --out grid.csv

Also prints the average ratio G / (n x) over the grid, a one-number summary
of how much the discreteness shrinks the effective number of tests.
"""

import argparse

import numpy as np

from discrete_fdr.cli import pooled_tests, read_counts, resolve
from discrete_fdr.stepfun import aggregate, format_grid, ratio_grid


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("counts", nargs="?", default="synthetic")
    ap.add_argument("--sided", choices=("one", "two"), default="one")
    ap.add_argument("--hi", type=float, default=0.001)
    ap.add_argument("--points", type=int, default=1001)
    ap.add_argument("--out", default="g_grid.csv")
    args = ap.parse_args()

    _, dists = pooled_tests(read_counts(resolve(args.counts)), args.sided)
    g = aggregate(dists)
    rows = ratio_grid(g, 0.0, args.hi, args.points)
    with open(args.out, "w") as fh:
        fh.write(format_grid(rows))
    ratio = float(np.mean(rows[1:, 1] / rows[1:, 2]))
    print(f"n={g.n}, mean G/(n x) on (0, {args.hi:g}] = {ratio:.4f} (about 1/{1 / ratio:.2f}); grid -> {args.out}")


if __name__ == "__main__":
    main()
