"""Scan injectivity of B_s over geometric parameters, gaps and gamma1.

Prints one row per (p, gamma1, s) with the minimal a-factor and the verdict;
the analytic edge for geometric laws is p = 2 gamma1 cos(2 pi / s).
"""

import argparse
import csv
import math
import sys

import numpy as np

from weakrec.pmf import geometric
from weakrec.spectral import classify_injectivity


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=list(np.round(np.arange(0.05, 1.0, 0.05), 2)))
    ap.add_argument("--gamma1", type=float, nargs="+", default=[1.0, 1.5, 2.0])
    ap.add_argument("--s", type=int, nargs="+", default=[2, 3, 4, 5, 6, 8, 12])
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["p", "gamma1", "s", "a_min", "edge", "injective"])
    for p in args.p:
        d = geometric(p)
        for g1 in args.gamma1:
            for s in args.s:
                v = classify_injectivity(s, g1, d)
                edge = 2 * g1 * math.cos(2 * math.pi / s)
                w.writerow([p, g1, s, repr(min(v.ell_minima.values())), repr(edge), v.injective])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
