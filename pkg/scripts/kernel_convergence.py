"""Kernel residual ||B_s z|| / ||z|| as the computation window doubles."""

import argparse

from weakrec.operator import TruncationWindow
from weakrec.pmf import parse_dist
from weakrec.spectral import eigen_test, kernel_residual, roots_of_unity


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dist", default="geo:0.5")
    ap.add_argument("--s", type=int, nargs="+", default=[5, 6, 8])
    ap.add_argument("--gamma1", type=float, default=None)
    ap.add_argument("--L", type=int, default=200)
    ap.add_argument("--M", type=int, nargs="+", default=[250, 500, 1000, 2000, 4000, 8000, 16000])
    args = ap.parse_args(argv)

    d = parse_dist(args.dist)
    g1 = args.gamma1 or (d.gamma.gamma1 if d.gamma else 1.0)
    print(f"{'s':>3} {'M':>7} {'residual':>12}  eigen")
    for s in args.s:
        verdict = eigen_test(g1 * roots_of_unity(s)[0], d).is_eigen
        for M in args.M:
            r = kernel_residual(s, g1, d, TruncationWindow(M, min(args.L, M)))
            print(f"{s:>3} {M:>7} {r:>12.3e}  {verdict}")


if __name__ == "__main__":
    main()
