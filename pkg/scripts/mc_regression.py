"""Monte Carlo E(W_{i+s} | W_i = j) against the exact operator computation.

Also reports the fitted line through the empirical means.
"""

import argparse

import numpy as np

from weakrec.operator import TruncationWindow, regression_vector
from weakrec.pmf import parse_dist
from weakrec.simulate import estimate_regression, fit_line


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dist", default="geo:0.5")
    ap.add_argument("--s", type=int, default=5)
    ap.add_argument("--jmax", type=int, default=10)
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    d = parse_dist(args.dist)
    js = range(args.jmax if not d.is_finite else min(args.jmax, d.support + 1))
    exact = regression_vector(d, args.s, TruncationWindow(2000, len(js))).values(d)
    est = estimate_regression(d, args.s, js, args.paths, args.seed)
    print(f"{'j':>3} {'mean':>12} {'stderr':>10} {'exact':>12} {'z':>7}")
    for e in est:
        z = (e.mean - exact[e.j]) / e.stderr if e.stderr > 0 else 0.0
        print(f"{e.j:>3} {e.mean:>12.5f} {e.stderr:>10.5f} {exact[e.j]:>12.5f} {z:>7.2f}")
    if len(est) >= 2:
        fit = fit_line([(e.j, e.mean, e.stderr) for e in est])
        line = np.polyfit(np.arange(len(exact)), exact, 1)
        print(f"fitted beta0={fit.beta0:.4f} beta1={fit.beta1:.4f}  exact beta0={line[1]:.4f} beta1={line[0]:.4f}")


if __name__ == "__main__":
    main()
