"""Negativity at fixed mu versus transverse field for several chain lengths.

Curves for different N should cross near the critical field.  Example::

    python scripts/fig2_lambda_scan.py --sizes 64 128 --lambdas 0.9 0.95 1 1.05 1.1
"""

import argparse
import logging
from fractions import Fraction

from blockneg.analysis import lambda_scan
from blockneg.dmrg import DmrgConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--mu", type=Fraction, default=Fraction(2, 3))
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.9, 0.95, 1.0, 1.05, 1.1])
    ap.add_argument("--kept-states", type=int, default=60)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="CSV file for the table")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    outcome = lambda_scan(
        args.gamma, args.mu, args.sizes, args.lambdas, DmrgConfig(max_kept_states=args.kept_states), args.jobs
    )
    by_lam = {}
    for r in outcome.records:
        by_lam.setdefault(r.lam, {})[r.n_sites] = r.negativity
    sizes = sorted({r.n_sites for r in outcome.records})
    lines = ["lambda," + ",".join(f"N={n}" for n in sizes)]
    for lam in sorted(by_lam):
        lines.append(f"{lam:g}," + ",".join(f"{by_lam[lam].get(n, float('nan')):.6f}" for n in sizes))
    print("\n".join(lines))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    for failure in outcome.failures:
        print("failed:", failure)


if __name__ == "__main__":
    main()
