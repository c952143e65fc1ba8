"""Compare negativity curves of two models, e.g. the CSVs from fig3_mu_sweep.py.

    python scripts/universality.py results/ising.csv results/xy.csv results/xx.csv
"""

import argparse

from blockneg.analysis import load_records, universality_compare


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("reference")
    ap.add_argument("others", nargs="+")
    ap.add_argument("--mu-cut", type=float, default=2.5)
    ap.add_argument("--size", type=int, help="use only records from this chain length")
    args = ap.parse_args()

    def read(path):
        recs = load_records(path)
        return [r for r in recs if args.size is None or r.n_sites == args.size] or recs

    ref = read(args.reference)
    for path in args.others:
        dev = universality_compare(ref, read(path), args.mu_cut)
        print(f"{path}: max relative deviation {dev:.4f} for mu <= {args.mu_cut}")


if __name__ == "__main__":
    main()
