"""Check N(Delta, x) against N(2 Delta, 2 x) at the critical point.

Each ratio mu needs two chains, N and 2N, with N = Delta (2 + mu)::

    python scripts/scale_invariance.py --pairs 2/3:128 1:132 2:128
"""

import argparse
import logging
from fractions import Fraction

from blockneg.analysis import realize_mu, series_records
from blockneg.dmrg import DmrgConfig, run_dmrg
from blockneg.model import ModelParams


def negativity_at(n, gamma, lam, mu, config):
    delta, x = realize_mu(n, mu)
    result = run_dmrg(ModelParams(n, gamma, lam), config)
    (rec,) = series_records(result, keep=lambda d, _: d == delta, stop=lambda d, _: d < delta)
    return delta, x, rec.negativity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ap.add_argument("--pairs", nargs="+", default=["2/3:128", "1:132", "2:128"], help="mu:N")
    ap.add_argument("--kept-states", type=int, default=60)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    config = DmrgConfig(max_kept_states=args.kept_states)

    for pair in args.pairs:
        mu_text, n_text = pair.split(":")
        mu, n = Fraction(mu_text), int(n_text)
        if realize_mu(n, mu) is None or realize_mu(2 * n, mu) is None:
            print(f"mu={mu} is not realizable at N={n} and {2 * n}")
            continue
        d1, x1, a = negativity_at(n, args.gamma, args.lam, mu, config)
        d2, x2, b = negativity_at(2 * n, args.gamma, args.lam, mu, config)
        print(f"mu={mu}: N({d1},{x1}) = {a:.6f}  N({d2},{x2}) = {b:.6f}  ratio - 1 = {b / a - 1:+.4f}")


if __name__ == "__main__":
    main()
