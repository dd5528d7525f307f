"""Square-crossing probabilities of the Ising model above T_c as the field varies.

Shows the crossing probability of S(n) rising through 1/2 near h_c(T) and
sharpening with n.
"""

import argparse

import numpy as np

from isingperc.estimators import SamplingPlan, crossing_event, estimate_prob
from isingperc.gibbs import BoundaryCondition, ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=3.4)
    ap.add_argument("--fields", type=float, nargs="+", default=list(np.linspace(0.0, 0.4, 9)))
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("--samples", type=int, default=400)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--wolff", type=int, default=0, help="Wolff updates per sweep")
    args = ap.parse_args()

    plan = SamplingPlan(args.samples, seed=args.seed, wolff_per_sweep=args.wolff)
    bc = BoundaryCondition("periodic")
    print("h      " + "  ".join(f"n={n:<10d}" for n in args.sizes))
    for h in args.fields:
        model = ModelParams.ising(args.T, h)
        cells = []
        for n in args.sizes:
            e = estimate_prob(crossing_event(n), model, n, plan, bc)
            cells.append(f"{e.mean:.3f}+-{e.stderr:.3f}")
        print(f"{h:<6.3f} " + "  ".join(cells))


if __name__ == "__main__":
    main()
