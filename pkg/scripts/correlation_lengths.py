"""Finite-size correlation length L(p) on both sides of p_c, with L(p) |p - p_c|^nu."""

import argparse

from isingperc.estimators import SamplingPlan, correlation_length
from isingperc.gibbs import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p-c", type=float, default=0.592746)
    ap.add_argument("--offsets", type=float, nargs="+", default=[-0.08, -0.04, -0.02, 0.02, 0.04, 0.08])
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--cap", type=int, default=8000)
    ap.add_argument("--n-max", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    plan = SamplingPlan(args.samples, seed=args.seed, max_samples=args.cap)
    print(f"{'p':>8s} {'side':>5s} {'L':>5s} {'status':>10s} {'L|dp|^(4/3)':>12s}")
    for d in args.offsets:
        p = args.p_c + d
        res = correlation_length(ModelParams.bernoulli(p), args.eps, args.n_max, plan,
                                 side="super" if d > 0 else "sub")
        print(f"{p:8.4f} {res.side or '-':>5s} {res.L:5d} {res.status:>10s} {res.L * abs(d) ** (4 / 3):12.4f}")


if __name__ == "__main__":
    main()
