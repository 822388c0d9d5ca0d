"""Model-implied Lyapunov coefficient over a (beta, delta) grid, as a plot-ready CSV.

    python scripts/invertibility_map.py --alpha 0 --gamma 0 --out map.csv

Negative values mark parameters where the observation-driven filter forgets
its start; ``E V^2`` is written alongside so the moment region can be drawn too.
"""

import argparse
import csv

import numpy as np

from volinv.asymptotics import innovation_moments
from volinv.invertibility import model_implied_lyapunov


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--betas", default="0:0.95:20", help="lo:hi:count")
    p.add_argument("--deltas", default="0:6:25", help="lo:hi:count")
    p.add_argument("--m", type=int, default=20_000)
    p.add_argument("--trunc", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="invertibility_map.csv")
    args = p.parse_args(argv)

    def axis(text):
        lo, hi, k = text.split(":")
        return np.linspace(float(lo), float(hi), int(k))

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "delta", "lyapunov", "se", "e_v2"])
        for beta in axis(args.betas):
            for delta in axis(args.deltas):
                if delta < abs(args.gamma):
                    continue
                th = (args.alpha, beta, args.gamma, delta)
                rep = model_implied_lyapunov(th, m=args.m, trunc=args.trunc, seed=args.seed)
                w.writerow([f"{beta:.6g}", f"{delta:.6g}", f"{rep.value:.6g}", f"{rep.std_error:.3g}",
                            f"{innovation_moments(th).e_v2:.6g}"])
    print(args.out)


if __name__ == "__main__":
    main()
