"""Closed-form diagonal of B against Monte Carlo and the exact moment recursion.

    python scripts/bmatrix_check.py --theta 0,0.5,-0.1,0.3

Prints, per parameter, the closed form with both B22 variants, the exact
value from the second-moment recursion and the Monte Carlo estimate with its SE.
"""

import argparse

import numpy as np

from volinv.asymptotics import (
    b_diag_closed_form,
    b_matrix_mc,
    b_matrix_moments,
    check_mm_prime,
    innovation_moments,
)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--theta", default="0,0.5,-0.1,0.3")
    p.add_argument("--m", type=int, default=100_000)
    p.add_argument("--trunc", type=int, default=400)
    p.add_argument("--seed", type=int, default=2)
    args = p.parse_args(argv)

    th = tuple(float(v) for v in args.theta.split(","))
    mom = innovation_moments(th)
    check = check_mm_prime(mom)
    print(f"E V = {mom.e_v:.6g}, E V^2 = {mom.e_v2:.6g}, moment condition {'holds' if check else 'fails'}")
    if not check:
        return
    closed = b_diag_closed_form(th, mom)
    closed_exact22 = b_diag_closed_form(th, mom, b22="exact")
    exact = np.diag(b_matrix_moments(th))
    est = b_matrix_mc(th, m=args.m, L=args.trunc, seed=args.seed)
    mc, se = np.diag(est.B), np.diag(est.se)
    print(f"{'':>6} {'closed':>10} {'exact B22':>10} {'recursion':>10} {'mc':>10} {'mc se':>9} {'z(closed)':>10}")
    for i, name in enumerate(("alpha", "beta", "gamma", "delta")):
        z = (closed[i] - mc[i]) / se[i] if se[i] > 0 else float("nan")
        print(f"{name:>6} {closed[i]:10.5g} {closed_exact22[i]:10.5g} {exact[i]:10.5g} {mc[i]:10.5g} {se[i]:9.3g} {z:10.3g}")


if __name__ == "__main__":
    main()
