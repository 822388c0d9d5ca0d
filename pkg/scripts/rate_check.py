"""Median absolute error at two sample sizes; the ratio should be near sqrt(n2/n1).

    python scripts/rate_check.py --n-small 2000 --n-large 8000 --reps 100
"""

import argparse
import math

from volinv.models import parse_theta
from volinv.study import StudyConfig, median_error_ratio, run_study


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="egarch11")
    p.add_argument("--theta", default="0,0.5,-0.1,0.3")
    p.add_argument("--n-small", type=int, default=2000)
    p.add_argument("--n-large", type=int, default=8000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--workers", type=int)
    args = p.parse_args(argv)

    th = parse_theta(args.model, args.theta)
    studies = [
        run_study(StudyConfig(args.model, th, n=n, reps=args.reps, seed=n, workers=args.workers))
        for n in (args.n_small, args.n_large)
    ]
    ratio = median_error_ratio(*studies)
    print(f"expected ratio {math.sqrt(args.n_large / args.n_small):.3f}")
    for name, r in ratio.items():
        print(f"{name:>6} {r:.3f}")


if __name__ == "__main__":
    main()
