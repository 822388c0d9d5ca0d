"""Coverage of 95% intervals built from the asymptotic covariance.

    python scripts/coverage_study.py --reps 500 --n 4000 --out-dir runs/coverage

Thin wrapper over ``volinv study``; prints the per-parameter summary.
"""

import argparse
import json
import sys
from pathlib import Path

from volinv.cli import main as cli_main


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--theta", default="0,0.5,-0.1,0.3")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=6000)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", default="runs/coverage")
    args = p.parse_args(argv)

    cmd = ["study", f"--theta={args.theta}", "--n", str(args.n), "--reps", str(args.reps),
           "--seed", str(args.seed), "--out-dir", args.out_dir]
    if args.workers:
        cmd += ["--workers", str(args.workers)]
    code = cli_main(cmd)
    if code != 0:
        return code
    summary = json.loads((Path(args.out_dir) / "summary.json").read_text())
    print(f"{'param':>6} {'bias':>10} {'rmse':>9} {'cover':>6} {'skew':>7} {'exkurt':>7}")
    for name, s in summary["params"].items():
        print(f"{name:>6} {s['bias']:10.4g} {s['rmse']:9.4g} {s['coverage_95']:6.3f} "
              f"{s['skew']:7.3f} {s['excess_kurtosis']:7.3f}")
    print(f"failed replications: {summary['n_failed']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
