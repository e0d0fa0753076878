#!/usr/bin/env python3
"""Threshold dependence of D_pos, recomputed from existing run archives.

Reward parameters stay fixed at the archive's values; only the counting
threshold moves. Point this at the run directories produced by
run_fig3_scaling.py (or any optimize archives).
"""

import argparse

from eigenwork import runner


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("runs", nargs="+", help="run directories to recount")
    ap.add_argument("--eps", type=float, nargs="+",
                    default=[0.10, 0.125, 0.15, 0.175])
    ap.add_argument("-o", "--out", default="runs/threshold_sweep.csv")
    args = ap.parse_args()

    rows = runner.run_threshold_sweep(args.runs, args.eps, out_path=args.out)
    for row in rows:
        print(f"{row['preset']} L={row['L']} k={row['k']} "
              f"eps={row['epsilon']:g}: D_pos = {row['d_pos_final']}")
    print(f"table at {args.out}")


if __name__ == "__main__":
    main()
