#!/usr/bin/env python3
"""Entropy change vs extracted work density per eigenstate at t=1.

Runs local (k=4) and global (k=L/2) control for both presets and collects
fig4_deltaS_vs_w.csv, whose rows carry both sign conventions of the entropy
change and the D_pos membership flag. The desk-scale default is L=12; the
source study's size for this figure needs --long-run and patience.
"""

import argparse
from pathlib import Path

from eigenwork import runner
from eigenwork.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, default=12)
    ap.add_argument("--k-local", type=int, default=4)
    ap.add_argument("--outdir", default="runs/fig4")
    ap.add_argument("--long-run", action="store_true")
    args = ap.parse_args()

    outdir = Path(args.outdir)
    run_dirs = []
    for preset in ("nonintegrable", "integrable"):
        for label, k in (("local", args.k_local), ("global", args.L // 2)):
            data = {"preset": preset, "L": args.L, "mode": "optimize", "k": k,
                    "outdir": str(outdir / f"{preset}_{label}"),
                    "long_run": args.long_run}
            run_dirs.append(runner.run(ExperimentConfig.from_dict(data)))
            print(f"done: {preset} {label} (k={k})")
    runner.write_report(run_dirs, outdir)
    print(f"figure data under {outdir}")


if __name__ == "__main__":
    main()
