#!/usr/bin/env python3
"""Desk-scale 1-D interpolation experiment.

Synthesises data, runs the hierarchical inversion with the Cauchy-walk
hypermodel, runs the constant length-scale baseline sweep, and prints a
comparison table. Outputs land in out/interp1d (override with --out).

Roughly five minutes at the default K=10000; pass --full-scale for the
K=100000 regime.
"""

import argparse
import os
import sys

import numpy as np

from maternhyper.cli import main as cli_main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/interp1d")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--full-scale", action="store_true",
                    help="K=100000, burn-in 50000")
    args = ap.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    cfg_path = os.path.join(args.out, "config.toml")
    iters, burn = (100000, 50000) if args.full_scale else (10000, 5000)
    with open(cfg_path, "w") as fh:
        fh.write(f"""
[problem]
kind = "interp1d"

[mcmc]
iterations = {iters}
burn_in = {burn}
seed = {args.seed}

[output]
directory = "{args.out}"
""")

    for step in (
        ["make-data", "--config", cfg_path],
        ["invert", "--config", cfg_path, "--trace-nodes", "15,66",
         "--kde-nodes", "128,129,130", "--emit-gnuplot"],
        ["baseline", "--config", cfg_path],
    ):
        code = cli_main(step)
        if code != 0:
            return code

    truth = np.genfromtxt(os.path.join(args.out, "truth.csv"),
                          delimiter=",", names=True)["value"]
    cm = np.genfromtxt(os.path.join(args.out, "cm_v.csv"),
                       delimiter=",", names=True)["mean"]
    base = np.genfromtxt(os.path.join(args.out, "baseline.csv"),
                         delimiter=",", names=True)
    rmse = float(np.sqrt(np.mean((cm - truth) ** 2)))
    best = float(base["rmse"].min())
    print(f"hypermodel CM rmse : {rmse:.4f}")
    print(f"best constant-ell  : {best:.4f} (ell = "
          f"{float(base['ell'][np.argmin(base['rmse'])]):.3f})")
    print(f"outputs in {args.out} (gnuplot script: plots.gp)")
    return 0


if __name__ == "__main__":
    sys.exit(run())
