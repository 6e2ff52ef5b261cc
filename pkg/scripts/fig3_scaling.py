"""Finite-size scaling at delta = 2: F_c(N), tunneling time, power law above F_c.

Runs the fit and extrapolate tasks, prints the limits and writes fig3 column files.
Takes a few minutes for N = 3..12 on one core.
"""

import argparse
import json
from pathlib import Path

from kerrcrit.config import parse_config
from kerrcrit.figures import emit_figure_data
from kerrcrit.runner import Runner


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/fig3")
    ap.add_argument("--n", type=float, nargs="+", default=list(range(3, 13)))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = parse_config({
        "model": {"delta": 2.0, "u_tilde": 1.0},
        "fit": {"N": args.n, "bracket": [0.7, 1.2]},
        "tasks": ["semiclassical", "fit", "extrapolate"],
        "output": args.out,
    })
    if Runner(cfg, threads=args.threads).run():
        raise SystemExit(1)
    fits = json.loads((Path(args.out) / "fits.json").read_text())
    edges = json.loads((Path(args.out) / "edges.json").read_text())
    for key in ("f_c_inf", "kappa", "tau_r2", "b_inf", "f_inf", "slope_r2"):
        print(f"{key:>8} = {fits[key]:.4f}")
    print(f"F+ - F_c(inf) = {edges['f_plus'] - fits['f_c_inf']:.4f}")
    emit_figure_data(args.out, "fig3")


if __name__ == "__main__":
    main()
