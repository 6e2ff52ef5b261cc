"""Photon density n/N and g2 across the transition at delta = 3, several N.

Writes steady.csv and the fig1 column files under OUT/figures.
"""

import argparse

from kerrcrit.config import parse_config
from kerrcrit.figures import emit_figure_data
from kerrcrit.runner import Runner


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/fig1")
    ap.add_argument("--n", type=float, nargs="+", default=[1, 2, 5, 10, 25])
    ap.add_argument("--points", type=int, default=121)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = parse_config({
        "model": {"delta": 3.0, "u_tilde": 1.0},
        "sweep": {"N": args.n, "F": {"start": 0.8, "stop": 2.4, "points": args.points}},
        "tasks": ["steady"],
        "output": args.out,
    })
    if Runner(cfg, threads=args.threads).run():
        raise SystemExit(1)
    for name in emit_figure_data(args.out, "fig1"):
        print(name)


if __name__ == "__main__":
    main()
