"""Liouvillian gap against drive for growing N, overlaid with the mean-field linear response.

delta = 0.8 shows convergence to the linear-response spectrum; delta = 2 shows the
closing of the gap. Writes sweep.csv and fig2gap column files.
"""

import argparse

from kerrcrit.config import parse_config
from kerrcrit.figures import emit_figure_data
from kerrcrit.runner import Runner


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=0.8)
    ap.add_argument("--out", default=None)
    ap.add_argument("--n", type=float, nargs="+", default=[1, 5, 10, 25, 50])
    ap.add_argument("--f-stop", type=float, default=None)
    ap.add_argument("--points", type=int, default=51)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = args.out or f"runs/fig2_delta{args.delta:g}"
    f_stop = args.f_stop if args.f_stop is not None else (1.0 if args.delta < 1 else 1.5)
    cfg = parse_config({
        "model": {"delta": args.delta, "u_tilde": 1.0},
        "sweep": {"N": args.n, "F": {"start": 0.0, "stop": f_stop, "points": args.points}},
        "cutoff": {"mode": "per_n"},
        "tasks": ["semiclassical", "sweep"],
        "output": out,
    })
    if Runner(cfg, threads=args.threads).run():
        raise SystemExit(1)
    for name in emit_figure_data(out, "fig2gap"):
        print(name)


if __name__ == "__main__":
    main()
