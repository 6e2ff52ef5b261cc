"""Wigner functions at delta = 3 below and inside the bistable window for N = 1, 2, 3, 10."""

import argparse
import json
from pathlib import Path

from kerrcrit.config import parse_config
from kerrcrit.runner import Runner


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/wigner")
    ap.add_argument("--n", type=float, nargs="+", default=[1, 2, 3, 10])
    ap.add_argument("--f", type=float, nargs="+", default=[1.4, 1.65])
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = parse_config({"model": {"delta": 3.0, "u_tilde": 1.0},
                        "wigner": {"N": args.n, "F": args.f}, "tasks": ["wigner"], "output": args.out})
    if Runner(cfg, threads=args.threads).run():
        raise SystemExit(1)
    for entry in json.loads((Path(args.out) / "peaks.json").read_text())["fields"]:
        weights = " ".join(f"{p['weight']:.3f}" for p in entry["peaks"])
        print(f"N={entry['N']:>4g} F={entry['F_tilde']:.3f}  peaks={len(entry['peaks'])}  weights {weights}")


if __name__ == "__main__":
    main()
