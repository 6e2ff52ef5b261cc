"""kerrcrit command line: `run CONFIG` plus one subcommand per task.

Exit status: 0 success, 1 a task failed (partial outputs and errors.json kept),
2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import THREADS_ENV, default_threads, load_config, parse_config
from .errors import ConfigInvalid, KerrError
from .figures import FIGURES, emit_figure_data
from .runner import Runner

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser, out_default: str | None = "kerrcrit_out") -> None:
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default: ${THREADS_ENV} or 1)")
    p.add_argument("--check", action="store_true",
                   help="recompute a seeded 10%% subset of existing outputs and compare to 1e-8")


def _model_args(p):
    p.add_argument("--delta", type=float, required=True, help="detuning, units of gamma")
    p.add_argument("--u-tilde", type=float, required=True, help="rescaled nonlinearity, units of gamma")


def _grid_args(p):
    p.add_argument("--n", type=float, nargs="+", required=True, help="values of N")
    p.add_argument("--f", type=float, default=None, help="single drive F_tilde (units of gamma)")
    p.add_argument("--f-start", type=float, default=None)
    p.add_argument("--f-stop", type=float, default=None)
    p.add_argument("--f-points", type=int, default=None)
    _cutoff_args(p)


def _cutoff_args(p):
    p.add_argument("--cutoff", default="auto", help="auto, per_n or a fixed integer")
    p.add_argument("--seed", type=int, default=0, help="seed for --check sampling")


def _cutoff_block(args) -> dict:
    if args.cutoff in ("auto", "per_n"):
        return {"mode": args.cutoff}
    try:
        return {"mode": "fixed", "value": int(args.cutoff)}
    except ValueError:
        raise ConfigInvalid(f"cutoff: expected auto, per_n or an integer, got {args.cutoff!r}")


def _f_block(args) -> dict:
    if args.f is not None:
        return {"start": args.f, "stop": args.f, "points": 1}
    if None in (args.f_start, args.f_stop, args.f_points):
        raise ConfigInvalid("sweep.F: give --f or all of --f-start, --f-stop, --f-points")
    return {"start": args.f_start, "stop": args.f_stop, "points": args.f_points}


def _task_config(args) -> dict:
    """Translate a task subcommand into the equivalent config document."""
    cmd = args.command
    delta = args.detuning if cmd == "mapcheck" else args.delta
    raw = {"model": {"delta": delta, "u_tilde": args.u_tilde}, "tasks": [], "output": args.out}
    if cmd in ("gap", "steady", "sweep"):
        raw["sweep"] = {"N": args.n, "F": _f_block(args)}
        raw["cutoff"] = _cutoff_block(args)
        raw["tasks"] = [cmd]
        raw["seed"] = args.seed
    elif cmd == "semiclassical":
        if args.f_start is not None or args.f is not None:
            raw["sweep"] = {"N": [1], "F": _f_block(args)}
        raw["tasks"] = ["semiclassical"]
    elif cmd == "wigner":
        raw["wigner"] = {"N": args.n, "F": args.f, "points": args.points, "rel_threshold": args.rel_threshold}
        if args.half_width is not None:
            raw["wigner"]["half_width"] = args.half_width
        raw["tasks"] = ["wigner"]
        raw["seed"] = args.seed
    elif cmd == "fit":
        raw["fit"] = {"N": args.n, "bracket": args.bracket, "offset_step": args.offset_step,
                      "offset_points": args.offset_points}
        raw["tasks"] = ["fit", "extrapolate"]
        raw["seed"] = args.seed
    elif cmd == "mapcheck":
        raw["mapcheck"] = {"hopping": args.hopping, "dim": args.dim, "n_sites": args.n_sites,
                           "detuning": args.detuning, "f_tilde": args.f_tilde}
        raw["tasks"] = ["mapcheck"]
    return raw


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kerrcrit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the tasks of a JSON config in order")
    p.add_argument("config")
    _common(p, out_default=None)

    for name, text in (("gap", "Liouvillian gap over an (N, F) grid"),
                       ("steady", "steady-state n, n/N and g2, numeric and analytic"),
                       ("sweep", "gap and observables over an (N, F) grid -> sweep.csv")):
        p = sub.add_parser(name, help=text)
        _model_args(p)
        _grid_args(p)
        _common(p)

    p = sub.add_parser("semiclassical", help="bistability edges and mean-field branches")
    _model_args(p)
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--f-start", type=float, default=None)
    p.add_argument("--f-stop", type=float, default=None)
    p.add_argument("--f-points", type=int, default=None)
    _common(p)

    p = sub.add_parser("wigner", help="steady-state Wigner function and peak analysis")
    _model_args(p)
    p.add_argument("--n", type=float, nargs="+", required=True)
    p.add_argument("--f", type=float, nargs="+", required=True)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--half-width", type=float, default=None, help="grid half-width in rescaled units")
    p.add_argument("--rel-threshold", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("fit", help="F_c(N), tau(N), power-law fits and N -> infinity extrapolation")
    _model_args(p)
    p.add_argument("--n", type=float, nargs="+", required=True)
    p.add_argument("--bracket", type=float, nargs=2, default=[0.7, 1.2])
    p.add_argument("--offset-step", type=float, default=0.005)
    p.add_argument("--offset-points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("mapcheck", help="Bose-Hubbard k=0 reduction to single-mode parameters")
    p.add_argument("--hopping", type=float, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n-sites", type=int, required=True)
    p.add_argument("--detuning", type=float, required=True, help="omega_p - omega_c, units of gamma")
    p.add_argument("--u-tilde", type=float, required=True)
    p.add_argument("--f-tilde", type=float, required=True)
    _common(p)

    p = sub.add_parser("emit-fig", help="plot-ready column files from existing outputs")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--results", default=None, help="directory holding task outputs (default: --out)")
    _common(p)
    return ap


def _summarize(runner: Runner) -> None:
    out = runner.out
    for o in runner.outcomes:
        status = o.status if not o.error else f"{o.status} ({o.error})"
        print(f"{o.name}: {status} in {o.wall_time:.2f} s", file=sys.stderr)
    if runner.check:
        return
    names = {o.name for o in runner.outcomes if o.status == "ok"}
    if "semiclassical" in names:
        e = json.loads((out / "edges.json").read_text())
        print(json.dumps({k: e[k] for k in ("f_minus", "f_plus", "exists")}))
    if "mapcheck" in names:
        print(json.dumps(json.loads((out / "mapcheck.json").read_text())["model"]))
    if "extrapolate" in names:
        f = json.loads((out / "fits.json").read_text())
        print(json.dumps({k: f[k] for k in ("f_c_inf", "b_inf", "f_inf", "kappa", "tau_r2")}))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is not None and threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "emit-fig":
            results = Path(args.results or args.out)
            files = emit_figure_data(results, args.figure, Path(args.out) / "figures")
            print("\n".join(files))
            return EXIT_OK
        if args.command == "run":
            cfg = load_config(args.config)
            out = args.out
        else:
            cfg = parse_config(_task_config(args))
            out = args.out
        runner = Runner(cfg, out, check=args.check, threads=threads if threads is not None else
                        (cfg.threads if args.command == "run" else default_threads()))
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KerrError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    code = runner.run()
    _summarize(runner)
    return code


if __name__ == "__main__":
    sys.exit(main())
