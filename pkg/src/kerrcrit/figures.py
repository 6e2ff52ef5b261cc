"""Plot-ready column files projected from task outputs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MissingInput
from .io import metadata, read_csv, read_meta, write_columns
from .model import ModelParams
from .semiclassical import steady_roots

FIGURES = ("fig1", "fig2gap", "fig3")


def _label(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


def _table(path: Path) -> dict:
    if not path.exists():
        raise MissingInput(f"{path} not found")
    header, rows = read_csv(path)
    cols = {}
    for h in header:
        vals = [r[h] for r in rows]
        try:
            cols[h] = np.array([float(v) for v in vals])
        except ValueError:
            cols[h] = np.array(vals)
    return cols


def _by_n(cols: dict):
    for n in np.unique(cols["N"]):
        sel = cols["N"] == n
        order = np.argsort(cols["F_tilde"][sel])
        yield n, {k: v[sel][order] for k, v in cols.items()}


def _model_from(path: Path) -> ModelParams:
    m = read_meta(path).get("config", {}).get("model")
    if not m:
        raise MissingInput(f"{path} carries no model block in its metadata")
    return ModelParams(m["delta"], m["u_tilde"], 0.0, m.get("gamma", 1.0))


def fig1(results: Path, out: Path) -> list[str]:
    """n/N and g2 against F_tilde, one file per N."""
    src = results / "steady.csv"
    if not src.exists():
        src = results / "sweep.csv"
    if not src.exists():
        raise MissingInput(f"fig1 needs steady.csv or sweep.csv in {results}")
    cols = _table(src)
    meta = metadata(read_meta(src).get("config"), figure="fig1", source=src.name)
    written = []
    for n, c in _by_n(cols):
        name = f"n_over_N_N{_label(n)}.dat"
        write_columns(out / name, {"F_tilde": c["F_tilde"], "n_over_N": c["n_over_N"]}, meta,
                      f"N = {_label(n)}; F_tilde in units of gamma")
        gname = f"g2_N{_label(n)}.dat"
        write_columns(out / gname, {"F_tilde": c["F_tilde"], "g2": c["g2"]}, meta,
                      f"N = {_label(n)}; F_tilde in units of gamma; g2 dimensionless")
        written += [name, gname]
    return written


def fig2gap(results: Path, out: Path) -> list[str]:
    """Re and Im of the gap per N, plus the linear-response eigenvalue on each semiclassical branch."""
    src = results / "sweep.csv"
    if not src.exists():
        src = results / "gap.csv"
    if not src.exists():
        raise MissingInput(f"fig2gap needs sweep.csv or gap.csv in {results}")
    cols = _table(src)
    meta = metadata(read_meta(src).get("config"), figure="fig2gap", source=src.name)
    written = []
    for n, c in _by_n(cols):
        name = f"gap_N{_label(n)}.dat"
        write_columns(out / name, {"F_tilde": c["F_tilde"], "Re_lambda": c["Re_lambda"],
                                   "Im_lambda": c["Im_lambda"]}, meta,
                      f"N = {_label(n)}; all quantities in units of gamma")
        written.append(name)
    base = _model_from(src)
    f_grid = np.unique(cols["F_tilde"])
    rows = {"F_tilde": [], "branch": [], "n_sc": [], "stable": [], "Re_lambda_lr": [], "Im_lambda_lr": []}
    for f in f_grid:
        for i, r in enumerate(steady_roots(base.with_(f_tilde=float(f)))):
            lam = r.lambda_lr[0]
            for k, v in zip(rows, (f, i, r.n_sc, float(r.stable), lam.real, lam.imag)):
                rows[k].append(v)
    write_columns(out / "lambda_lr.dat", rows, meta,
                  "linear-response eigenvalue (Im >= 0 member) per semiclassical branch, units of gamma")
    return written + ["lambda_lr.dat"]


def fig3(results: Path, out: Path) -> list[str]:
    """Transition point, tunneling time and power-law parameters against N."""
    src = results / "fits.json"
    if not src.exists():
        raise MissingInput(f"fig3 needs fits.json in {results}")
    fit = json.loads(src.read_text())
    meta = metadata(fit.get("meta", {}).get("config"), figure="fig3", source=src.name)
    ns = np.array(fit["n_values"], float)
    written = []
    write_columns(out / "tau_vs_N.dat", {"N": ns, "tau": fit["tau"]}, meta, "tau = -1/Re lambda at F_c, units 1/gamma")
    written.append("tau_vs_N.dat")
    kappa, tau0 = fit.get("kappa"), fit.get("tau0")
    if kappa is not None and np.isfinite(kappa):
        nn = np.linspace(ns.min(), ns.max(), 101)
        write_columns(out / "tau_fit.dat", {"N": nn, "tau_fit": tau0 * np.exp(kappa * nn)}, meta,
                      f"tau0 exp(kappa N) with kappa = {kappa:.6g}, tau0 = {tau0:.6g} (1/gamma)")
        written.append("tau_fit.dat")
    write_columns(out / "fc_vs_N.dat", {"N": ns, "inv_N": 1 / ns, "F_c": fit["f_c"]}, meta,
                  "transition drive F_c in units of gamma")
    written.append("fc_vs_N.dat")
    if fit.get("power_n"):
        pn = np.array(fit["power_n"], float)
        write_columns(out / "b_vs_N.dat", {"N": pn, "b": fit["b"], "b_err": fit["b_err"], "bN": np.array(fit["b"]) * pn},
                      meta, "power-law slope b (dimensionless) and bN")
        write_columns(out / "f_vs_N.dat", {"N": pn, "f": fit["f"], "f_err": fit["f_err"]}, meta,
                      "power-law offset f in units of gamma")
        written += ["b_vs_N.dat", "f_vs_N.dat"]
    prof = results / "profile.csv"
    if prof.exists():
        cols = _table(prof)
        fc = dict(zip(fit["n_values"], fit["f_c"]))
        for n, c in _by_n(cols):
            x = c["F_tilde"] - fc[float(n)]
            name = f"relax_N{_label(n)}.dat"
            write_columns(out / name, {"F_minus_Fc": x, "tau": -1 / c["Re_lambda"]}, meta,
                          f"N = {_label(n)}; F offset in gamma, tau in 1/gamma")
            written.append(name)
    return written


def emit_figure_data(results, figure: str, out=None) -> list[str]:
    """Write the column files of one figure; returns the file names."""
    results = Path(results)
    out = Path(out) if out is not None else results / "figures"
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    return {"fig1": fig1, "fig2gap": fig2gap, "fig3": fig3}[figure](results, out)
