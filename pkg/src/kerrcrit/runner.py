"""Task orchestration for a validated RunConfig: compute, write artifacts, or re-check them."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bosehubbard import BoseHubbardParams, k0_reduce
from .config import RunConfig
from .criticality import (CriticalFit, SolverOptions, SweepRecord, continuity_flags, cutoff_for_grid, evaluate_point,
                          extrapolate_critical, measure_critical)
from .cutoff import CutoffPolicy, auto_cutoff
from .errors import KerrError, MissingInput, TaskFailed
from .io import SWEEP_HEADER, metadata, read_csv, write_csv, write_json
from .liouvillian import build_liouvillian
from .model import ModelParams, hamiltonian
from .semiclassical import bistability_edges, steady_roots
from .spectral import liouvillian_gap
from .steady import observables, steady_state_numeric
from .wigner import GridSpec, count_peaks, read_binary, wigner, write_binary
from .wigner import write_csv as write_wigner_csv

STEADY_HEADER = ["N", "F_tilde", "n", "n_over_N", "g2", "n_analytic", "g2_analytic", "cutoff", "err"]
GAP_HEADER = ["N", "F_tilde", "Re_lambda", "Im_lambda", "relaxation_time", "method", "residual", "cutoff", "err"]
CHECK_FRACTION = 0.1
CHECK_RTOL = 1e-8


@dataclass
class TaskOutcome:
    name: str
    status: str = "ok"
    wall_time: float = 0.0
    outputs: list = field(default_factory=list)
    error: str = ""


def _label(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


def _err_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def parallel_map(func, items, threads: int):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * threads))))
    return [func(it) for it in items]


# -- point workers (top level so they pickle) ---------------------------------

def _resolve_cutoff(params, cutoff, policy):
    if cutoff == "auto":
        return auto_cutoff(params, policy.tail_tol, policy.obs_tol, policy.hard_max)
    return int(cutoff)


def steady_point(args):
    params, cutoff, policy = args
    c = -1 if cutoff == "auto" else int(cutoff)
    try:
        c = _resolve_cutoff(params, cutoff, policy)
        rho = steady_state_numeric(build_liouvillian(hamiltonian(params, c), params.gamma))
        obs = observables(rho, n_scale=params.n_scale)
        err = ""
    except KerrError as exc:
        obs, err = None, _err_text(exc)
    try:
        ana = observables(params)
        n_a, g2_a = ana.n, ana.g2
    except KerrError:
        n_a = g2_a = math.nan
    if obs is None:
        return [params.n_scale, params.f_tilde, math.nan, math.nan, math.nan, n_a, g2_a, c, err]
    return [params.n_scale, params.f_tilde, obs.n, obs.n_rescaled, obs.g2, n_a, g2_a, c, err]


def gap_point(args):
    params, cutoff, policy, solver = args
    c = -1 if cutoff == "auto" else int(cutoff)
    try:
        c = _resolve_cutoff(params, cutoff, policy)
        g = liouvillian_gap(params, c, dense_threshold=solver.dense_dim_threshold, k=solver.krylov_k,
                            tol=solver.tol, max_restarts=solver.max_restarts)
        return [params.n_scale, params.f_tilde, g.lam.real, g.lam.imag, g.relaxation_time, g.method,
                g.residual, c, ""]
    except KerrError as exc:
        return [params.n_scale, params.f_tilde, math.nan, math.nan, math.nan, "", math.nan, c, _err_text(exc)]


def sweep_point(args):
    return sweep_row(evaluate_point(*args))


def _record(row) -> SweepRecord:
    return SweepRecord(row[0], row[1], complex(row[2], row[3]), row[4], row[5], row[6], 0.0, row[7])


def sweep_row(r: SweepRecord) -> list:
    return [r.n_scale, r.f_tilde, r.lam.real, r.lam.imag, r.n_rescaled, r.g2, r.cutoff_used, r.err]


# -- comparison helpers --------------------------------------------------------

def _same(a, b, rtol=CHECK_RTOL) -> bool:
    try:
        x, y = float(a), float(b)
    except (TypeError, ValueError):
        return str(a) == str(b)
    if math.isnan(x) or math.isnan(y):
        return math.isnan(x) and math.isnan(y)
    return abs(x - y) <= rtol * max(abs(x), abs(y), 1e-300)


def _compare_rows(stored: dict, fresh: list, header, skip=()) -> list:
    bad = []
    for key, val in zip(header, fresh):
        if key in skip:
            continue
        if not _same(stored[key], val):
            bad.append({"column": key, "stored": stored[key], "recomputed": val})
    return bad


def _compare_json(stored, fresh, path="") -> list:
    if isinstance(stored, dict) and isinstance(fresh, dict):
        out = []
        for k in sorted(set(stored) | set(fresh)):
            if k == "meta":
                continue
            out += _compare_json(stored.get(k), fresh.get(k), f"{path}.{k}" if path else k)
        return out
    if isinstance(stored, list) and isinstance(fresh, list):
        if len(stored) != len(fresh):
            return [{"key": path, "stored": len(stored), "recomputed": len(fresh)}]
        out = []
        for i, (a, b) in enumerate(zip(stored, fresh)):
            out += _compare_json(a, b, f"{path}[{i}]")
        return out
    if stored is None and fresh is None:
        return []
    if isinstance(stored, (int, float, str, bool)) and _same(stored, fresh):
        return []
    return [{"key": path, "stored": stored, "recomputed": fresh}]


# -- runner ---------------------------------------------------------------------

class Runner:
    """Executes tasks in declared order. Parallelism lives inside the point-grid tasks."""

    def __init__(self, config: RunConfig, out: str | Path | None = None, check: bool = False,
                 threads: int | None = None):
        self.cfg = config
        self.out = Path(out if out is not None else config.output)
        self.check = check
        # echo the config as written; CLI overrides of threads/out do not touch artifact bytes
        self.echo = config.to_dict()
        if threads is not None:
            self.cfg.threads = threads
        self.policy = CutoffPolicy(config.cutoff.tail_tol, config.cutoff.obs_tol, config.cutoff.hard_max)
        self.solver = SolverOptions(config.solver.dense_dim_threshold, config.solver.krylov_k,
                                    config.solver.tol, config.solver.max_restarts)
        self.base = ModelParams(config.model.delta, config.model.u_tilde, 0.0, config.model.gamma)
        self.rng = np.random.default_rng(config.seed)
        self.outcomes: list[TaskOutcome] = []
        self.checks: list[dict] = []

    # shared pieces

    def meta(self, task: str, **extra) -> dict:
        return metadata(self.echo, task=task, **extra)

    def path(self, name: str) -> Path:
        return self.out / name

    def grid_params(self):
        s = self.cfg.sweep
        return [(self.base.with_(n_scale=float(n), f_tilde=float(f)))
                for n in sorted(s.N) for f in sorted(s.F.values())]

    def cutoff_per_point(self) -> list:
        spec = self.cfg.cutoff.spec()
        if spec != "per_n":
            return [spec] * (len(self.cfg.sweep.N) * self.cfg.sweep.F.points)
        out = []
        for n in sorted(self.cfg.sweep.N):
            try:
                c = cutoff_for_grid(self.base, n, self.cfg.sweep.F.values(), self.policy)
            except KerrError:
                c = "auto"
            out += [c] * self.cfg.sweep.F.points
        return out

    def sample(self, n_rows: int) -> list[int]:
        k = max(1, math.ceil(CHECK_FRACTION * n_rows))
        return sorted(self.rng.choice(n_rows, size=min(k, n_rows), replace=False).tolist())

    def _require(self, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise MissingInput(f"{p} not found")
        return p

    def _point_errors(self, rows, header, name):
        errs = [r[header.index("err")] for r in rows if r[header.index("err")]]
        if errs:
            raise TaskFailed(f"{len(errs)} of {len(rows)} {name} points failed; first: {errs[0]}")

    # tasks

    def task_semiclassical(self, o: TaskOutcome):
        m = self.cfg.model
        e = bistability_edges(m.delta, m.u_tilde, m.gamma)
        payload = {"delta": m.delta, "u_tilde": m.u_tilde, "f_minus": e.f_minus, "f_plus": e.f_plus,
                   "exists": e.exists}
        rows = []
        if self.cfg.sweep is not None:
            for f in sorted(self.cfg.sweep.F.values()):
                for i, r in enumerate(steady_roots(self.base.with_(f_tilde=f))):
                    up = r.lambda_lr[0]
                    rows.append([f, i, r.n_sc, int(r.stable), up.real, up.imag])
        header = ["F_tilde", "branch", "n_sc", "stable", "Re_lambda_lr", "Im_lambda_lr"]
        if self.check:
            stored = json.loads(self._require("edges.json").read_text())
            self.checks.append({"task": o.name, "mismatches": _compare_json(stored, payload)})
            if rows:
                _, old = read_csv(self._require("semiclassical.csv"))
                bad = [b for s, r in zip(old, rows) for b in _compare_rows(s, r, header)]
                if len(old) != len(rows):
                    bad.append({"rows": [len(old), len(rows)]})
                self.checks[-1]["mismatches"] += bad
            return
        write_json(self.path("edges.json"), {**payload, "meta": self.meta(o.name)})
        o.outputs.append("edges.json")
        if rows:
            write_csv(self.path("semiclassical.csv"), header, rows, self.meta(o.name))
            o.outputs.append("semiclassical.csv")

    def _grid_task(self, o, fname, header, worker, make_args, check_skip=(), diagnostics=None):
        params = self.grid_params()
        cut = self.cutoff_per_point()
        if self.check:
            _, stored = read_csv(self._require(fname))
            if len(stored) != len(params):
                raise TaskFailed(f"{fname} has {len(stored)} rows, config implies {len(params)}")
            idx = self.sample(len(stored))
            fresh = parallel_map(worker, [make_args(params[i], int(stored[i]["cutoff"]) if int(stored[i]["cutoff"]) > 0
                                                    else "auto") for i in idx], self.cfg.threads)
            bad = []
            for i, row in zip(idx, fresh):
                bad += [{"row": i, **b} for b in _compare_rows(stored[i], row, header, check_skip)]
            self.checks.append({"task": o.name, "rows_checked": idx, "mismatches": bad})
            return
        rows = parallel_map(worker, [make_args(p, c) for p, c in zip(params, cut)], self.cfg.threads)
        cutoffs = sorted({int(r[header.index("cutoff")]) for r in rows})
        extra = diagnostics(rows) if diagnostics else {}
        write_csv(self.path(fname), header, rows, self.meta(o.name, cutoffs=cutoffs, **extra))
        o.outputs.append(fname)
        self._point_errors(rows, header, o.name)

    def task_steady(self, o):
        self._grid_task(o, "steady.csv", STEADY_HEADER, steady_point, lambda p, c: (p, c, self.policy))

    def task_gap(self, o):
        self._grid_task(o, "gap.csv", GAP_HEADER, gap_point, lambda p, c: (p, c, self.policy, self.solver))

    def task_sweep(self, o):
        self._grid_task(o, "sweep.csv", SWEEP_HEADER, sweep_point, lambda p, c: (p, c, self.policy, self.solver),
                        diagnostics=lambda rows: {"continuity_flags": continuity_flags([_record(r) for r in rows])})

    def task_fit(self, o):
        fb = self.cfg.fit
        if self.check:
            _, stored = read_csv(self._require("profile.csv"))
            idx = self.sample(len(stored))
            args = [(self.base.with_(n_scale=float(stored[i]["N"]), f_tilde=float(stored[i]["F_tilde"])),
                     int(stored[i]["cutoff"]), self.policy, self.solver) for i in idx]
            fresh = parallel_map(sweep_point, args, self.cfg.threads)
            bad = []
            for i, row in zip(idx, fresh):
                bad += [{"row": i, **b} for b in _compare_rows(stored[i], row, SWEEP_HEADER)]
            self.checks.append({"task": o.name, "rows_checked": idx, "mismatches": bad})
            return
        offsets = fb.offset_step * np.arange(1, fb.offset_points + 1)
        cf, records = measure_critical(self.base, fb.N, tuple(fb.bracket), offsets, self.policy, self.solver,
                                       power_n_min=fb.power_n_min, threads=self.cfg.threads)
        cf.meta.update(self.meta(o.name, cutoffs=cf.cutoffs))
        write_csv(self.path("profile.csv"), SWEEP_HEADER, [sweep_row(r) for r in records],
                  self.meta(o.name, cutoffs=cf.cutoffs, windows=cf.windows))
        write_json(self.path("fits.json"), cf.to_dict())
        o.outputs += ["profile.csv", "fits.json"]

    def task_extrapolate(self, o):
        stored = json.loads(self._require("fits.json").read_text())
        cf = CriticalFit.from_dict(stored)
        cf = extrapolate_critical(cf)
        if self.check:
            self.checks.append({"task": o.name, "mismatches": _compare_json(stored, cf.to_dict())})
            return
        cf.meta["extrapolate"] = self.meta(o.name)["version"]
        write_json(self.path("fits.json"), cf.to_dict())
        o.outputs.append("fits.json")

    def _wigner_field(self, n, f, cutoff=None):
        wb = self.cfg.wigner
        p = self.base.with_(n_scale=n, f_tilde=f)
        c = cutoff or auto_cutoff(p, self.policy.tail_tol, self.policy.obs_tol, self.policy.hard_max)
        rho = steady_state_numeric(build_liouvillian(hamiltonian(p, c), p.gamma))
        if wb.half_width is not None:
            grid = GridSpec.square(wb.half_width, wb.points)
        else:
            n_sc = max(r.n_sc for r in steady_roots(p))
            grid = GridSpec.default(n_sc, n, wb.points)
        return wigner(rho, grid, n), rho, c, grid

    def task_wigner(self, o):
        wb = self.cfg.wigner
        pairs = [(float(n), float(f)) for n in sorted(wb.N) for f in sorted(wb.F)]
        if self.check:
            stored = json.loads(self._require("peaks.json").read_text())["fields"]
            idx = self.sample(len(pairs))
            bad = []
            for i in idx:
                n, f = pairs[i]
                name = f"wigner_N{_label(n)}_F{_label(f)}"
                old = read_binary(self._require(name + ".bin"))
                new, _, _, _ = self._wigner_field(n, f, stored[i]["cutoff"])
                scale = np.abs(old.values).max()
                diff = float(np.abs(old.values - new.values).max())
                if not diff <= CHECK_RTOL * scale:
                    bad.append({"field": name, "max_abs_diff": diff})
            self.checks.append({"task": o.name, "fields_checked": idx, "mismatches": bad})
            return
        entries, failures = [], []
        for n, f in pairs:
            name = f"wigner_N{_label(n)}_F{_label(f)}"
            try:
                wf, rho, c, grid = self._wigner_field(n, f)
            except KerrError as exc:
                failures.append(f"{name}: {_err_text(exc)}")
                continue
            peaks = count_peaks(wf, wb.rel_threshold)
            meta = self.meta(o.name, N=n, F_tilde=f, cutoffs=[c], grid=asdict(grid))
            write_wigner_csv(wf, self.path(name + ".csv"), meta)
            write_binary(wf, self.path(name + ".bin"))
            o.outputs += [name + ".csv", name + ".bin"]
            entries.append({"N": n, "F_tilde": f, "cutoff": c, "grid": asdict(grid), "integral": wf.integral(),
                            "moment_n": wf.moment_n(), "w_max": float(wf.values.max()), "n": observables(rho).n,
                            "n_peaks": len(peaks),
                            "peaks": [asdict(p) for p in peaks]})
        write_json(self.path("peaks.json"), {"fields": entries, "meta": self.meta(o.name)})
        o.outputs.append("peaks.json")
        if failures:
            raise TaskFailed(f"{len(failures)} Wigner fields failed; first: {failures[0]}")

    def mapcheck_payload(self) -> dict:
        mc = self.cfg.mapcheck
        bh = BoseHubbardParams(mc.hopping, mc.dim, mc.n_sites, mc.detuning, self.cfg.model.u_tilde, mc.f_tilde,
                               self.cfg.model.gamma, mc.coordination)
        mp = k0_reduce(bh)
        return {"bose_hubbard": asdict(bh), "coordination": bh.z,
                "model": {**asdict(mp), "u": mp.u, "f": mp.f}}

    def task_mapcheck(self, o):
        payload = self.mapcheck_payload()
        if self.check:
            stored = json.loads(self._require("mapcheck.json").read_text())
            self.checks.append({"task": o.name, "mismatches": _compare_json(stored, payload)})
            return
        write_json(self.path("mapcheck.json"), {**payload, "meta": self.meta(o.name)})
        o.outputs.append("mapcheck.json")

    # driver

    def run(self) -> int:
        self.out.mkdir(parents=True, exist_ok=True)
        t_start = time.perf_counter()
        for name in self.cfg.tasks:
            o = TaskOutcome(name)
            t0 = time.perf_counter()
            try:
                getattr(self, f"task_{name}")(o)
                if self.check and self.checks and self.checks[-1]["task"] == name and self.checks[-1]["mismatches"]:
                    raise TaskFailed(f"{len(self.checks[-1]['mismatches'])} values disagree beyond {CHECK_RTOL}")
            except (KerrError, ValueError) as exc:
                o.status, o.error = "failed", _err_text(exc)
            o.wall_time = time.perf_counter() - t0
            self.outcomes.append(o)
        failed = [o for o in self.outcomes if o.status != "ok"]
        manifest = {"meta": self.meta("run"), "mode": "check" if self.check else "compute",
                    "tasks": [asdict(o) for o in self.outcomes], "wall_time": time.perf_counter() - t_start}
        write_json(self.path("check.json" if self.check else "manifest.json"),
                   {**manifest, "checks": self.checks} if self.check else manifest)
        if failed:
            write_json(self.path("errors.json"), {"meta": self.meta("run"),
                                                  "failed": [{"task": o.name, "error": o.error} for o in failed]})
            return 1
        if not self.check and self.path("errors.json").exists():
            self.path("errors.json").unlink()
        return 0
