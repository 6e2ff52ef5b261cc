"""Finite-size experiments: gap sweeps, transition point, tunneling time and scaling fits."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .cutoff import CutoffPolicy, auto_cutoff
from .errors import DegenerateFit, KerrError, NoMinimumInBracket, WindowTooSmall
from .liouvillian import build_liouvillian
from .model import ModelParams, hamiltonian
from .spectral import GAP_DENSE_DEFAULT, liouvillian_gap
from .steady import observables, steady_state_numeric

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class SolverOptions:
    dense_dim_threshold: int = GAP_DENSE_DEFAULT
    krylov_k: int = 10
    tol: float = 1e-12
    max_restarts: int = 3


@dataclass
class SweepRecord:
    n_scale: float
    f_tilde: float
    lam: complex
    n_rescaled: float
    g2: float
    cutoff_used: int
    wall_time: float
    err: str = ""

    @property
    def relaxation_time(self) -> float:
        return -1.0 / self.lam.real


def evaluate_point(params: ModelParams, cutoff: int | str = "auto", policy: CutoffPolicy = CutoffPolicy(),
                   solver: SolverOptions = SolverOptions()) -> SweepRecord:
    """Gap and steady-state observables at one parameter point; failures become an error tag."""
    t0 = time.perf_counter()
    try:
        c = auto_cutoff(params, policy.tail_tol, policy.obs_tol, policy.hard_max) if cutoff == "auto" else int(cutoff)
        gap = liouvillian_gap(params, c, dense_threshold=solver.dense_dim_threshold, k=solver.krylov_k,
                              tol=solver.tol, max_restarts=solver.max_restarts)
        rho = steady_state_numeric(build_liouvillian(hamiltonian(params, c), params.gamma))
        obs = observables(rho, n_scale=params.n_scale)
        return SweepRecord(params.n_scale, params.f_tilde, gap.lam, obs.n_rescaled, obs.g2, c,
                           time.perf_counter() - t0)
    except KerrError as exc:
        return SweepRecord(params.n_scale, params.f_tilde, complex("nan+nanj"), math.nan, math.nan,
                           -1 if cutoff == "auto" else int(cutoff), time.perf_counter() - t0,
                           f"{type(exc).__name__}: {exc}")


def _evaluate_task(args):
    return evaluate_point(*args)


def cutoff_for_grid(base: ModelParams, n_scale: float, f_grid, policy: CutoffPolicy = CutoffPolicy()) -> int:
    """Auto cutoff at the strongest drive of the grid, reused across the grid for one N."""
    p = base.with_(n_scale=n_scale, f_tilde=float(np.max(f_grid)))
    return auto_cutoff(p, policy.tail_tol, policy.obs_tol, policy.hard_max)


def sweep_gap(base: ModelParams, n_list, f_grid, cutoff: str | int = "auto",
              policy: CutoffPolicy = CutoffPolicy(), solver: SolverOptions = SolverOptions(),
              threads: int = 1) -> list[SweepRecord]:
    """Gap and observables over an (N, F) grid, ordered by (N, F).

    ``cutoff`` is "auto" (per point), "per_n" (one auto cutoff per N taken at
    the largest drive) or a fixed integer.
    """
    n_list = sorted(float(n) for n in n_list)
    f_grid = sorted(float(f) for f in f_grid)
    if not n_list or not f_grid:
        raise ValueError("sweep grids must be nonempty")
    tasks = []
    for n in n_list:
        c = cutoff
        if cutoff == "per_n":
            try:
                c = cutoff_for_grid(base, n, f_grid, policy)
            except KerrError:
                c = "auto"
        for f in f_grid:
            tasks.append((base.with_(n_scale=n, f_tilde=f), c, policy, solver))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_evaluate_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    return [_evaluate_task(t) for t in tasks]


def continuity_flags(records, max_jump: float = 0.2, spacing: float = 0.01, n_max: float = 10) -> list[dict]:
    """Consecutive-F steps where the gap jumps by more than ``max_jump``.

    Only steps no wider than ``spacing`` and N <= ``n_max`` are judged; a flag
    hints at mode hopping between eigenvalues and is reported, never fatal.
    """
    flags = []
    by_n = {}
    for r in records:
        by_n.setdefault(r.n_scale, []).append(r)
    for n, recs in sorted(by_n.items()):
        if n > n_max:
            continue
        recs = sorted(recs, key=lambda r: r.f_tilde)
        for a, b in zip(recs, recs[1:]):
            if b.f_tilde - a.f_tilde > spacing + 1e-12 or a.err or b.err:
                continue
            jump = abs(b.lam - a.lam)
            if jump > max_jump:
                flags.append({"N": n, "F_from": a.f_tilde, "F_to": b.f_tilde, "jump": jump})
    return flags


# -- transition point --------------------------------------------------------

def golden_section_max(func, a: float, b: float, xtol: float = 1e-4):
    """Maximize a unimodal function on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > xtol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    return (c, fc) if fc > fd else (d, fd)


def find_extremum(profile, bracket, coarse: int = 21, xtol: float = 1e-4):
    """Coarse grid then golden-section refinement of max profile(F) inside ``bracket``."""
    lo, hi = bracket
    xs = np.linspace(lo, hi, coarse)
    ys = np.array([profile(x) for x in xs])
    i = int(np.nanargmax(ys))
    if i == 0 or i == coarse - 1:
        raise NoMinimumInBracket(f"extremum at bracket edge {xs[i]:.4g}; widen [{lo}, {hi}]")
    return golden_section_max(profile, xs[i - 1], xs[i + 1], xtol)


def find_fc(base: ModelParams, n_scale: float, bracket, cutoff: int | None = None,
            policy: CutoffPolicy = CutoffPolicy(), solver: SolverOptions = SolverOptions(),
            coarse: int = 21, xtol: float = 1e-4) -> tuple[float, float]:
    """Drive minimizing |Re lambda| and the tunneling time -1/Re lambda there."""
    if cutoff is None:
        cutoff = cutoff_for_grid(base, n_scale, bracket, policy)

    def re_gap(f):
        lam = liouvillian_gap(base.with_(n_scale=n_scale, f_tilde=f), cutoff,
                              dense_threshold=solver.dense_dim_threshold, k=solver.krylov_k,
                              tol=solver.tol, max_restarts=solver.max_restarts).lam
        return lam.real

    f_c, re = find_extremum(re_gap, bracket, coarse, xtol)
    return float(f_c), float(-1.0 / re)


# -- fits --------------------------------------------------------------------

@dataclass
class LinearFit:
    slope: float
    intercept: float
    slope_err: float
    intercept_err: float
    cov: float
    r2: float


def linear_fit(x, y, sigma=None) -> LinearFit:
    """(Weighted) least squares y = slope*x + intercept with standard errors."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2 or np.ptp(x) == 0:
        raise DegenerateFit("need at least two distinct abscissae")
    w = np.ones_like(x) if sigma is None else 1.0 / np.asarray(sigma, float) ** 2
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        w = np.ones_like(x)
    A = np.column_stack([x, np.ones_like(x)])
    Aw = A * w[:, None]
    normal = A.T @ Aw
    coef = np.linalg.solve(normal, Aw.T @ y)
    resid = y - A @ coef
    dof = x.size - 2
    if sigma is None:
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = np.linalg.inv(normal) * s2
    else:
        cov = np.linalg.inv(normal)
    ybar = np.average(y, weights=w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - float(np.sum(w * resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(coef[0]), float(coef[1]), float(math.sqrt(max(cov[0, 0], 0))),
                     float(math.sqrt(max(cov[1, 1], 0))), float(cov[0, 1]), r2)


@dataclass
class PowerLawFit:
    b: float
    f: float
    slope: float  # d ln tau / d ln(F - Fc) = -b N
    r2: float
    window: tuple[float, float]  # F - Fc range used
    n_points: int
    b_err: float
    f_err: float


def _power_window(x, tau, tau_c, plateau_tol, far_frac, straight_frac):
    order = np.argsort(x)
    x, tau = x[order], tau[order]
    keep = tau < (1 - plateau_tol) * tau_c
    idx = np.nonzero(keep)[0]
    drop = int(math.floor(far_frac * idx.size))
    if drop:
        keep[idx[-drop:]] = False
    x, tau = x[keep], tau[keep]
    if x.size < 3:
        raise WindowTooSmall(f"only {x.size} points after plateau/far-field exclusion")
    # straight segment of the log-log curve around its steepest point
    s = -np.gradient(np.log(tau), np.log(x))
    j = int(np.argmax(s))
    lo = hi = j
    while lo > 0 and s[lo - 1] >= straight_frac * s[j]:
        lo -= 1
    while hi < s.size - 1 and s[hi + 1] >= straight_frac * s[j]:
        hi += 1
    if hi - lo + 1 < 3:
        lo, hi = max(0, j - 1), min(s.size - 1, j + 1)
    if hi - lo + 1 < 3:
        raise WindowTooSmall("straight segment shorter than three points")
    return x[lo:hi + 1], tau[lo:hi + 1]


def fit_power_law(records, f_c: float, tau_c: float | None = None, gamma: float = 1.0,
                  plateau_tol: float = 0.1, far_frac: float = 0.1, straight_frac: float = 0.9) -> PowerLawFit:
    """Fit -1/Re lambda = [(F - Fc)/f]^(-b N) / gamma on one N's records.

    Window: points with F > Fc, excluding the plateau (within ``plateau_tol``
    of the tunneling time) and the largest ``far_frac`` of distances, then
    restricted to the contiguous stretch where the log-log slope is at least
    ``straight_frac`` of its maximum.
    """
    recs = [r for r in records if not r.err and r.f_tilde > f_c and r.lam.real < 0]
    if len(recs) < 6:
        raise WindowTooSmall(f"need >= 6 records above Fc, got {len(recs)}")
    n_scale = recs[0].n_scale
    x = np.array([r.f_tilde - f_c for r in recs])
    tau = np.array([-1.0 / r.lam.real for r in recs])
    if tau_c is None:
        tau_c = float(tau.max())
    xw, tw = _power_window(x, tau, tau_c, plateau_tol, far_frac, straight_frac)
    fit = linear_fit(np.log(xw), np.log(gamma * tw))
    slope = fit.slope
    b = -slope / n_scale
    f = math.exp(-fit.intercept / slope)
    # delta method for f = exp(-c/s)
    dfdc = -f / slope
    dfds = f * fit.intercept / slope**2
    var_f = dfdc**2 * fit.intercept_err**2 + dfds**2 * fit.slope_err**2 + 2 * dfdc * dfds * fit.cov
    return PowerLawFit(b, f, slope, fit.r2, (float(xw.min()), float(xw.max())), int(xw.size),
                       fit.slope_err / n_scale, math.sqrt(max(var_f, 0.0)))


def fit_exponential_tau(n_values, taus) -> tuple[float, float, float]:
    """ln tau = ln tau0 + kappa N; returns (kappa, tau0, R^2)."""
    n_values = np.asarray(n_values, float)
    taus = np.asarray(taus, float)
    if n_values.size < 4:
        raise DegenerateFit("need at least four points")
    if np.any(taus <= 0):
        raise DegenerateFit("tunneling times must be positive")
    fit = linear_fit(n_values, np.log(taus))
    return fit.slope, math.exp(fit.intercept), fit.r2


@dataclass
class Extrapolation:
    value: float
    stderr: float
    slope: float
    n_used: list


def extrapolate_1overN(n_values, values, errors=None, fraction: float = 0.5) -> Extrapolation:
    """Intercept of a (weighted) linear fit in 1/N over the largest-N ``fraction`` of the data."""
    n_values = np.asarray(n_values, float)
    values = np.asarray(values, float)
    if n_values.size < 3:
        raise DegenerateFit("need at least three points")
    order = np.argsort(n_values)
    keep = max(2, math.ceil(fraction * n_values.size))
    sel = order[-keep:]
    sig = None if errors is None else np.asarray(errors, float)[sel]
    if sig is not None and not np.all(sig > 0):
        sig = None
    fit = linear_fit(1.0 / n_values[sel], values[sel], sig)
    return Extrapolation(fit.intercept, fit.intercept_err, fit.slope, sorted(n_values[sel].tolist()))


# -- full pipeline -----------------------------------------------------------

@dataclass
class CriticalFit:
    n_values: list
    f_c: list
    tau: list
    b: list
    f: list
    power_n: list = field(default_factory=list)
    b_err: list = field(default_factory=list)
    f_err: list = field(default_factory=list)
    windows: list = field(default_factory=list)
    power_r2: list = field(default_factory=list)
    window_robust: list = field(default_factory=list)
    f_c_inf: float = math.nan
    f_c_inf_err: float = math.nan
    b_inf: float = math.nan
    b_inf_err: float = math.nan
    f_inf: float = math.nan
    f_inf_err: float = math.nan
    kappa: float = math.nan
    tau0: float = math.nan
    tau_r2: float = math.nan
    slope_r2: float = math.nan
    cutoffs: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CriticalFit":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def window_robustness(records, f_c, tau_c, base_b: float, rel: float = 0.15) -> tuple[float, bool]:
    """Largest relative change of b when the exclusion thresholds move to 5% and 20%."""
    changes = []
    for plateau, far, straight in ((0.05, 0.05, 0.95), (0.2, 0.2, 0.8)):
        try:
            b = fit_power_law(records, f_c, tau_c, plateau_tol=plateau, far_frac=far, straight_frac=straight).b
        except WindowTooSmall:
            return math.inf, False
        changes.append(abs(b - base_b) / abs(base_b))
    worst = max(changes)
    return worst, worst < rel


def measure_critical(base: ModelParams, n_values, bracket=(0.7, 1.2), offsets=None,
                     policy: CutoffPolicy = CutoffPolicy(), solver: SolverOptions = SolverOptions(),
                     power_n_min: float = 0, threads: int = 1, progress=None) -> tuple[CriticalFit, list]:
    """Per-N stage: Fc(N), tau(N) and the power-law fit above Fc.

    One auto cutoff per N, taken beyond the strongest drive visited, keeps the
    |Re lambda| profile smooth for the golden-section search.
    """
    if offsets is None:
        offsets = 0.005 * np.arange(1, 101)
    offsets = np.asarray(offsets, float)
    n_values = sorted(float(n) for n in n_values)
    out = CriticalFit([], [], [], [], [])
    all_records = []
    for n in n_values:
        top = max(bracket[1], bracket[0] + offsets.max() + 0.3)
        c = cutoff_for_grid(base, n, [top], policy)
        f_c, tau = find_fc(base, n, bracket, c, policy, solver)
        out.n_values.append(n)
        out.f_c.append(f_c)
        out.tau.append(tau)
        out.cutoffs.append(c)
        if n < power_n_min:
            continue
        recs = sweep_gap(base, [n], [f_c + o for o in offsets], cutoff=c, policy=policy,
                         solver=solver, threads=threads)
        all_records.extend(recs)
        pl = fit_power_law(recs, f_c, tau)
        worst, ok = window_robustness(recs, f_c, tau, pl.b)
        out.power_n.append(n)
        out.b.append(pl.b)
        out.f.append(pl.f)
        out.b_err.append(pl.b_err)
        out.f_err.append(pl.f_err)
        out.windows.append(list(pl.window))
        out.power_r2.append(pl.r2)
        out.window_robust.append({"n": n, "max_rel_change": worst, "ok": ok})
        if progress:
            progress(n, f_c, tau, pl)
    out.meta = {
        "bracket": list(bracket),
        "offsets": [float(offsets.min()), float(offsets.max()), int(offsets.size)],
        "window_rule": {"plateau_tol": 0.1, "far_frac": 0.1, "straight_frac": 0.9},
        "cutoff_policy": asdict(policy),
        "cutoff_mode": "per N, auto at strongest drive",
    }
    return out, all_records


def extrapolate_critical(cf: CriticalFit) -> CriticalFit:
    """N -> infinity stage: 1/N extrapolations and the exponential law for tau(N)."""
    ns = np.array(cf.n_values)
    ex = extrapolate_1overN(ns, cf.f_c)
    cf.f_c_inf, cf.f_c_inf_err = ex.value, ex.stderr
    if len(ns) >= 4:
        cf.kappa, cf.tau0, cf.tau_r2 = fit_exponential_tau(ns, cf.tau)
    pn = np.array(cf.power_n)
    if len(pn) >= 3:
        eb = extrapolate_1overN(pn, cf.b, cf.b_err)
        ef = extrapolate_1overN(pn, cf.f, cf.f_err)
        cf.b_inf, cf.b_inf_err = eb.value, eb.stderr
        cf.f_inf, cf.f_inf_err = ef.value, ef.stderr
        cf.slope_r2 = linear_fit(pn, np.array(cf.b) * pn).r2
    cf.meta["extrapolation"] = "linear in 1/N over the largest-N half, inverse-variance weighted"
    return cf


def critical_analysis(base: ModelParams, n_values, **kw) -> tuple[CriticalFit, list]:
    cf, records = measure_critical(base, n_values, **kw)
    return extrapolate_critical(cf), records
