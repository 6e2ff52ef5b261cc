"""Fock-cutoff selection by steady-state convergence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CutoffOverflow
from .liouvillian import build_liouvillian
from .model import ModelParams, hamiltonian
from .semiclassical import steady_roots
from .steady import DensityMatrix, observables, steady_state_numeric

MIN_CUTOFF = 2
DEFAULT_HARD_MAX = 400


@dataclass(frozen=True)
class CutoffPolicy:
    tail_tol: float = 1e-10
    obs_tol: float = 1e-8
    hard_max: int = DEFAULT_HARD_MAX


def seed_cutoff(params: ModelParams) -> int:
    roots = steady_roots(params)
    n_sc = max(r.n_sc for r in roots) if roots else 0.0
    return max(MIN_CUTOFF, math.ceil(4 * params.n_scale * max(1.0, n_sc)))


def _steady(params: ModelParams, cutoff: int) -> DensityMatrix:
    return steady_state_numeric(build_liouvillian(hamiltonian(params, cutoff), params.gamma))


def _tail(rho: DensityMatrix) -> float:
    return float(rho.populations()[-2:].sum())


def _smallest_by_tail(p: np.ndarray, tail_tol: float) -> int:
    # cutoff c keeps levels 0..c; the top two are c-1 and c
    pair = p[:-1] + p[1:]
    ok = np.nonzero(pair < tail_tol)[0]
    return max(MIN_CUTOFF, int(ok[0]) + 1) if ok.size else p.size - 1


def _close(a, b, tol) -> bool:
    if math.isnan(a) and math.isnan(b):
        return True
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


def _converged(rho, rho_big, params, obs_tol) -> bool:
    o1 = observables(rho, n_scale=params.n_scale)
    o2 = observables(rho_big, n_scale=params.n_scale)
    if o1.n < 1e-12 and o2.n < 1e-12:
        return True
    return _close(o1.n, o2.n, obs_tol) and _close(o1.g2, o2.g2, obs_tol)


def auto_cutoff(params: ModelParams, tail_tol: float = 1e-10, obs_tol: float = 1e-8,
                hard_max: int = DEFAULT_HARD_MAX) -> int:
    """Smallest cutoff whose steady state has a negligible top-level tail and stable n, g2.

    Starts from a generous seed, shrinks to the tail estimate read off the
    seed state, then grows by 25% until both tests pass.
    """
    if not (0 < tail_tol < 1 and 0 < obs_tol < 1):
        raise ValueError("tolerances must lie in (0, 1)")
    c = min(seed_cutoff(params), hard_max)
    rho = _steady(params, c)
    while _tail(rho) >= tail_tol:
        if c >= hard_max:
            raise CutoffOverflow(f"cutoff {c} insufficient and hard maximum {hard_max} reached")
        c = min(hard_max, math.ceil(1.25 * c))
        rho = _steady(params, c)
    c = _smallest_by_tail(rho.populations(), tail_tol)
    while True:
        if c > hard_max:
            raise CutoffOverflow(f"required cutoff exceeds hard maximum {hard_max}")
        rho = _steady(params, c)
        big = math.ceil(1.25 * c)
        if _tail(rho) < tail_tol and _converged(rho, _steady(params, big), params, obs_tol):
            return c
        c = max(c + 1, big)
