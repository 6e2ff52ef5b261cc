"""Liouvillian gap: the nonzero eigenvalue with the largest real part."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .cutoff import auto_cutoff
from .errors import DimensionTooLarge, GapAmbiguous, NotConverged
from .liouvillian import Superoperator, build_liouvillian, diagonal_indices
from .model import ModelParams, hamiltonian
from .steady import steady_state_vector

log = logging.getLogger(__name__)

DENSE_DIM_THRESHOLD = 4096
# Default dense/Krylov switch for the gap. Dense eig at dim 1024 already
# costs ~3 s per point on one core against ~0.04 s for shift-invert.
GAP_DENSE_DEFAULT = 144
IM_SNAP = 1e-10


@dataclass(frozen=True)
class GapResult:
    lam: complex
    method: str
    residual: float
    cutoff_used: int

    @property
    def relaxation_time(self) -> float:
        return -1.0 / self.lam.real


def zero_tolerance(cutoff: int, gamma: float = 1.0) -> float:
    return 1e-9 * gamma * max(cutoff, 1)


def select_gap(eigs, eps0: float, tie_tol: float = 1e-12) -> complex:
    """Pick the gap among eigenvalues: max Re over |lam| > eps0, Im >= 0 representative.

    Ties on Re are broken by smaller |Im|.  Raises GapAmbiguous when a second,
    distinct eigenvalue (not the conjugate partner) lies within ``tie_tol``.
    """
    eigs = np.asarray(eigs, dtype=complex)
    cand = eigs[np.abs(eigs) > eps0]
    if cand.size == 0:
        raise NotConverged("no nonzero eigenvalue found")
    folded = np.where(cand.imag < 0, cand.conj(), cand)
    best = folded[np.lexsort((np.abs(folded.imag), -folded.real))[0]]
    near = cand[np.abs(cand - best) <= tie_tol]
    if near.size > 1:
        raise GapAmbiguous(complex(near[0]), complex(near[1]))
    return complex(best.real, abs(best.imag))


def full_spectrum(params: ModelParams | Superoperator, cutoff: int | None = None,
                  max_dim: int = DENSE_DIM_THRESHOLD) -> np.ndarray:
    L = params if isinstance(params, Superoperator) else build_liouvillian(hamiltonian(params, cutoff), params.gamma)
    if L.dim > max_dim:
        raise DimensionTooLarge(f"dimension {L.dim} exceeds dense threshold {max_dim}")
    return sla.eigvals(L.todense(), overwrite_a=True, check_finite=False)


def _dense_gap(L: Superoperator):
    w, v = sla.eig(L.todense(), check_finite=False)
    lam = select_gap(w, zero_tolerance(L.cutoff, L.gamma))
    idx = int(np.argmin(np.abs(w - lam)))
    res = np.linalg.norm(L.matrix @ v[:, idx] - w[idx] * v[:, idx]) / np.linalg.norm(v[:, idx])
    return lam, float(res)


def _krylov_gap(L: Superoperator, k: int = 10, tol: float = 1e-12, max_restarts: int = 3,
                ncv: int | None = None):
    """Shift-invert Arnoldi at the origin with the steady state deflated.

    The constrained factorization inverts L on traceless operators (left
    null vector handled by the trace row); projecting inputs with
    ``P = 1 - rho_ss tr(.)`` removes the right null vector, so the zero mode
    maps to eigenvalue 0 of the iteration operator and never competes.
    """
    x_ss, solver = steady_state_vector(L)
    diag = diagonal_indices(L.cutoff)
    x_ss = x_ss / x_ss[diag].sum()

    def op(b):
        b = np.asarray(b, dtype=complex).ravel()
        b = b - b[diag].sum() * x_ss
        rhs = b.copy()
        rhs[0] = 0.0
        return solver.solve(rhs)

    T = spla.LinearOperator((L.dim, L.dim), matvec=op, dtype=complex)
    eps0 = zero_tolerance(L.cutoff, L.gamma)
    kk = min(k, L.dim - 3)
    # fixed start vector keeps repeated runs bit-identical
    v0 = np.random.default_rng(0).standard_normal(L.dim) + 0j
    for attempt in range(max_restarts + 1):
        try:
            mu, vecs = spla.eigs(T, k=kk, which="LM", tol=tol, v0=v0,
                                 ncv=ncv or min(L.dim - 1, max(2 * kk + 1, 30)))
        except spla.ArpackNoConvergence as exc:
            if attempt == max_restarts:
                raise NotConverged(f"ARPACK stagnated: {exc}") from exc
            kk = min(2 * kk, L.dim - 3)
            continue
        keep = np.abs(mu) > 0
        lam_all = 1.0 / mu[keep]
        lam = select_gap(lam_all, eps0)
        radius = np.abs(lam_all).max()
        # the gap must sit well inside the disk of resolved eigenvalues
        if abs(lam) < 0.9 * radius or kk >= L.dim - 3:
            idx = np.nonzero(keep)[0]
            dist = np.minimum(np.abs(lam_all - lam), np.abs(lam_all - lam.conjugate()))
            j = idx[int(np.argmin(dist))]
            v = vecs[:, j]
            res = np.linalg.norm(L.matrix @ v - v / mu[j]) / np.linalg.norm(v)
            return lam, float(res)
        kk = min(2 * kk, L.dim - 3)
    raise NotConverged("gap not enclosed by the resolved eigenvalues")


def liouvillian_gap(params: ModelParams, cutoff: int | str = "auto", method: str = "auto",
                    dense_threshold: int = GAP_DENSE_DEFAULT, k: int = 10, tol: float = 1e-12,
                    max_restarts: int = 3, cutoff_kw: dict | None = None) -> GapResult:
    if cutoff == "auto":
        cutoff = auto_cutoff(params, **(cutoff_kw or {}))
    L = build_liouvillian(hamiltonian(params, int(cutoff)), params.gamma)
    if method == "auto":
        method = "dense" if L.dim <= dense_threshold else "krylov"
    if method == "dense":
        if L.dim > DENSE_DIM_THRESHOLD:
            raise DimensionTooLarge(f"dimension {L.dim} exceeds dense threshold {DENSE_DIM_THRESHOLD}")
        lam, res = _dense_gap(L)
    elif method == "krylov":
        lam, res = _krylov_gap(L, k=k, tol=tol, max_restarts=max_restarts)
    else:
        raise ValueError(f"unknown method {method!r}")
    if abs(lam.imag) <= IM_SNAP * params.gamma:
        lam = complex(lam.real, 0.0)  # real eigenvalue; drop round-off
    return GapResult(lam, method, res, int(cutoff))
