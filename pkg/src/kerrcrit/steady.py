"""Steady states: numeric null space of the Liouvillian and closed-form moments."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SeriesDivergence, SingularSystem
from .liouvillian import Superoperator, diagonal_indices, unvec, vec
from .model import ModelParams

G2_UNDEFINED = float("nan")
_N_FLOOR = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    cutoff: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(np.asarray(op) @ self.entries))

    def check(self, herm_tol: float = 1e-10, trace_tol: float = 1e-10, psd_tol: float = 1e-8) -> None:
        r = self.entries
        herm = np.abs(r - r.conj().T).max()
        if herm > herm_tol:
            raise ValueError(f"not Hermitian: {herm:.3e}")
        tr = np.trace(r)
        if abs(tr - 1) > trace_tol:
            raise ValueError(f"trace {tr} != 1")
        lmin = np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min()
        if lmin < -psd_tol:
            raise ValueError(f"negative eigenvalue {lmin:.3e}")


@dataclass(frozen=True)
class Observables:
    n: float
    n_rescaled: float
    g2: float
    source: str  # "numeric" | "analytic"


# -- numeric -----------------------------------------------------------------

class _ConstrainedSolver:
    """LU of L with the rho[0,0] row swapped for the trace functional.

    Solving ``M x = (t, b_1, ..., b_{D-1})`` returns the unique x with
    ``trace(x) = t`` and ``(L x)_j = b_j`` for j > 0; for traceless b this is
    the inverse of L restricted to traceless operators.
    """

    def __init__(self, L: Superoperator):
        self.L = L
        M = L.matrix.tolil(copy=True)
        ones = np.zeros(L.dim, dtype=complex)
        ones[diagonal_indices(L.cutoff)] = 1.0
        M[0, :] = ones
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                self.lu = spla.splu(sp.csc_matrix(M))
            except (RuntimeError, spla.MatrixRankWarning) as exc:
                raise SingularSystem(f"constrained Liouvillian is singular: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self.lu.solve(np.asarray(rhs, dtype=complex))
        if not np.isfinite(x).all():
            raise SingularSystem("non-finite solution of the constrained system")
        return x


def steady_state_vector(L: Superoperator, solver: _ConstrainedSolver | None = None,
                        refine: int = 3) -> tuple[np.ndarray, _ConstrainedSolver]:
    solver = solver or _ConstrainedSolver(L)
    rhs = np.zeros(L.dim, dtype=complex)
    rhs[0] = 1.0
    x = solver.solve(rhs)
    # iterative refinement (inverse iteration on the constrained system)
    diag = diagonal_indices(L.cutoff)
    for _ in range(refine):
        r = -(L.matrix @ x)
        r[0] = 1.0 - x[diag].sum()
        x = x + solver.solve(r)
    return x, solver


def steady_state_numeric(L: Superoperator, tol: float = 1e-10) -> DensityMatrix:
    x, _ = steady_state_vector(L)
    rho = unvec(x, L.cutoff + 1)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    res = np.linalg.norm(L.matrix @ vec(rho))
    if res > tol * max(L.norm(), 1.0):
        raise SingularSystem(f"steady-state residual {res:.3e} above tolerance")
    return DensityMatrix(L.cutoff, rho)


# -- closed form -------------------------------------------------------------

def _log_0f2(x: complex, y: complex, z: float, max_terms: int = 10_000, rtol: float = 1e-14):
    """Return (mantissa, log_scale) with sum_k z^k / (k! (x)_k (y)_k) = mantissa * exp(log_scale)."""
    if z == 0:
        return complex(1.0), 0.0
    logz = math.log(z)
    chunk = 256
    k0 = 0
    logterm0 = 0j  # log of term k0
    mant = 0j
    scale = None
    for _ in range(max_terms // chunk + 1):
        k = np.arange(k0, k0 + chunk)
        steps = logz - np.log(k + 1.0) - np.log(x + k) - np.log(y + k)
        logs = np.concatenate(([logterm0], logterm0 + np.cumsum(steps)[:-1]))
        if scale is None:
            scale = float(logs.real.max())
        local_max = float(logs.real.max())
        if local_max > scale + 600:
            mant *= math.exp(scale - local_max)
            scale = local_max
        mant += np.exp(logs - scale).sum()
        logterm0 = logs[-1] + steps[-1]
        k0 += chunk
        # terms decrease monotonically once |step| < 1; stop when the next term is negligible
        if steps[-1].real < 0 and logterm0.real - scale < math.log(rtol * abs(mant) + 1e-300):
            return mant, scale
        if k0 >= max_terms:
            break
    raise SeriesDivergence(f"0F2 series did not converge in {max_terms} terms (z={z:.3g})")


def _rising(c: complex, n: int) -> complex:
    out = 1.0 + 0j
    for j in range(n):
        out *= c + j
    return out


def analytic_moment(m: int, n: int, params: ModelParams) -> complex:
    """Steady-state <a^+^m a^n> from the exact complex-P solution of the driven Kerr cavity.

    With c = 2(-delta - i gamma/2)/U, d = conj(c), x = 2F/U and z = 2 x^2:

        <a^+^m a^n> = (-x)^(m+n) / ((c)_n (d)_m) * 0F2(c+n, d+m; z) / 0F2(c, d; z)
    """
    if m < 0 or n < 0:
        raise ValueError("moment orders must be non-negative")
    if m == 0 and n == 0:
        return 1.0 + 0j
    U, F, delta, gamma = params.u, params.f, params.delta, params.gamma
    if F == 0:
        return 0j
    if U == 0:
        alpha = F / (delta + 0.5j * gamma)
        return complex(np.conj(alpha) ** m * alpha ** n)
    c = 2.0 * (-delta - 0.5j * gamma) / U
    d = np.conj(c)
    x = 2.0 * F / U
    z = 2.0 * x * x
    num, s_num = _log_0f2(c + n, d + m, z)
    den, s_den = _log_0f2(c, d, z)
    return complex((-x) ** (m + n) / (_rising(c, n) * _rising(d, m)) * (num / den) * math.exp(s_num - s_den))


def observables(source, mode: str | None = None, n_scale: float | None = None) -> Observables:
    """Mean photon number, n/N and g2 from a DensityMatrix (numeric) or ModelParams (analytic)."""
    if isinstance(source, ModelParams):
        if mode not in (None, "analytic"):
            raise ValueError("ModelParams input requires mode='analytic'")
        n = analytic_moment(1, 1, source).real
        n2 = analytic_moment(2, 2, source).real
        scale = source.n_scale
        tag = "analytic"
    else:
        if mode not in (None, "numeric"):
            raise ValueError("DensityMatrix input requires mode='numeric'")
        p = source.populations()
        k = np.arange(p.size, dtype=float)
        n = float(k @ p)
        n2 = float((k * (k - 1)) @ p)
        scale = 1.0 if n_scale is None else n_scale
        tag = "numeric"
    g2 = n2 / n**2 if n >= _N_FLOOR else G2_UNDEFINED
    return Observables(float(n), float(n) / scale, float(g2), tag)
