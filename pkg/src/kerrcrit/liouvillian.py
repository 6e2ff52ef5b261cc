"""Liouvillian superoperator in column-stacking vectorization.

``vec(A rho B) = (B^T kron A) vec(rho)`` with ``vec`` stacking columns, i.e.
``rho.reshape(-1, order="F")``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, StepTooLarge
from .model import FockOperator, annihilation_op

COLUMN_STACKING = "column"
_CONVENTION_CODES = {COLUMN_STACKING: 0}


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(dim, dim, order="F")


def identity_vec(cutoff: int) -> np.ndarray:
    return vec(np.eye(cutoff + 1, dtype=complex))


def diagonal_indices(cutoff: int) -> np.ndarray:
    """Positions of the rho[k, k] entries in the vectorized state."""
    d = cutoff + 1
    return np.arange(d) * (d + 1)


@dataclass(frozen=True)
class Superoperator:
    cutoff: int
    matrix: sp.csr_matrix
    convention: str = COLUMN_STACKING
    gamma: float = 1.0
    # Kept for the matrix-free kernel; None when loaded from a dump.
    hamiltonian: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.convention != COLUMN_STACKING:
            raise ValueError(f"unsupported vectorization convention {self.convention!r}")
        if self.matrix.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"matrix shape {self.matrix.shape} != ({self.dim}, {self.dim})")

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** 2

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def norm(self) -> float:
        """Max absolute row sum."""
        return float(abs(self.matrix).sum(axis=1).max())

    def todense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_liouvillian(H: FockOperator, gamma: float = 1.0) -> Superoperator:
    h = np.asarray(H.entries)
    d = H.cutoff + 1
    if h.shape != (d, d):
        raise DimensionMismatch(f"Hamiltonian shape {h.shape} inconsistent with cutoff {H.cutoff}")
    a = sp.csr_matrix(annihilation_op(H.cutoff).entries)
    hs = sp.csr_matrix(h)
    eye = sp.identity(d, dtype=complex, format="csr")
    ada = (a.conj().T @ a).tocsr()
    L = -1j * (sp.kron(eye, hs) - sp.kron(hs.T, eye))
    L = L + 0.5 * gamma * (2 * sp.kron(a.conj(), a) - sp.kron(eye, ada) - sp.kron(ada.T, eye))
    L = sp.csr_matrix(L, dtype=complex)
    L.eliminate_zeros()
    L.sort_indices()
    return Superoperator(H.cutoff, L, COLUMN_STACKING, gamma, h.copy())


def apply_liouvillian(L: Superoperator, rho_vec: np.ndarray) -> np.ndarray:
    """Action of L on a vectorized state without touching the sparse matrix when possible."""
    rho_vec = np.asarray(rho_vec)
    if rho_vec.shape[0] != L.dim:
        raise DimensionMismatch(f"vector length {rho_vec.shape[0]} != {L.dim}")
    if L.hamiltonian is None:
        return L.matrix @ rho_vec
    d = L.cutoff + 1
    rho = unvec(rho_vec, d)
    h = L.hamiltonian
    s = np.sqrt(np.arange(1, d, dtype=float))
    # a rho a^+ and a^+a rho using the bidiagonal structure of a
    arho_ad = np.zeros_like(rho)
    arho_ad[:-1, :-1] = s[:, None] * rho[1:, 1:] * s[None, :]
    n = np.arange(d, dtype=float)
    out = -1j * (h @ rho - rho @ h)
    out += 0.5 * L.gamma * (2 * arho_ad - n[:, None] * rho - rho * n[None, :])
    return vec(out)


# -- binary dump -------------------------------------------------------------

_HEADER = struct.Struct("<4q")


def dump_superoperator(L: Superoperator, path) -> None:
    """Header (cutoff, dim, nnz, convention code) then indptr, indices, interleaved re/im."""
    m = L.matrix.tocsr()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(L.cutoff, L.dim, m.nnz, _CONVENTION_CODES[L.convention]))
        fh.write(np.asarray(m.indptr, dtype="<i8").tobytes())
        fh.write(np.asarray(m.indices, dtype="<i8").tobytes())
        vals = np.empty(2 * m.nnz, dtype="<f8")
        vals[0::2] = m.data.real
        vals[1::2] = m.data.imag
        fh.write(vals.tobytes())


def load_superoperator(path, gamma: float = 1.0) -> Superoperator:
    with open(path, "rb") as fh:
        cutoff, dim, nnz, code = _HEADER.unpack(fh.read(_HEADER.size))
        conv = {v: k for k, v in _CONVENTION_CODES.items()}.get(code)
        if conv is None:
            raise ValueError(f"unknown convention code {code}")
        indptr = np.frombuffer(fh.read(8 * (dim + 1)), dtype="<i8")
        indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8")
        vals = np.frombuffer(fh.read(16 * nnz), dtype="<f8")
    data = vals[0::2] + 1j * vals[1::2]
    m = sp.csr_matrix((data, indices, indptr), shape=(dim, dim))
    return Superoperator(int(cutoff), m, conv, gamma)


# -- time evolution ----------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray
    states: list  # list of (d, d) density matrices

    def expect(self, op: np.ndarray) -> np.ndarray:
        return np.array([np.trace(op @ r) for r in self.states])


def time_evolve(L: Superoperator, rho0, t_final: float, dt: float, stride: int = 1,
                trace_tol: float = 1e-8) -> Trajectory:
    """Fixed-step RK4 integration of d vec(rho)/dt = L vec(rho).

    Raises StepTooLarge when the trace drifts by more than ``trace_tol`` or
    the state blows up.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho0 = np.asarray(getattr(rho0, "entries", rho0), dtype=complex)
    d = L.cutoff + 1
    if rho0.shape != (d, d):
        raise DimensionMismatch(f"initial state shape {rho0.shape} != ({d}, {d})")
    M = L.matrix
    diag = diagonal_indices(L.cutoff)
    y = vec(rho0).copy()
    tr0 = y[diag].sum()
    nsteps = int(np.ceil(t_final / dt - 1e-12))
    h = t_final / nsteps if nsteps else 0.0
    times, states = [0.0], [rho0.copy()]
    for k in range(1, nsteps + 1):
        k1 = M @ y
        k2 = M @ (y + 0.5 * h * k1)
        k3 = M @ (y + 0.5 * h * k2)
        k4 = M @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if abs(y[diag].sum() - tr0) > trace_tol or not np.isfinite(y).all() or np.abs(y).max() > 10:
            raise StepTooLarge(f"integration unstable at t={k * h:.4g}; reduce dt below {h:.3g}")
        if k % stride == 0 or k == nsteps:
            times.append(k * h)
            states.append(unvec(y, d).copy())
    return Trajectory(np.array(times), states)


def decay_rate(times, signal, period: float | None = None) -> float:
    """Exponential decay rate of a non-negative signal from period-averaged power.

    ``signal`` may oscillate with period ``period`` in its square (a complex
    eigenvalue pair beats at pi/|Im lambda|); averaging signal**2 over whole
    periods at both ends of the record cancels the oscillation exactly.
    """
    t = np.asarray(times, float)
    s2 = np.asarray(signal, float) ** 2
    span = t[-1] - t[0]
    if period is None or not np.isfinite(period) or period <= 0 or period > span / 3:
        period = span / 4
    w = period * max(1, int(np.floor(span / (3 * period))))

    def avg(t0):
        m = (t >= t0 - 1e-12) & (t <= t0 + w + 1e-12)
        return np.trapezoid(s2[m], t[m]) / (t[m][-1] - t[m][0])

    # whole periods between the two windows make the ratio exact for a damped beat
    t_a = t[0]
    t_b = t_a + period * np.floor((span - w) / period + 1e-9)
    return float(-0.5 * np.log(avg(t_b) / avg(t_a)) / (t_b - t_a))
