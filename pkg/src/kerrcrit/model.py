"""Physical parameters, Fock-space operators and the rotating-frame Hamiltonian.

All rates and frequencies are in units of the photon loss rate gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class ModelParams:
    """Rescaled Kerr-resonator parameters.

    The bare nonlinearity and drive follow ``U = u_tilde / N`` and
    ``F = sqrt(N) * f_tilde``; only the rescaled quantities are stored.
    """

    delta: float
    u_tilde: float
    f_tilde: float
    gamma: float = 1.0
    n_scale: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.n_scale > 0:
            raise ValueError(f"n_scale must be positive, got {self.n_scale}")
        if not self.f_tilde >= 0:
            raise ValueError(f"f_tilde must be non-negative, got {self.f_tilde}")

    @property
    def u(self) -> float:
        return self.u_tilde / self.n_scale

    @property
    def f(self) -> float:
        return math.sqrt(self.n_scale) * self.f_tilde

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FockOperator:
    cutoff: int
    entries: np.ndarray

    def __post_init__(self):
        d = self.cutoff + 1
        if self.entries.shape != (d, d):
            raise DimensionMismatch(f"entries shape {self.entries.shape} inconsistent with cutoff {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def dag(self) -> "FockOperator":
        return FockOperator(self.cutoff, self.entries.conj().T)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.cutoff, self.entries @ other.entries)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        m = self.entries
        scale = np.abs(m).max() if m.size else 0.0
        return bool(np.abs(m - m.conj().T).max() <= rtol * max(scale, 1e-300))


def annihilation_op(cutoff: int) -> FockOperator:
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)
    return FockOperator(cutoff, a)


def number_op(cutoff: int) -> FockOperator:
    return FockOperator(cutoff, np.diag(np.arange(cutoff + 1, dtype=float)).astype(complex))


def hamiltonian(params: ModelParams, cutoff: int) -> FockOperator:
    """H = -delta a^+a + (U/2) a^+a^+aa + F (a^+ + a) in the frame rotating at the drive."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    n = np.arange(cutoff + 1, dtype=float)
    diag = -params.delta * n + 0.5 * params.u * n * (n - 1)
    off = params.f * np.sqrt(n[1:])
    h = np.diag(diag).astype(complex)
    h += np.diag(off, k=1) + np.diag(off, k=-1)
    return FockOperator(cutoff, h)
