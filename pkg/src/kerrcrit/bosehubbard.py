"""Homogeneously driven Bose-Hubbard lattice reduced to its k = 0 mode."""

from __future__ import annotations

from dataclasses import dataclass

from .model import ModelParams


@dataclass(frozen=True)
class BoseHubbardParams:
    """Driven-dissipative Bose-Hubbard model on a periodic hypercubic lattice.

    ``detuning`` is the bare drive-cavity detuning omega_p - omega_c.
    ``coordination`` overrides the hypercubic value 2*dim for other geometries.
    """

    hopping: float
    dim: int
    n_sites: int
    detuning: float
    u_tilde: float
    f_tilde: float
    gamma: float = 1.0
    coordination: int | None = None

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def z(self) -> int:
        return 2 * self.dim if self.coordination is None else self.coordination

    @property
    def omega0_shift(self) -> float:
        """omega_0 - omega_c: the k = 0 band edge of -J sum_<ij> a_i^+ a_j."""
        return -self.z * self.hopping


def k0_reduce(bh: BoseHubbardParams) -> ModelParams:
    """Single-mode Kerr parameters for the uniform mode.

    The uniform mode sees U = u_tilde/N_sites and F = sqrt(N_sites) f_tilde,
    so N_sites plays the role of the thermodynamic parameter; hopping only
    shifts the detuning.
    """
    return ModelParams(
        delta=bh.detuning - bh.omega0_shift,
        u_tilde=bh.u_tilde,
        f_tilde=bh.f_tilde,
        gamma=bh.gamma,
        n_scale=float(bh.n_sites),
    )
