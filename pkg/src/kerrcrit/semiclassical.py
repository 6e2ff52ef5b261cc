"""Mean-field equation for the rescaled field and its linearization.

    i d(alpha)/dt = (-delta - i gamma/2 + u |alpha|^2) alpha + f
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepTooLarge
from .model import ModelParams


@dataclass(frozen=True)
class SemiclassicalRoot:
    alpha: complex
    n_sc: float
    stable: bool
    lambda_lr: tuple[complex, complex]


@dataclass(frozen=True)
class BistabilityEdges:
    f_minus: float
    f_plus: float
    exists: bool


def meanfield_rhs(alpha: complex, params: ModelParams) -> complex:
    """d(alpha)/dt for the rescaled field."""
    det = -params.delta - 0.5j * params.gamma + params.u_tilde * abs(alpha) ** 2
    return -1j * (det * alpha + params.f_tilde)


def _cubic(n, delta, u, gamma, f):
    return n * ((delta - u * n) ** 2 + 0.25 * gamma**2) - f**2


def _dcubic(n, delta, u, gamma):
    return 3 * u**2 * n**2 - 4 * delta * u * n + delta**2 + 0.25 * gamma**2


def linear_response(root: SemiclassicalRoot | float, params: ModelParams) -> tuple[complex, complex]:
    """Eigenvalues of the mean-field flow linearized about a steady state.

    Returned as (upper, lower): for a conjugate pair the member with Im >= 0
    comes first, for a real pair the larger one.
    """
    n = root.n_sc if isinstance(root, SemiclassicalRoot) else float(root)
    u, delta, gamma = params.u_tilde, params.delta, params.gamma
    chi = 2 * u * n - delta
    rad = chi**2 - (u * n) ** 2
    if rad >= 0:
        w = math.sqrt(rad)
        return complex(-0.5 * gamma, w), complex(-0.5 * gamma, -w)
    w = math.sqrt(-rad)
    return complex(-0.5 * gamma + w, 0.0), complex(-0.5 * gamma - w, 0.0)


def steady_roots(params: ModelParams, imag_tol: float = 1e-7) -> list[SemiclassicalRoot]:
    """All steady states of the mean-field equation, sorted by density."""
    delta, u, gamma, f = params.delta, params.u_tilde, params.gamma, params.f_tilde
    if u == 0:
        ns = [f**2 / (delta**2 + 0.25 * gamma**2)]
    else:
        coeffs = [u**2, -2 * delta * u, delta**2 + 0.25 * gamma**2, -(f**2)]
        raw = np.roots(coeffs)
        scale = max(1.0, float(np.abs(raw).max()))
        ns = sorted(r.real for r in raw if abs(r.imag) <= imag_tol * scale)
        polished = []
        for n in ns:
            for _ in range(3):
                dp = _dcubic(n, delta, u, gamma)
                if dp == 0:
                    break
                step = _cubic(n, delta, u, gamma, f) / dp
                if not math.isfinite(step) or abs(step) > 1e-6 * scale:
                    break
                n -= step
            polished.append(max(n, 0.0))
        ns = polished
    out = []
    for n in ns:
        alpha = -f / (-delta - 0.5j * gamma + u * n)
        lr = linear_response(n, params)
        out.append(SemiclassicalRoot(complex(alpha), float(n), max(l.real for l in lr) < 0, lr))
    return out


def bistability_edges(delta: float, u_tilde: float, gamma: float = 1.0) -> BistabilityEdges:
    """Drive amplitudes bounding the three-root window, from the cubic's turning points."""
    if u_tilde <= 0:
        raise ValueError("u_tilde must be positive")
    disc = delta**2 - 0.75 * gamma**2
    if abs(disc) <= 1e-12 * gamma**2:
        disc = 0.0  # threshold detuning: the two turning points merge
    if delta <= 0 or disc < 0:
        return BistabilityEdges(math.nan, math.nan, False)
    root = math.sqrt(disc)
    n_lo = (2 * delta - root) / (3 * u_tilde)
    n_hi = (2 * delta + root) / (3 * u_tilde)

    def drive(n):
        return math.sqrt(n * ((delta - u_tilde * n) ** 2 + 0.25 * gamma**2))

    # the high-density turning point bounds the window from below
    f_minus, f_plus = drive(n_hi), drive(n_lo)
    return BistabilityEdges(f_minus, f_plus, disc > 0)


def integrate_meanfield(params: ModelParams, alpha0: complex, t_final: float, dt: float,
                        stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """RK4 trajectory of the rescaled field; returns (times, alphas)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nsteps = int(np.ceil(t_final / dt - 1e-12))
    h = t_final / nsteps if nsteps else 0.0
    a = complex(alpha0)
    times, traj = [0.0], [a]
    for k in range(1, nsteps + 1):
        k1 = meanfield_rhs(a, params)
        k2 = meanfield_rhs(a + 0.5 * h * k1, params)
        k3 = meanfield_rhs(a + 0.5 * h * k2, params)
        k4 = meanfield_rhs(a + h * k3, params)
        a = a + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)) or abs(a) > 1e6:
            raise StepTooLarge(f"mean-field integration diverged at t={k * h:.4g}")
        if k % stride == 0 or k == nsteps:
            times.append(k * h)
            traj.append(a)
    return np.array(times), np.array(traj)
