"""Wigner function on a grid of the rescaled field alpha/sqrt(N), and peak analysis."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import GridTooSmall
from .io import atomic_write, csv_text


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    points: int = 201

    @classmethod
    def square(cls, half_width: float, points: int = 201) -> "GridSpec":
        return cls(-half_width, half_width, -half_width, half_width, points)

    @classmethod
    def default(cls, n_sc_max: float, n_scale: float = 1.0, points: int = 201) -> "GridSpec":
        # vacuum noise has unit width in unrescaled alpha, hence the 1/sqrt(N) margin
        return cls.square(1.5 * max(1.0, math.sqrt(n_sc_max)) + 2.5 / math.sqrt(n_scale), points)

    def axes(self):
        return (np.linspace(self.re_min, self.re_max, self.points),
                np.linspace(self.im_min, self.im_max, self.points))


@dataclass
class WignerField:
    re: np.ndarray  # rescaled axis, length nx
    im: np.ndarray  # rescaled axis, length ny
    values: np.ndarray  # shape (ny, nx): values[j, i] at re[i] + 1j*im[j]
    n_scale: float

    @property
    def cell_area(self) -> float:
        """Area element in the unrescaled alpha plane."""
        return float((self.re[1] - self.re[0]) * (self.im[1] - self.im[0]) * self.n_scale)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def moment_n(self) -> float:
        """<a^+a> from the symmetric-ordered moment of W."""
        rr, ii = np.meshgrid(self.re, self.im)
        abs2 = (rr**2 + ii**2) * self.n_scale
        return float(((abs2 - 0.5) * self.values).sum() * self.cell_area)


def _laguerre_sum(coef: np.ndarray, L: int, x: np.ndarray) -> np.ndarray:
    """sum_m coef[m] (-1)^m phi_m^L(x) with the normalized Laguerre functions

        phi_m^L(x) = sqrt(m!/(m+L)!) x^(L/2) exp(-x/2) L_m^L(x),

    which are bounded by 1.  The upward three-term recurrence runs on values
    scaled by a per-point exponent so that neither the seed exp(-x/2) nor the
    growth through the forbidden region leaves double range.
    """
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    log_seed = -0.5 * x - 0.5 * math.lgamma(L + 1)
    if L:
        log_seed = log_seed + 0.5 * L * logx
    zero = ~np.isfinite(log_seed)
    scale = np.where(zero, 0.0, log_seed)
    y_prev = np.zeros_like(x)
    y = np.where(zero, 0.0, 1.0)
    acc = coef[0] * y
    for m in range(len(coef) - 1):
        y_next = ((2 * m + 1 + L - x) * y - math.sqrt(m * (m + L)) * y_prev) / math.sqrt((m + 1) * (m + 1 + L))
        y_prev, y = y, y_next
        acc = acc + ((-1) ** (m + 1) * coef[m + 1]) * y
        big = np.abs(y) > 1e150
        if big.any():
            r = np.where(big, np.abs(y), 1.0)
            y, y_prev, acc = y / r, y_prev / r, acc / r
            scale = scale + np.log(r)
    return acc * np.exp(scale)


def wigner_values(rho: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^+] in the unrescaled alpha plane.

    Sums the Fock-basis kernels diagonal by diagonal: the |m><m+L| kernel is
    (2/pi) (-1)^m phi_m^L(4|alpha|^2) e^{i L arg(alpha)}.
    """
    rho = np.asarray(rho)
    M = rho.shape[0]
    A = np.asarray(alpha, dtype=complex)
    x = 4.0 * np.abs(A) ** 2
    phase = np.where(A == 0, 1.0, A / np.where(A == 0, 1.0, np.abs(A)))
    W = _laguerre_sum(np.diagonal(rho).real, 0, x).real
    ph = np.ones_like(A)
    for L in range(1, M):
        ph = ph * phase
        W = W + 2.0 * np.real(ph * _laguerre_sum(np.diagonal(rho, L), L, x))
    return (2.0 / math.pi) * W


def wigner(rho, grid: GridSpec, n_scale: float = 1.0, check_edges: bool = True) -> WignerField:
    entries = np.asarray(getattr(rho, "entries", rho))
    re, im = grid.axes()
    rr, ii = np.meshgrid(re, im)
    alpha = (rr + 1j * ii) * math.sqrt(n_scale)
    W = wigner_values(entries, alpha)
    if check_edges:
        peak = np.abs(W).max()
        edge = max(np.abs(W[0]).max(), np.abs(W[-1]).max(), np.abs(W[:, 0]).max(), np.abs(W[:, -1]).max())
        if edge > 1e-4 * peak:
            raise GridTooSmall(f"boundary value {edge:.3e} exceeds 1e-4 of peak {peak:.3e}")
    return WignerField(re, im, W, n_scale)


@dataclass(frozen=True)
class Peak:
    re: float
    im: float
    height: float
    weight: float


def count_peaks(field: WignerField, rel_threshold: float = 0.05) -> list[Peak]:
    """Local maxima (8-neighbourhood) above ``rel_threshold * max W``, weighted by watershed basin.

    Every grid point is assigned to the maximum reached by steepest ascent;
    a peak's weight is the integral of W over its basin.
    """
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    W = field.values
    ny, nx = W.shape
    padded = np.pad(W, 1, mode="constant", constant_values=-np.inf)
    # index of the steepest-ascent neighbour (including self) for every point
    best = np.full(W.shape, -np.inf)
    target = np.arange(W.size).reshape(W.shape)
    jj, ii = np.indices(W.shape)
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            nb = padded[1 + dj:1 + dj + ny, 1 + di:1 + di + nx]
            better = nb > best
            best = np.where(better, nb, best)
            tj = np.clip(jj + dj, 0, ny - 1)
            ti = np.clip(ii + di, 0, nx - 1)
            target = np.where(better, tj * nx + ti, target)
    ptr = target.ravel()
    while True:
        nxt = ptr[ptr]
        if np.array_equal(nxt, ptr):
            break
        ptr = nxt
    is_max = (W == ndimage.maximum_filter(W, size=3, mode="constant", cval=-np.inf))
    top = W.max()
    basin_w = np.bincount(ptr, weights=W.ravel(), minlength=W.size) * field.cell_area
    peaks = []
    for flat in np.nonzero(is_max.ravel())[0]:
        h = W.flat[flat]
        if h < rel_threshold * top:
            continue
        j, i = divmod(int(flat), nx)
        peaks.append(Peak(float(field.re[i]), float(field.im[j]), float(h), float(basin_w[flat])))
    total = sum(p.weight for p in peaks)
    peaks = [Peak(p.re, p.im, p.height, p.weight / total) for p in peaks]
    return sorted(peaks, key=lambda p: -p.weight)


# -- output ------------------------------------------------------------------

def write_csv(field: WignerField, path, meta: dict | None = None) -> None:
    """Columns re, im (rescaled) and w; one row per grid point, im-major."""
    rr, ii = np.meshgrid(field.re, field.im)
    rows = zip(rr.ravel().tolist(), ii.ravel().tolist(), field.values.ravel().tolist())
    atomic_write(path, csv_text(["re", "im", "w"], rows, meta))


_GRID_HEADER = struct.Struct("<2q5d")


def write_binary(field: WignerField, path) -> None:
    """Header (nx, ny, re0, dre, im0, dim, N) then row-major float64 values."""
    nx, ny = field.re.size, field.im.size
    dre = float(field.re[1] - field.re[0]) if nx > 1 else 0.0
    dim = float(field.im[1] - field.im[0]) if ny > 1 else 0.0
    head = _GRID_HEADER.pack(nx, ny, float(field.re[0]), dre, float(field.im[0]), dim, float(field.n_scale))
    atomic_write(path, head + np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_binary(path) -> WignerField:
    with open(path, "rb") as fh:
        nx, ny, re0, dre, im0, dim, n = _GRID_HEADER.unpack(fh.read(_GRID_HEADER.size))
        vals = np.frombuffer(fh.read(8 * nx * ny), dtype="<f8").reshape(ny, nx)
    return WignerField(re0 + dre * np.arange(nx), im0 + dim * np.arange(ny), vals.copy(), n)
