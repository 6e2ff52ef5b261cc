import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kerrcrit.cutoff import auto_cutoff
from kerrcrit.errors import GridTooSmall
from kerrcrit.io import read_csv
from kerrcrit.liouvillian import build_liouvillian
from kerrcrit.model import ModelParams, hamiltonian
from kerrcrit.semiclassical import steady_roots
from kerrcrit.steady import observables, steady_state_numeric
from kerrcrit.wigner import (GridSpec, WignerField, count_peaks, read_binary, wigner, wigner_values,
                             write_binary, write_csv)


def coherent(beta, cutoff):
    k = np.arange(cutoff + 1)
    lf = np.array([math.lgamma(i + 1) for i in k])
    psi = np.exp(-abs(beta) ** 2 / 2 - 0.5 * lf) * np.power(complex(beta), k)
    return np.outer(psi, psi.conj())


def steady(delta, u, f, n):
    p = ModelParams(delta, u, f, n_scale=n)
    c = auto_cutoff(p)
    rho = steady_state_numeric(build_liouvillian(hamiltonian(p, c)))
    grid = GridSpec.default(max(r.n_sc for r in steady_roots(p)), n)
    return rho, wigner(rho, grid, n)


def vacuum(cutoff=4):
    rho = np.zeros((cutoff + 1, cutoff + 1), complex)
    rho[0, 0] = 1
    return rho


def test_vacuum_peak_height():
    assert wigner_values(vacuum(), np.array([0j]))[0] == pytest.approx(2 / math.pi, rel=1e-14)
    w = wigner(vacuum(), GridSpec.square(4.0, 81))
    peaks = count_peaks(w)
    assert len(peaks) == 1 and (peaks[0].re, peaks[0].im) == (0.0, 0.0)
    assert peaks[0].weight == pytest.approx(1.0)


def test_fock_one_is_negative_at_origin():
    rho = np.zeros((3, 3), complex)
    rho[1, 1] = 1
    assert wigner_values(rho, np.array([0j]))[0] == pytest.approx(-2 / math.pi, rel=1e-14)


@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
def test_coherent_state_gaussian(br, bi):
    beta = complex(br, bi)
    pts = beta + np.array([0, 0.3, -0.2j, 0.5 + 0.5j, 1.0])
    got = wigner_values(coherent(beta, 60), pts)
    assert np.allclose(got, 2 / math.pi * np.exp(-2 * np.abs(pts - beta) ** 2), atol=1e-12)


def test_linear_cavity_steady_state_peak():
    p = ModelParams(1.0, 0.0, 1.2, n_scale=3)
    rho = steady_state_numeric(build_liouvillian(hamiltonian(p, 40)))
    w = wigner(rho, GridSpec.square(3.0, 301), 3)
    beta = -1.2 / (-1.0 - 0.5j)  # rescaled mean-field amplitude
    pk = count_peaks(w)
    assert len(pk) == 1
    assert abs(complex(pk[0].re, pk[0].im) - beta) < 0.02
    assert pk[0].height == pytest.approx(2 / math.pi, rel=1e-3)


def test_bimodal_small_n():
    _, w = steady(3.0, 1.0, 1.65, 1)
    assert len(count_peaks(w)) == 2


@pytest.mark.parametrize("n", [1, 2, 3, 10])
@pytest.mark.parametrize("f", [1.4, 1.65])
def test_field_invariants(f, n):
    rho, w = steady(3.0, 1.0, f, n)
    assert abs(w.integral() - 1) < 1e-3
    assert w.values.min() >= -2 / math.pi - 1e-3
    assert w.moment_n() == pytest.approx(observables(rho).n, rel=1e-3)


def test_secondary_weight_declines():
    second = []
    for n in (1, 2, 3, 10):
        pk = count_peaks(steady(3.0, 1.0, 1.65, n)[1])
        second.append(pk[1].weight if len(pk) > 1 else 0.0)
    assert all(b < a for a, b in zip(second, second[1:]))
    assert second[-1] < 0.1


@pytest.mark.parametrize("f", [1.4, 1.8])
def test_rescaling_covariance(f):
    locs = []
    for n in (10, 20):
        pk = count_peaks(steady(3.0, 1.0, f, n)[1])[0]
        locs.append(complex(pk.re, pk.im))
    assert abs(locs[1] - locs[0]) < 0.1 * abs(locs[0])


def test_grid_too_small():
    with pytest.raises(GridTooSmall):
        wigner(coherent(2.0, 30), GridSpec.square(1.0, 41))
    w = wigner(coherent(2.0, 30), GridSpec.square(1.0, 41), check_edges=False)
    assert w.values.shape == (41, 41)


def test_default_grid_framing():
    g = GridSpec.default(4.0, 1.0)
    assert g.points == 201 and g.re_max == pytest.approx(1.5 * 2 + 2.5)
    assert GridSpec.default(0.1, 100.0).re_max == pytest.approx(1.5 + 0.25)


def test_peak_threshold_validation():
    w = wigner(vacuum(), GridSpec.square(4.0, 41))
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            count_peaks(w, bad)


def test_synthetic_two_gaussians():
    re = im = np.linspace(-5, 5, 201)
    rr, ii = np.meshgrid(re, im)
    vals = 0.7 * np.exp(-2 * ((rr + 2) ** 2 + ii**2)) + 0.3 * np.exp(-2 * ((rr - 2) ** 2 + ii**2))
    vals *= 2 / math.pi
    pk = count_peaks(WignerField(re, im, vals, 1.0))
    assert len(pk) == 2
    assert [p.weight for p in pk] == pytest.approx([0.7, 0.3], abs=1e-4)
    assert (pk[0].re, pk[1].re) == (-2.0, 2.0)


def test_csv_and_binary_roundtrip(tmp_path):
    w = wigner(coherent(0.5, 20), GridSpec.square(3.0, 31))
    write_csv(w, tmp_path / "w.csv", {"note": "test"})
    header, rows = read_csv(tmp_path / "w.csv")
    assert header == ["re", "im", "w"] and len(rows) == 31 * 31
    assert float(rows[31]["im"]) == w.im[1] and float(rows[31]["w"]) == w.values[1, 0]
    write_binary(w, tmp_path / "w.bin")
    back = read_binary(tmp_path / "w.bin")
    assert np.array_equal(back.values, w.values)
    assert np.allclose(back.re, w.re, atol=1e-12) and back.n_scale == 1.0
