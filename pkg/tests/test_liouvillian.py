import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from kerrcrit.errors import DimensionMismatch, StepTooLarge
from kerrcrit.liouvillian import (Superoperator, apply_liouvillian, build_liouvillian, decay_rate,
                                  dump_superoperator, identity_vec, load_superoperator, time_evolve, unvec, vec)
from kerrcrit.model import FockOperator, ModelParams, annihilation_op, hamiltonian
from kerrcrit.spectral import liouvillian_gap
from kerrcrit.steady import steady_state_numeric


def _L(delta=2.0, u=1.0, f=0.5, n=1.0, cutoff=12):
    return build_liouvillian(hamiltonian(ModelParams(delta, u, f, n_scale=n), cutoff))


def _random_state(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_vectorization_convention(rng):
    A, B, R = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) for _ in range(3))
    assert np.allclose(np.kron(B.T, A) @ vec(R), vec(A @ R @ B))
    assert np.array_equal(unvec(vec(R)), R)


def test_two_level_spectrum():
    delta = 1.3
    w = np.linalg.eigvals(_L(delta, 0.0, 0.0, cutoff=1).todense())
    expected = np.array([0, -1, -0.5 + 1j * delta, -0.5 - 1j * delta])
    assert np.allclose(np.sort_complex(w), np.sort_complex(expected), atol=1e-14)


def test_trace_preservation_example():
    L = _L(cutoff=15)
    left = identity_vec(15).conj() @ L.matrix
    assert np.linalg.norm(left) < 1e-10 * L.norm()


def test_zero_is_leading_eigenvalue():
    w = np.linalg.eigvals(_L(2.0, 1.0, 0.5, cutoff=20).todense())
    assert abs(w[np.argmax(w.real)]) < 1e-10


def test_convention_tag_enforced():
    L = _L(cutoff=2)
    with pytest.raises(ValueError):
        Superoperator(2, L.matrix, convention="row")
    with pytest.raises(DimensionMismatch):
        Superoperator(3, L.matrix)
    with pytest.raises(DimensionMismatch):
        FockOperator(3, np.zeros((3, 3)))


def test_nnz_is_cubic():
    for c in (10, 20, 40):
        assert _L(cutoff=c).nnz <= 8 * (c + 1) ** 3


def test_apply_matches_sparse_and_dense(rng):
    L = _L(2.0, 1.0, 0.7, n=2, cutoff=10)
    x = vec(_random_state(rng, 11))
    ref = L.todense() @ x
    got = apply_liouvillian(L, x)
    assert np.linalg.norm(got - ref) <= 1e-13 * np.linalg.norm(ref)
    assert np.linalg.norm(L.matrix @ x - ref) <= 1e-13 * np.linalg.norm(ref)
    with pytest.raises(DimensionMismatch):
        apply_liouvillian(L, x[:-1])


def test_apply_on_steady_state_and_identity():
    L = _L(cutoff=14)
    rho = steady_state_numeric(L)
    assert np.linalg.norm(apply_liouvillian(L, vec(rho.entries))) < 1e-10 * L.norm()
    L0 = _L(2.0, 1.0, 0.0, cutoff=6)
    x = identity_vec(6) / 7
    assert np.allclose(apply_liouvillian(L0, x), L0.matrix @ x, rtol=1e-13, atol=1e-15)


def test_dump_roundtrip(tmp_path):
    L = _L(cutoff=7)
    dump_superoperator(L, tmp_path / "L.bin")
    raw = (tmp_path / "L.bin").read_bytes()
    assert np.frombuffer(raw[:32], "<i8").tolist() == [7, 64, L.nnz, 0]
    back = load_superoperator(tmp_path / "L.bin")
    assert (back.matrix != L.matrix).nnz == 0
    x = np.arange(64) + 0j
    assert np.array_equal(apply_liouvillian(back, x), L.matrix @ x)


def test_steady_state_is_fixed_point():
    L = _L(cutoff=14)
    rho = steady_state_numeric(L).entries
    tr = time_evolve(L, rho, 5.0, 0.5 / L.norm(), stride=50)
    assert max(np.abs(s - rho).max() for s in tr.states) < 1e-8


def test_single_photon_decay():
    L = _L(1.0, 0.0, 0.0, cutoff=3)
    rho0 = np.zeros((4, 4), complex)
    rho0[1, 1] = 1
    tr = time_evolve(L, rho0, 4.0, 0.01, stride=10)
    p1 = np.array([s[1, 1].real for s in tr.states])
    assert np.allclose(p1, np.exp(-tr.times), atol=1e-6)


def test_time_evolution_preserves_trace_and_hermiticity(rng):
    L = _L(1.0, 1.0, 1.0, n=2, cutoff=10)
    tr = time_evolve(L, _random_state(rng, 11), 3.0, 0.5 / L.norm(), stride=20)
    for s in tr.states:
        assert abs(np.trace(s) - 1) < 1e-8
        assert np.abs(s - s.conj().T).max() < 1e-9


def test_step_too_large():
    L = _L(2.0, 1.0, 1.0, cutoff=15)
    rho0 = np.zeros((16, 16), complex)
    rho0[0, 0] = 1
    with pytest.raises(StepTooLarge):
        time_evolve(L, rho0, 5.0, 10.0 / L.norm())
    with pytest.raises(ValueError):
        time_evolve(L, rho0, 1.0, 0.0)


def test_field_decay_matches_gap():
    p = ModelParams(0.8, 1.0, 0.5, n_scale=5)
    c = 20
    L = build_liouvillian(hamiltonian(p, c))
    gap = liouvillian_gap(p, c, method="dense")
    rho_ss = steady_state_numeric(L).entries
    rho0 = np.zeros((c + 1, c + 1), complex)
    rho0[0, 0] = 1
    dt = 0.8 / L.norm()
    tr = time_evolve(L, rho0, 40.0, dt, stride=max(1, int(0.05 / dt)))
    a = annihilation_op(c).entries
    dev = np.abs(tr.expect(a) - np.trace(a @ rho_ss))
    late = tr.times >= 15
    period = np.pi / abs(gap.lam.imag) if gap.lam.imag else None
    rate = decay_rate(tr.times[late], dev[late], period)
    assert rate == pytest.approx(-gap.lam.real, rel=0.05)


@given(st.floats(0.01, 3), st.floats(0.5, 3))
def test_decay_rate_recovers_damped_beat(rate, omega):
    t = np.linspace(0, 30, 6001)
    s = np.exp(-rate * t) * np.abs(np.cos(omega * t))
    est = decay_rate(t[t >= 5], s[t >= 5], np.pi / omega)
    assert est == pytest.approx(rate, rel=0.02)
