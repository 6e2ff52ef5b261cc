"""The ten acceptance criteria, each at its stated tolerance.

Criteria 4 to 6 share the finite-size pipeline fixture (about three minutes);
criterion 7 needs N = 50 (about a minute).
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq, linear_sum_assignment

from kerrcrit import (ModelParams, annihilation_op, auto_cutoff, bistability_edges, build_liouvillian,
                      count_peaks, full_spectrum, hamiltonian, liouvillian_gap, observables,
                      steady_roots, steady_state_numeric, time_evolve, wigner)
from kerrcrit.criticality import extrapolate_1overN
from kerrcrit.liouvillian import decay_rate, identity_vec
from kerrcrit.wigner import GridSpec


def test_criterion_01_semiclassical_edge(criterion):
    fp = bistability_edges(2.0, 1.0).f_plus
    criterion(1, abs(fp - 1.16) / 1.16 < 0.01, f"F+ = {fp:.5f} (target 1.16 within 1%)")


def test_criterion_02_oracle_equivalence(criterion):
    worst = 0.0
    for n in (1, 2, 3):
        for f in (0.5, 0.93, 1.2):
            p = ModelParams(2.0, 1.0, f, n_scale=n)
            num = observables(steady_state_numeric(build_liouvillian(hamiltonian(p, auto_cutoff(p)))))
            ana = observables(p, mode="analytic")
            worst = max(worst, abs(num.n / ana.n - 1), abs(num.g2 / ana.g2 - 1))
    criterion(2, worst < 1e-6, f"max relative deviation {worst:.2e} (bound 1e-6)")


def test_criterion_03_exact_limits(criterion):
    errs = {}
    p = ModelParams(1.3, 0.0, 1.7, n_scale=2)
    obs = observables(steady_state_numeric(build_liouvillian(hamiltonian(p, 40))))
    errs["n"] = abs(obs.n / (p.f**2 / (p.delta**2 + 0.25)) - 1)
    errs["g2"] = abs(obs.g2 - 1)
    lam = liouvillian_gap(ModelParams(1.3, 1.0, 0.0, n_scale=2), 12).lam
    errs["gap_F0"] = abs(lam - complex(-0.5, 1.3))
    gaps = [liouvillian_gap(ModelParams(1.3, 0.0, f), 25).lam for f in (0.3, 0.9, 1.5)]
    errs["gap_U0"] = max(abs(g - gaps[0]) for g in gaps)
    ok = errs["n"] < 1e-10 and errs["g2"] < 1e-8 and errs["gap_F0"] < 1e-10 and errs["gap_U0"] < 1e-8
    criterion(3, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


@pytest.mark.slow
def test_criterion_04_exponential_closing(bistable_pipeline, criterion):
    cf, _ = bistable_pipeline
    criterion(4, cf.tau_r2 >= 0.99 and cf.kappa > 0,
              f"kappa = {cf.kappa:.4f}, R^2 = {cf.tau_r2:.5f} over N = 3..12")


@pytest.mark.slow
def test_criterion_05_critical_drive(bistable_pipeline, criterion):
    cf, _ = bistable_pipeline
    fc = dict(zip(cf.n_values, cf.f_c))
    ns = [6.0, 8.0, 10.0, 12.0]
    ex = extrapolate_1overN(ns, [fc[n] for n in ns], fraction=1.0)
    criterion(5, 0.88 <= ex.value <= 0.98, f"F_c(inf) = {ex.value:.4f} +- {ex.stderr:.4f} from N = 6,8,10,12")


@pytest.mark.slow
def test_criterion_06_power_law(bistable_pipeline, criterion):
    cf, _ = bistable_pipeline
    ok = cf.slope_r2 >= 0.95 and 0.25 <= cf.b_inf <= 0.45 and 0.16 <= cf.f_inf <= 0.28
    criterion(6, ok, f"bN vs N R^2 = {cf.slope_r2:.4f}, b(inf) = {cf.b_inf:.4f}, f(inf) = {cf.f_inf:.4f}")


@pytest.mark.slow
def test_criterion_07_linear_response_limit(criterion):
    n = 50
    c = auto_cutoff(ModelParams(0.8, 1.0, 1.0, n_scale=n))
    worst, used = 0.0, 0
    for f in np.linspace(0.0, 1.0, 21):
        p = ModelParams(0.8, 1.0, float(f), n_scale=n)
        lam = liouvillian_gap(p, c).lam
        (root,) = steady_roots(p)
        lr = root.lambda_lr[0]
        if lam.imag == 0 or lr.imag == 0:
            continue  # collapse window
        lr = lr if lam.imag > 0 else lr.conjugate()
        worst = max(worst, abs(lam - lr) / abs(lr))
        used += 1
    criterion(7, worst <= 0.1 and used >= 10, f"max |lambda - lambda_LR|/|lambda_LR| = {worst:.4f} on {used} points")


def _wigner_peaks(n, f):
    p = ModelParams(3.0, 1.0, f, n_scale=n)
    rho = steady_state_numeric(build_liouvillian(hamiltonian(p, auto_cutoff(p))))
    grid = GridSpec.default(max(r.n_sc for r in steady_roots(p)), n)
    return count_peaks(wigner(rho, grid, n))


@pytest.mark.slow
def test_criterion_08_wigner_bimodality(criterion):
    bimodal = [len(_wigner_peaks(n, 1.65)) for n in (1, 2, 3)]
    pk = _wigner_peaks(10, 1.65)
    second = pk[1].weight if len(pk) > 1 else 0.0
    single = [len(_wigner_peaks(n, 1.4)) for n in (1, 2, 3, 10)]
    ok = bimodal == [2, 2, 2] and second < 0.1 and single == [1, 1, 1, 1]
    criterion(8, ok, f"F=1.65 peaks {bimodal} for N=1,2,3, N=10 secondary weight {second:.3f}; "
                     f"F=1.4 peaks {single}")


def _g2_peak(n):
    g2 = lambda f: observables(ModelParams(3.0, 1.0, f, n_scale=n), mode="analytic").g2
    fs = np.linspace(1.2, 2.2, 401)
    gs = np.array([g2(f) for f in fs])
    i = int(np.argmax(gs))
    fine = np.linspace(fs[i - 2], fs[i + 2], 201)
    gf = np.array([g2(f) for f in fine])
    j = int(np.argmax(gf))
    height = gf[j]
    level = 1 + (height - 1) / 2  # half height above the coherent baseline g2 = 1
    left = fs[:i][gs[:i] < level][-1]
    right = fs[i:][gs[i:] < level][0]
    width = brentq(lambda f: g2(f) - level, fine[j], right, xtol=1e-10) - \
        brentq(lambda f: g2(f) - level, left, fine[j], xtol=1e-10)
    return width, height


def test_criterion_09_g2_peak(criterion):
    ns = (5, 10, 15, 20, 25)
    widths, heights = zip(*(_g2_peak(n) for n in ns))
    spread = (max(heights) - min(heights)) / min(heights)
    ok = all(b < a for a, b in zip(widths, widths[1:])) and spread < 0.25
    criterion(9, ok, "FWHM " + ", ".join(f"{w:.4f}" for w in widths) + f" for N={ns}; height spread {spread:.1%}")


def _structural_point(p):
    """All five invariants at one parameter point; returns (failures, decay-rate error)."""
    c = auto_cutoff(p)
    L = build_liouvillian(hamiltonian(p, c))
    d = c + 1
    fails = []
    if np.abs(identity_vec(c) @ L.matrix).max() > 1e-12 * L.norm():
        fails.append("trace")
    ev = full_spectrum(L)
    dist = np.abs(ev[:, None] - ev.conj()[None, :])
    rows, cols = linear_sum_assignment(dist)
    if dist[rows, cols].max() > 1e-8 * L.norm():
        fails.append("conjugation")
    if ev.real.max() > 1e-9:
        fails.append("contractivity spectrum")
    rng = np.random.default_rng(int(1e6 * p.f_tilde))
    states = []
    for _ in range(2):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        states.append(g @ g.conj().T / np.trace(g @ g.conj().T))
    dt = 0.8 / L.norm()
    t1, t2 = (time_evolve(L, s, 2.0, dt, stride=max(1, int(0.1 / dt))) for s in states)
    tdist = [np.abs(np.linalg.eigvalsh(x - y)).sum() for x, y in zip(t1.states, t2.states)]
    if any(b > a + 1e-10 for a, b in zip(tdist, tdist[1:])):
        fails.append("contractivity trace distance")
    rho = steady_state_numeric(L)
    e = rho.entries
    if abs(np.trace(e) - 1) > 1e-10 or np.abs(e - e.conj().T).max() > 1e-10 or np.linalg.eigvalsh(e).min() < -1e-10:
        fails.append("density matrix")
    order = np.argsort(-ev.real)
    gap = ev[order[1]]
    rate = -gap.real
    rho0 = np.zeros((d, d), complex)
    rho0[0, 0] = 1
    tr = time_evolve(L, rho0, 14 / rate, dt, stride=max(1, int(0.02 / dt)))
    a = annihilation_op(c).entries
    dev = np.abs(tr.expect(a) - rho.expect(a))
    late = tr.times >= 6 / rate
    period = math.pi / abs(gap.imag) if abs(gap.imag) > 1e-9 else None
    err = abs(decay_rate(tr.times[late], dev[late], period) / rate - 1)
    if err > 0.05:
        fails.append("decay rate")
    return fails, err


def _separated(p):
    """Gap well separated from the next distinct mode, so one exponential dominates late times."""
    ev = full_spectrum(build_liouvillian(hamiltonian(p, auto_cutoff(p))))
    ev = ev[np.argsort(-ev.real)]
    g = ev[1]
    rest = [e for e in ev[1:] if abs(e - g) > 1e-8 and abs(e - g.conjugate()) > 1e-8]
    return -g.real > 0.05 and rest[0].real / g.real >= 1.5


def test_criterion_10_structural_invariants(criterion):
    rng = np.random.default_rng(2024)
    points = []
    while len(points) < 20:
        p = ModelParams(rng.uniform(-3, 3), rng.uniform(0.2, 2), rng.uniform(0.3, 1.5),
                        n_scale=float(rng.integers(1, 4)))
        if _separated(p):
            points.append(p)
    failures, worst = [], 0.0
    for p in points:
        fails, err = _structural_point(p)
        worst = max(worst, err)
        failures += [(p, f) for f in fails]
    criterion(10, not failures, f"{len(points)} random points, {len(failures)} failures, "
                                f"worst decay-rate error {worst:.2%}")
