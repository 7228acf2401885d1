import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from qnlimit.diagnostics import (HESSIAN_EXACT, Psi, appendix_f, appendix_hessian_check, energy_terms,
                                 entropy_pair, fluid_energy_report, gap_envelope, lemma71_decay_check, rate_fit,
                                 sup_distance_to_wave)
from qnlimit.errors import InputError, StateError
from qnlimit.fluid import FluidField
from qnlimit.smoothwave import SmoothWave

pos = st.floats(0.05, 20.0)


def _field(x, rho, u1, theta, phi=None, t=1.0, u2=None, u3=None):
    z = np.zeros_like(x)
    return FluidField(x, rho, u1, z if u2 is None else u2, z if u3 is None else u3, theta,
                      z if phi is None else phi, t)


@given(pos)
def test_psi_nonnegative(s):
    assert Psi(s) >= 0


def test_psi_zero_at_one():
    assert Psi(1.0) == 0.0


@settings(max_examples=60)
@given(pos, st.floats(-3, 3), pos, pos, st.floats(-3, 3), pos, st.floats(-2, 2))
def test_entropy_nonnegative(r, u, th, rb, ub, thb, u2):
    f = {"rho": np.array([r]), "u1": np.array([u]), "theta": np.array([th]), "u2": np.array([u2])}
    eta, _ = entropy_pair(f, {"rho": np.array([rb]), "u1": np.array([ub]), "theta": np.array([thb])})
    assert eta[0] >= -1e-12


def test_entropy_vanishes_on_background(weak_wave):
    sw = SmoothWave(weak_wave, 0.5)
    x = np.linspace(-10, 10, 201)
    fl = sw.fields(2.0, x)
    f = _field(x, fl["rho"], fl["u1"], fl["theta"], t=2.0)
    eta, q = entropy_pair(f, sw)
    assert np.max(np.abs(eta)) <= 1e-15 and np.max(np.abs(q)) <= 1e-15


def test_entropy_flux_formula():
    f = {"rho": np.array([1.2]), "u1": np.array([0.3]), "theta": np.array([1.1])}
    b = {"rho": np.array([1.0]), "u1": np.array([0.1]), "theta": np.array([1.5])}
    eta, q = entropy_pair(f, b)
    e = 1.2 * 1.5 * Psi(1 / 1.2) + 1.5 * 1.2 * 1.5 * Psi(1.1 / 1.5) + 0.75 * 1.2 * 0.04
    assert eta[0] == pytest.approx(e, rel=1e-14)
    assert q[0] == pytest.approx(0.3 * e + 0.2 * (1.2 * 1.1 - 1.5), rel=1e-14)


def test_entropy_quadratic_equivalence():
    x = np.linspace(-10, 10, 401)
    bar = {"rho": 1 + 0.1 * np.tanh(x), "u1": 0.2 * np.tanh(x), "theta": 1.5 + 0.1 * np.tanh(x)}
    rng = np.random.default_rng(1)
    ratios = []
    for size in (1e-3, 1e-2, 5e-2):
        p = size * rng.uniform(-1, 1, (3, x.size))
        eta, _ = entropy_pair({"rho": bar["rho"] + p[0], "u1": bar["u1"] + p[1], "theta": bar["theta"] + p[2]},
                              bar)
        ratios.append(eta / np.sum(p**2, axis=0))
    r = np.concatenate(ratios)
    assert max(np.max(r), 1 / np.min(r)) <= 3.0


def test_entropy_rejects_nonpositive():
    with pytest.raises(StateError):
        entropy_pair({"rho": np.array([-1.0]), "u1": np.zeros(1), "theta": np.ones(1)},
                     {"rho": np.ones(1), "u1": np.zeros(1), "theta": np.ones(1)})


def test_hessian_constants_symbolic():
    x1, x2 = sp.symbols("x1 x2", positive=True)
    P = lambda s: s - sp.log(s) - 1  # noqa: E731
    L = sp.Rational(2, 3) * sp.log(x1) + sp.log(x2)
    f = sp.Rational(2, 3) * P(x1) + P(x2) - L**2 / 5
    H = sp.hessian(f, (x1, x2)).subs({x1: 1, x2: 1})
    assert sp.nsimplify(H[0, 0]) == sp.Rational(22, 45)
    assert sp.nsimplify(H[0, 1]) == sp.Rational(-4, 15)
    assert sp.nsimplify(H[1, 1]) == sp.Rational(3, 5)
    assert sp.nsimplify(H.det()) == sp.Rational(2, 9)
    assert float(sp.Rational(22, 45)) == HESSIAN_EXACT["f11"]
    assert appendix_f(1.0, 1.0) == 0.0
    assert appendix_f(1.3, 0.8) == pytest.approx(float(f.subs({x1: 1.3, x2: 0.8})), rel=1e-14)


def test_hessian_check_report():
    rep = appendix_hessian_check()
    assert rep.passed
    assert max(rep.errors.values()) <= 1e-6
    assert rep.c_lower > 0.05
    assert all(abs(g) <= 1e-10 for g in rep.gradient)
    with pytest.raises(InputError):
        appendix_f(0.0, 1.0)


def test_sup_distance_zero_on_exact_wave(weak_wave):
    x = np.linspace(-20, 20, 401)
    t = 3.0
    rho, u1, th, phi = weak_wave.eval(x / t)
    d = sup_distance_to_wave(_field(x, rho, u1, th, phi, t), weak_wave)
    assert d["total"] == 0.0
    d = sup_distance_to_wave(_field(x, rho + 0.01, u1, th, phi - 0.02, t), weak_wave)
    assert d["rho"] == pytest.approx(0.01) and d["phi"] == pytest.approx(0.02)
    assert d["total"] == pytest.approx(0.03)
    with pytest.raises(InputError):
        sup_distance_to_wave(_field(x, rho, u1, th, phi, 0.0), weak_wave)


def test_energy_terms(weak_wave):
    sw = SmoothWave(weak_wave, 0.5)
    x = np.linspace(-20, 20, 801)
    fl = sw.fields(1.0, x)
    f = _field(x, fl["rho"], fl["u1"], fl["theta"], fl["phi"], 1.0)
    rep = energy_terms(f, sw, 0.05, 2 / 3, 2 / 3)
    assert rep.fluid_E == 0.0 and rep.fluid_D == 0.0
    assert rep.tau == pytest.approx(0.05 ** (-2 / 3))
    bump = 1e-3 * np.exp(-x * x)
    f2 = _field(x, fl["rho"] + bump, fl["u1"], fl["theta"], fl["phi"] + bump, 1.0, u2=bump)
    rep2 = energy_terms(f2, sw, 0.05, 2 / 3, 2 / 3)
    assert rep2.fluid_E > 0 and rep2.fluid_D > 0
    f3 = _field(x, fl["rho"] + 2 * bump, fl["u1"], fl["theta"], fl["phi"] + 2 * bump, 1.0, u2=2 * bump)
    assert energy_terms(f3, sw, 0.05, 2 / 3, 2 / 3).fluid_E == pytest.approx(4 * rep2.fluid_E, rel=1e-12)


def test_fluid_energy_report(weak_wave):
    sw = SmoothWave(weak_wave, 0.5)
    x = np.linspace(-20, 20, 401)
    hist = []
    for t in (1.0, 1.1, 1.2, 1.3):
        fl = sw.fields(t, x)
        hist.append(_field(x, fl["rho"], fl["u1"], fl["theta"], fl["phi"], t))
    reps = fluid_energy_report(hist, sw, 0.05, 2 / 3, 2 / 3)
    assert len(reps) == 4 and all(r.q3 > 0 for r in reps)
    with pytest.raises(InputError):
        fluid_energy_report(hist[:2], sw, 0.05, 2 / 3, 2 / 3)


def test_rate_fit_exact_power():
    eps = np.geomspace(0.05, 0.005, 6)
    err = 0.7 * eps**0.33 * np.abs(np.log(eps))
    fit = rate_fit(zip(eps, err), a=2 / 3)
    assert fit.slope == pytest.approx(0.33, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.7), abs=1e-12)
    assert fit.residual <= 1e-12
    assert fit.target == pytest.approx(1 / 3)
    assert "slope" in fit.summary()


def test_rate_fit_noise_residual():
    rng = np.random.default_rng(0)
    eps = np.geomspace(0.05, 0.001, 12)
    noise = rng.normal(0, 0.02, eps.size)
    err = eps**0.4 * np.abs(np.log(eps)) * np.exp(noise)
    fit = rate_fit(zip(eps, err))
    assert fit.slope == pytest.approx(0.4, abs=0.05)
    assert fit.residual == pytest.approx(np.std(noise), rel=0.5)


@pytest.mark.parametrize("pts", [[(0.1, 1.0)] * 3, [(0.1, 1.0), (0.05, 0.0), (0.02, 1.0), (0.01, 1.0)],
                                 [(1.5, 1.0), (0.05, 1.0), (0.02, 1.0), (0.01, 1.0)]])
def test_rate_fit_rejects(pts):
    with pytest.raises(InputError):
        rate_fit(pts)


def test_decay_check_sup_norm(strong_wave):
    slope, expected = lemma71_decay_check(SmoothWave(strong_wave, 0.01), math.inf, n_times=8)
    assert expected == -1.0
    assert abs(slope - expected) <= 0.1
    with pytest.raises(InputError):
        lemma71_decay_check(SmoothWave(strong_wave, 0.01), 2, t_range=(1.0, 10.0))


def test_gap_envelope():
    assert gap_envelope(0.1, 1.0) == pytest.approx(0.1 * (math.log(2) + math.log(10)))
