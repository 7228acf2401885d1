"""Quick property battery behind ``qnlimit check`` and the kinetic tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closures import ElectronClosure, check_assumption_A
from .diagnostics import appendix_hessian_check, entropy_pair, lemma71_decay_check
from .euler import EulerState, RarefactionWave, curve_integral, entropy, lam, rho_plus_for_strength
from .fluid import poisson_solve
from .kinetic import (MacroState, VelocityGrid, burnett_hat, collision_invariants, gram, maxwellian,
                      project_P0, project_P1, sigma_eigs)
from .smoothwave import SmoothWave


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool


def _le(name, value, threshold):
    return CheckResult(name, float(value), float(threshold), bool(value <= threshold))


def check_appendix():
    rep = appendix_hessian_check()
    out = [_le(f"hessian_{k}", e, rep.tol) for k, e in rep.errors.items()]
    out.append(CheckResult("appendix_lower_constant", rep.c_lower, 0.05, rep.c_lower >= 0.05))
    return out


def check_closures():
    grid = np.linspace(-5.0, 5.0, 1000)
    bz = ElectronClosure.boltzmann(1.0)
    rep = check_assumption_A(bz, grid)
    rho = np.asarray(bz.rho_e(grid))
    dp = np.max(np.abs(np.asarray(bz.dP_phi_drho(rho)) - 1.0))
    gl = check_assumption_A(ElectronClosure.gamma_law(2.0), np.linspace(-1.99, 10.0, 1000))
    return [
        _le("boltzmann_dPphi_equals_Ae", dp, 1e-12),
        _le("boltzmann_A3_equality", float(np.max(np.abs(rep.A3_slack))), 1e-10),
        CheckResult("gamma_law_assumptions", float(gl.passed), 1.0, gl.passed),
    ]


def check_riemann():
    cl = ElectronClosure.boltzmann(1.0)
    left = EulerState(1.0, 0.0, 1.5)
    w = RarefactionWave.from_left(left, rho_plus_for_strength(left, 0.1, cl), cl)
    xi = np.linspace(w.xi_lo, w.xi_hi, 1002)[1:-1]
    rho, u, th, _ = w.eval(xi)
    S = entropy(rho, th)
    inv = u[::10] - np.array([curve_integral(1.0, r, w.S_star, cl) for r in rho[::10]])
    lam3 = np.array([lam(3, EulerState(r, v, t), cl) for r, v, t in zip(rho, u, th)])
    return [
        _le("riemann_entropy_spread", np.ptp(S), 1e-8),
        _le("riemann_invariant_spread", np.ptp(inv), 1e-8),
        _le("riemann_lambda3_residual", np.max(np.abs(lam3 - xi)), 1e-10),
    ]


def check_decay():
    cl = ElectronClosure.boltzmann(1.0)
    sw = SmoothWave(RarefactionWave.from_left(EulerState(1.0, 0.0, 1.5), 1.5, cl), 0.01)
    out = []
    for p in (1, 2, math.inf):
        slope, expected = lemma71_decay_check(sw, p, n_times=8)
        out.append(_le(f"decay_exponent_p{p}", abs(slope - expected), 0.1))
    return out


def check_entropy():
    x = np.linspace(-10, 10, 401)
    bar = {"rho": 1 + 0.1 * np.tanh(x), "u1": 0.2 * np.tanh(x), "theta": 1.5 + 0.1 * np.tanh(x)}
    rng = np.random.default_rng(1)
    ratios = []
    for size in (1e-3, 1e-2):
        pert = size * rng.uniform(-1, 1, (3, x.size))
        fld = type("F", (), {"rho": bar["rho"] + pert[0], "u1": bar["u1"] + pert[1],
                             "theta": bar["theta"] + pert[2]})()
        eta, _ = entropy_pair(fld, bar)
        ratios.append(eta / np.sum(pert**2, axis=0))
    r = np.concatenate(ratios)
    C = max(float(np.max(r)), 1.0 / float(np.min(r)))
    return [_le("entropy_equivalence_constant", C, 3.0)]


def check_poisson():
    x = np.linspace(-10, 10, 801)
    rho = 1 + 1e-4 * np.exp(-x * x)
    lam2 = 0.5
    phi = poisson_solve(rho, lam2, ElectronClosure.boltzmann(1.0), (0.0, 0.0), x=x)
    h = x[1] - x[0]
    n = x.size - 2
    A = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) * lam2 / h**2
    lin = np.linalg.solve(A + np.eye(n), rho[1:-1] - 1.0)
    return [_le("poisson_linear_oracle", np.max(np.abs(phi[1:-1] - lin)) / np.max(np.abs(rho)), 1e-6)]


def check_kinetic():
    g = VelocityGrid(8.0, 64)
    ms = MacroState(1.2, (0.1, 0.0, 0.0), 1.4)
    v = g.v
    h = np.exp(-np.sum(v * v, axis=-1) / 3.0) * (1 + 0.3 * v[..., 0] + 0.1 * v[..., 1] ** 2)
    P0 = project_P0(h, ms, g)
    sc = np.max(np.abs(h))
    A1M = burnett_hat("A", 1, ms, v) * maxwellian(ms, v)
    psi = collision_invariants(v)
    return [
        _le("gram_identity", np.max(np.abs(gram(ms, g) - np.eye(5))), 1e-8),
        _le("projection_idempotent", np.max(np.abs(project_P0(P0, ms, g) - P0)) / sc, 1e-7),
        _le("projection_complement", np.max(np.abs(project_P0(project_P1(h, ms, g), ms, g))) / sc, 1e-7),
        _le("burnett_microscopic", max(abs(g.integrate(A1M * p)) for p in psi), 1e-7),
    ]


def check_sigma():
    s = np.linspace(5.0, 20.0, 16)
    vals = np.array([sigma_eigs(x) for x in s])
    sp = np.polyfit(np.log(s), np.log(vals[:, 0]), 1)[0]
    st = np.polyfit(np.log(s), np.log(vals[:, 1]), 1)[0]
    return [_le("sigma_parallel_slope", abs(sp + 3.0) / 3.0, 0.05), _le("sigma_transverse_slope", abs(st + 1.0), 0.05)]


BATTERY = (check_appendix, check_closures, check_riemann, check_decay, check_entropy, check_poisson,
           check_kinetic, check_sigma)


def run_battery():
    out = []
    for fn in BATTERY:
        out.extend(fn())
    return out


def kinetic_tables(V=8.0, n=64):
    """CSV-ready tables: sigma eigenvalues against |v|, the Gram matrix and projection residuals."""
    s = np.concatenate([[0.0], np.geomspace(0.1, 20.0, 40)])
    sig = [[x, *sigma_eigs(x)] for x in s]
    g = VelocityGrid(V, n)
    ms = MacroState(1.0, (0.0, 0.0, 0.0), 1.5)
    G = gram(ms, g)
    v = g.v
    h = np.exp(-np.sum(v * v, axis=-1) / 3.0) * (1 + 0.3 * v[..., 0] + 0.1 * v[..., 1] ** 2)
    P0 = project_P0(h, ms, g)
    P1 = h - P0
    sc = float(np.max(np.abs(h)))
    psi = collision_invariants(v)
    proj = [
        ["P0P0_minus_P0", float(np.max(np.abs(project_P0(P0, ms, g) - P0))) / sc],
        ["P0P1", float(np.max(np.abs(project_P0(P1, ms, g)))) / sc],
    ] + [[f"moment_P1_psi{i}", abs(g.integrate(P1 * psi[i]))] for i in range(5)]
    return {
        "sigma_decay": (["speed", "sigma_parallel", "sigma_transverse"], sig),
        "gram": (["i"] + [f"j{j}" for j in range(5)], [[i, *G[i]] for i in range(5)]),
        "projection": (["quantity", "value"], proj),
    }
