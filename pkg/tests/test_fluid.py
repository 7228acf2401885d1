import math
import warnings

import numpy as np
import pytest
from scipy import optimize

from qnlimit.closures import ElectronClosure
from qnlimit.errors import ClosureRangeError, ConfigError, StateError
from qnlimit.fluid import (ConservationAudit, FluidField, SolverConfig, TransportLaw, constant_field,
                           initial_data_smooth_wave, max_stable_dt, ns_poisson_rhs, poisson_solve, read_snapshot,
                           run, scale_transform, step, write_snapshot)
from qnlimit.smoothwave import SmoothWave

from _mms import manufactured_errors


@pytest.fixture(scope="module")
def small_cfg():
    return SolverConfig(epsilon=0.05, L=20.0, nx=201, t_end=1.0, snapshot_interval=0.5, k=0.5, force=True)


# Poisson ---------------------------------------------------------------------


def test_poisson_constant_density(boltzmann):
    rho = np.full(51, 1.2)
    phi = poisson_solve(rho, 0.1, boltzmann, (math.log(1.2),) * 2, h=0.1)
    assert np.max(np.abs(phi - math.log(1.2))) <= 1e-14


def _laplacian(n, h):
    return (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2


def test_poisson_linear_oracle(boltzmann):
    x = np.linspace(-10, 10, 801)
    rho = 1 + 1e-4 * np.exp(-x * x)
    lam2 = 0.5
    phi = poisson_solve(rho, lam2, boltzmann, (0.0, 0.0), x=x)
    n = x.size - 2
    lin = np.linalg.solve(lam2 * _laplacian(n, x[1] - x[0]) + np.eye(n), rho[1:-1] - 1.0)
    # normalised by the data scale: the linearisation itself is only accurate to O(amplitude^2)
    assert np.max(np.abs(phi[1:-1] - lin)) / np.max(np.abs(rho)) <= 1e-6


@pytest.mark.parametrize("closure", [ElectronClosure.boltzmann(1.0), ElectronClosure.gamma_law(5 / 3, 1.2)])
def test_poisson_dense_nonlinear_oracle(closure):
    x = np.linspace(-5, 5, 81)
    h = x[1] - x[0]
    rho = 1 + 0.4 * np.exp(-x * x) * (1 + 0.5 * np.sin(3 * x))
    lam2 = 0.05
    bc = (0.1, -0.05)
    n = x.size - 2
    K = lam2 * _laplacian(n, h)

    edge = lam2 * np.r_[bc[0], np.zeros(n - 2), bc[1]] / h**2

    def F(p):
        return K @ p - edge - (rho[1:-1] - closure.rho_e(p))

    ref = optimize.root(F, np.zeros(n), method="hybr", tol=1e-14).x
    phi = poisson_solve(rho, lam2, closure, bc, h=h)
    assert np.max(np.abs(F(ref))) <= 1e-11
    assert np.max(np.abs(phi[1:-1] - ref)) <= 1e-9


def test_poisson_quasineutral_limit(boltzmann):
    x = np.linspace(-5, 5, 2001)
    rho = 1 + 0.3 * np.exp(-x * x)
    gaps = []
    for lam2 in (1e-1, 1e-2, 1e-3, 1e-4):
        phi = poisson_solve(rho, lam2, boltzmann, (0.0, 0.0), x=x)
        gaps.append(np.max(np.abs(phi - np.log(rho))))
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    assert gaps[-1] / gaps[-2] == pytest.approx(0.1, rel=0.1)


def test_poisson_bad_guess_still_converges(boltzmann):
    x = np.linspace(-5, 5, 201)
    rho = 1 + 0.3 * np.exp(-x * x)
    ref = poisson_solve(rho, 1e-3, boltzmann, (0.0, 0.0), x=x)
    phi, info = poisson_solve(rho, 1e-3, boltzmann, (0.0, 0.0), x=x, guess=np.full(x.size, 30.0),
                              return_info=True)
    assert np.max(np.abs(phi - ref)) <= 1e-9
    assert info.residual <= 1e-10


def test_poisson_rejects(boltzmann):
    with pytest.raises(ClosureRangeError):
        poisson_solve(np.array([1.0, 0.0, 1.0]), 0.1, boltzmann, (0.0, 0.0), h=0.1)
    with pytest.raises(ValueError):
        poisson_solve(np.ones(5), 0.0, boltzmann, (0.0, 0.0), h=0.1)
    with pytest.raises(ValueError):
        poisson_solve(np.ones(5), 0.1, boltzmann, (0.0, 0.0))


# semi-discrete operator ------------------------------------------------------


def test_rhs_constant_state(small_cfg, boltzmann):
    f = constant_field(np.linspace(-1, 1, 41), 1.3, 0.4, 1.7, boltzmann)
    assert np.max(np.abs(ns_poisson_rhs(f, small_cfg))) <= 1e-14


def test_rhs_manufactured_second_order():
    errs = manufactured_errors((41, 81, 161, 321))
    rates = np.log2(errs[:-1] / errs[1:])
    assert np.all(rates[-1] > 1.9), rates
    assert np.all(errs[-1] < 1e-3)


def test_rhs_inviscid_consistency_with_smooth_wave(weak_wave):
    cfg = SolverConfig(force=True)
    sw = SmoothWave(weak_wave, 1.0)
    x = np.linspace(-10, 20, 3001)
    t = 2.0
    fl = sw.fields(t, x, derivs=1)
    zero = np.zeros_like(x)
    f = FluidField(x, fl["rho"], fl["u1"], zero, zero, fl["theta"], fl["phi"], t)
    dU = ns_poisson_rhs(f, cfg, eps=0.0)
    r, u, th = fl["rho"], fl["u1"], fl["theta"]
    E_t = fl["rho_t"] * (th + 0.5 * u * u) + r * (fl["theta_t"] + u * fl["u1_t"])
    exact = np.stack([fl["rho_t"], fl["rho_t"] * u + r * fl["u1_t"], E_t])
    got = dU[[0, 1, 4], 1:-1]
    # the quasineutral wave solves the inviscid system exactly; only truncation remains
    assert np.max(np.abs(got - exact[:, 1:-1])) <= 1e-4
    assert np.max(np.abs(dU[[2, 3]])) == 0.0


# time stepping ---------------------------------------------------------------


def test_constant_state_preserved(boltzmann):
    cfg = SolverConfig(epsilon=0.05, nx=51, L=5.0, force=True)
    f0 = constant_field(np.linspace(-5, 5, 51), 1.1, 0.3, 1.4, boltzmann)
    f = f0
    dt = max_stable_dt(f, cfg)
    for _ in range(1000):
        f = step(f, cfg, dt)
    for name in ("rho", "u1", "u2", "u3", "theta", "phi"):
        assert np.max(np.abs(getattr(f, name) - getattr(f0, name))) <= 1e-12


def test_step_rejects_large_dt(small_cfg):
    f = initial_data_smooth_wave(small_cfg)
    with pytest.raises(ConfigError):
        step(f, small_cfg, 2 * max_stable_dt(f, small_cfg))


def test_conservation_audit(small_cfg):
    f = initial_data_smooth_wave(small_cfg)
    audit = ConservationAudit.start(f)
    dt = max_stable_dt(f, small_cfg)
    for _ in range(50):
        f = step(f, small_cfg, dt, audit)
    res = audit.residuals(f)
    assert res["mass"] <= 1e-12 and res["momentum"] <= 1e-12 and res["energy"] <= 1e-12


def test_time_accuracy(small_cfg):
    cfg = SolverConfig(epsilon=0.05, L=20.0, nx=101, force=True, k=0.5)
    f0 = initial_data_smooth_wave(cfg)
    T = 0.4
    dt_max = max_stable_dt(f0, cfg)

    def advance(n):
        f = f0
        for _ in range(n):
            f = step(f, cfg, T / n)
        return f.rho

    n0 = math.ceil(T / dt_max)
    ref = advance(16 * n0)
    e1 = np.max(np.abs(advance(n0) - ref))
    e2 = np.max(np.abs(advance(2 * n0) - ref))
    assert e2 < e1
    assert math.log2(e1 / e2) >= 2.0


def test_check_positive():
    x = np.linspace(0, 1, 5)
    f = FluidField(x, np.array([1, 1, -1, 1, 1.0]), *(np.zeros(5),) * 3, np.ones(5), np.zeros(5))
    with pytest.raises(StateError, match="density"):
        f.check_positive()
    f = FluidField(x, np.ones(5), *(np.zeros(5),) * 3, np.array([1, 1, 0, 1, 1.0]), np.zeros(5))
    with pytest.raises(StateError, match="temperature"):
        f.check_positive()


# initial data and runs -------------------------------------------------------


def test_initial_data(small_cfg):
    f = initial_data_smooth_wave(small_cfg)
    w = small_cfg.wave()
    assert f.rho[0] == pytest.approx(w.left.rho, abs=1e-12)
    assert f.rho[-1] == pytest.approx(w.right.rho, abs=1e-12)
    assert f.theta[-1] == pytest.approx(w.right.theta, abs=1e-12)
    assert np.all(f.u2 == 0) and np.all(f.u3 == 0)


def test_initial_potential_close_to_quasineutral():
    gaps = []
    for eps in (0.05, 0.0125):
        cfg = SolverConfig(epsilon=eps, L=20.0, nx=2001, force=True, k=0.5, a=0.5, b=0.75)
        f = initial_data_smooth_wave(cfg)
        phi_bar = SmoothWave(cfg.wave(), cfg.delta).eval(0.0, f.x)[3]
        gaps.append(np.max(np.abs(f.phi - phi_bar)) / cfg.lam2)
    # gap / lambda^2 stays bounded (it grows only through the steeper profile)
    assert max(gaps) < 10 * min(gaps)


def test_run_determinism(tmp_path, small_cfg):
    t1 = run(small_cfg, out_dir=tmp_path / "a")
    t2 = run(small_cfg, out_dir=tmp_path / "b")
    assert t1.completed and t2.completed
    frames = sorted(p.name for p in (tmp_path / "a").glob("frame_*.csv"))
    assert frames == ["frame_00000.csv", "frame_00001.csv", "frame_00002.csv"]
    for name in frames:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert t1.times == [0.0, 0.5, 1.0]
    assert t1.manifest["audit.mass"] <= 1e-12
    back = read_snapshot(tmp_path / "a" / frames[-1])
    assert back.t == 1.0
    assert np.array_equal(back.rho, t1.snapshots[-1].rho)


def test_snapshot_round_trip(tmp_path, boltzmann):
    f = constant_field(np.linspace(-1, 1, 7), 1.1, 0.3, 1.4, boltzmann, t=0.1)
    f.rho = f.rho + np.linspace(0, 1e-9, 7)
    write_snapshot(tmp_path / "s.csv", f)
    g = read_snapshot(tmp_path / "s.csv")
    for name in ("x", "rho", "u1", "u2", "u3", "theta", "phi"):
        assert np.array_equal(getattr(f, name), getattr(g, name))


def test_run_reports_failure(boltzmann):
    cfg = SolverConfig(epsilon=0.05, nx=41, L=2.0, t_end=0.5, force=True)
    x = np.linspace(-2, 2, 41)
    f = constant_field(x, 1.0, 0.0, 1.5, boltzmann)
    f.rho = np.where(np.abs(x) < 0.3, 1e-3, 1.0)
    f.u1 = 3.0 * np.sign(x)
    f.phi = poisson_solve(f.rho, cfg.lam2, boltzmann, (0.0, 0.0), x=x)
    traj = run(cfg, initial=f)
    assert not traj.completed
    assert traj.manifest["run.error"]


def test_scale_transform(small_cfg):
    t, x = scale_transform((2.0, np.array([1.0, -4.0])), 0.01, 0.5)
    assert t == pytest.approx(20.0) and np.allclose(x, [10.0, -40.0])
    t2, x2 = scale_transform((t, x), 0.01, 0.5, "to_physical")
    assert t2 == pytest.approx(2.0) and np.allclose(x2, [1.0, -4.0])
    f = initial_data_smooth_wave(small_cfg)
    g = scale_transform(f, 0.01, 0.5, b=0.75)
    assert np.allclose(g.x, 10 * f.x) and g.meta["scale.variables"] == "scaled"
    assert g.meta["scale.knudsen"] == pytest.approx(0.1)
    assert np.array_equal(g.rho, f.rho)
    with pytest.raises(ValueError):
        scale_transform((1.0, 1.0), 0.1, 0.5, "sideways")


# configuration ---------------------------------------------------------------


def test_config_rejects_inadmissible_pair():
    with pytest.raises(ConfigError, match="admissible"):
        SolverConfig(a=0.1, b=0.1)


def test_config_delta_guard():
    with pytest.raises(ConfigError, match="delta0"):
        SolverConfig(epsilon=0.05, k=0.2, delta0=0.5)
    SolverConfig(epsilon=0.05, k=0.2, delta0=0.5, force=True)


def test_config_length_guard():
    cfg = SolverConfig(epsilon=0.05, k=0.2, delta0=2.5, L=100.0)
    with pytest.raises(ConfigError, match="too small"):
        SolverConfig(epsilon=0.05, k=0.2, delta0=2.5, L=10.0)
    assert cfg.required_L() < 100.0


def test_config_debye_warning():
    with pytest.warns(UserWarning, match="not small"):
        SolverConfig(epsilon=0.05, a=1.0, b=0.6, k=0.2, delta0=5.0, L=200.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SolverConfig(epsilon=0.05, k=0.2, delta0=2.5)


@pytest.mark.parametrize("kw", [dict(epsilon=0.0), dict(epsilon=1.0), dict(nx=8), dict(cfl=1.5), dict(L=-1.0),
                                dict(rho_plus=0.5)])
def test_config_structural_checks(kw):
    with pytest.raises(ConfigError):
        SolverConfig(force=True, **kw)


def test_transport_law():
    assert np.allclose(TransportLaw("power", 2.0, 3.0, 0.5).mu(np.array([4.0])), 4.0)
    assert np.allclose(TransportLaw("constant", 2.0, 3.0).kappa(np.array([4.0, 9.0])), 3.0)
    with pytest.raises(ConfigError):
        TransportLaw("sutherland")
    with pytest.raises(ConfigError):
        TransportLaw("power", mu0=0.0)
