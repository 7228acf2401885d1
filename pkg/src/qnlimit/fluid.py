"""Navier-Stokes-Poisson solver in one space dimension.

Unknowns are the conservative variables

    U = (rho, rho u1, rho u2, rho u3, rho (theta + |u|^2 / 2))

on a uniform node grid over [-L, L]. Interior nodes are advanced with a
conservative central scheme: convective fluxes are averaged to the faces,
viscous and heat fluxes use face-averaged coefficients and one-cell
differences, and the electric force enters as a nodal source. The potential
solves the screened Poisson equation

    -lambda^2 phi_xx = rho - rho_e(phi),    lambda = eps^b,

by damped Newton after every Runge-Kutta stage. The two end nodes carry the
far-field states as Dirichlet data.
"""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .closures import ElectronClosure
from .errors import ClosureDomainError, ConfigError, ConvergenceError, StateError
from .euler import EulerState, RarefactionWave, lam
from .params import validate_S
from .smoothwave import SmoothWave, delta_from_epsilon

FIELDS = ("rho", "u1", "u2", "u3", "theta", "phi")
RK4_WEIGHTS = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)


# configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class TransportLaw:
    law: str = "power"
    mu0: float = 1.0
    kappa0: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.law not in ("power", "constant"):
            raise ConfigError(f"transport law must be 'power' or 'constant', got {self.law!r}")
        if not (self.mu0 > 0 and self.kappa0 > 0):
            raise ConfigError("transport coefficients mu0 and kappa0 must be positive")

    def mu(self, theta):
        if self.law == "constant":
            return np.full_like(np.asarray(theta, float), self.mu0)
        return self.mu0 * np.asarray(theta, float) ** self.s

    def kappa(self, theta):
        if self.law == "constant":
            return np.full_like(np.asarray(theta, float), self.kappa0)
        return self.kappa0 * np.asarray(theta, float) ** self.s


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 0.05
    a: float = 2.0 / 3.0
    b: float = 2.0 / 3.0
    k: float = 0.2
    L: float = 100.0
    nx: int = 4000
    cfl: float = 0.5
    t_end: float = 20.0
    snapshot_interval: float = 1.0
    transport: TransportLaw = field(default_factory=TransportLaw)
    closure: ElectronClosure = field(default_factory=ElectronClosure)
    left: EulerState = field(default_factory=lambda: EulerState(1.0, 0.0, 1.5))
    rho_plus: float = 1.1
    delta0: float = 0.5
    margin: float = 5.0
    force: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def h(self):
        return 2.0 * self.L / (self.nx - 1)

    @property
    def lam2(self):
        return self.epsilon ** (2.0 * self.b)

    @property
    def delta(self):
        return delta_from_epsilon(self.epsilon, self.a, self.k)

    def wave(self):
        return RarefactionWave.from_left(self.left, self.rho_plus, self.closure)

    def required_L(self):
        """Half-width that keeps the far-field Dirichlet data exact up to t_end."""
        w = self.wave()
        speed = max(abs(lam(i, s, self.closure)) for i in (1, 3) for s in (w.left, w.right))
        return speed * self.t_end + 20.0 * self.delta + self.margin

    def validate(self):
        """Structural checks always; admissibility checks unless ``force``."""
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon={self.epsilon} must lie in (0, 1)")
        if not 0.0 < self.k < 1.0:
            raise ConfigError(f"k={self.k} must lie in (0, 1)")
        if int(self.nx) != self.nx or self.nx < 16:
            raise ConfigError("nx must be an integer >= 16")
        if not 0.0 < self.cfl < 1.0:
            raise ConfigError(f"cfl={self.cfl} must lie in (0, 1)")
        if not (self.L > 0 and self.t_end > 0 and self.snapshot_interval > 0):
            raise ConfigError("L, t_end and snapshot_interval must be positive")
        if self.rho_plus < self.left.rho:
            raise ConfigError("rho_plus must be at least the left density for a 3-rarefaction")
        if self.force:
            return
        ok, why = validate_S(self.a, self.b)
        if not ok:
            raise ConfigError(f"(a, b) = ({self.a:g}, {self.b:g}) is not admissible: {why}")
        if not 0.0 < self.delta < self.delta0:
            raise ConfigError(
                f"delta = eps^(3/5 - 2a/5) / k = {self.delta:g} outside (0, delta0={self.delta0:g}); "
                "raise delta0 or pass --force"
            )
        need = self.required_L()
        if self.L < need:
            raise ConfigError(f"L={self.L:g} too small; need L >= {need:.4g} for t_end={self.t_end:g}")
        if self.epsilon ** (2.0 * self.b - 1.0) > 0.5:
            warnings.warn(
                f"lambda^2 = {self.lam2:.3g} is not small compared with epsilon = {self.epsilon:g}",
                stacklevel=3,
            )

    def describe(self):
        out = {
            "physics.epsilon": self.epsilon,
            "physics.a": self.a,
            "physics.b": self.b,
            "physics.k": self.k,
            "physics.delta": self.delta,
            "physics.delta0": self.delta0,
            "physics.lambda2": self.lam2,
            "physics.rho_minus": self.left.rho,
            "physics.u1_minus": self.left.u1,
            "physics.theta_minus": self.left.theta,
            "physics.rho_plus": self.rho_plus,
            "grid.L": self.L,
            "grid.nx": self.nx,
            "grid.h": self.h,
            "time.cfl": self.cfl,
            "time.t_end": self.t_end,
            "output.snapshot_interval": self.snapshot_interval,
            "transport.law": self.transport.law,
            "transport.mu0": self.transport.mu0,
            "transport.kappa0": self.transport.kappa0,
            "transport.s": self.transport.s,
            "force": self.force,
        }
        out.update(self.closure.describe())
        return out


# fields ----------------------------------------------------------------------


@dataclass
class FluidField:
    x: np.ndarray
    rho: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    def conservative(self):
        r = self.rho
        E = r * (self.theta + 0.5 * (self.u1**2 + self.u2**2 + self.u3**2))
        return np.stack([r, r * self.u1, r * self.u2, r * self.u3, E])

    @classmethod
    def from_conservative(cls, x, U, phi, t, meta=None):
        r = U[0]
        u1, u2, u3 = U[1] / r, U[2] / r, U[3] / r
        theta = U[4] / r - 0.5 * (u1**2 + u2**2 + u3**2)
        return cls(x, r, u1, u2, u3, theta, phi, t, dict(meta or {}))

    def copy(self):
        return replace(self, **{n: getattr(self, n).copy() for n in ("x",) + FIELDS}, meta=dict(self.meta))

    def check_positive(self):
        if not np.all(self.rho > 0):
            j = int(np.argmin(self.rho))
            raise StateError(f"density lost positivity at x={self.x[j]:.6g}, t={self.t:.6g} (rho={self.rho[j]:.3g})")
        if not np.all(self.theta > 0):
            j = int(np.argmin(self.theta))
            raise StateError(
                f"temperature lost positivity at x={self.x[j]:.6g}, t={self.t:.6g} (theta={self.theta[j]:.3g})"
            )


def constant_field(x, rho, u1, theta, closure: ElectronClosure, t=0.0):
    x = np.asarray(x, float)
    one = np.ones_like(x)
    phi = float(closure.rho_e_inv(rho))
    return FluidField(x, rho * one, u1 * one, 0 * one, 0 * one, theta * one, phi * one, t)


# Poisson ---------------------------------------------------------------------


@dataclass
class PoissonInfo:
    iterations: int
    residual: float
    continuation: bool


def _poisson_residual(phi, rho, lam2, h, closure):
    inner = -lam2 * (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / h**2
    return inner - rho[1:-1] + np.asarray(closure.rho_e(phi[1:-1]))


def _newton(phi, rho, lam2, h, closure, tol, max_iter=50, max_halvings=30):
    """Damped Newton; returns (phi, residual, iterations, converged)."""
    scale = max(float(np.max(np.abs(rho))), 1.0)
    n = phi.size - 2
    c = lam2 / h**2
    ab = np.zeros((3, n))
    ab[0, 1:] = -c
    ab[2, :-1] = -c
    G = _poisson_residual(phi, rho, lam2, h, closure)
    res = float(np.max(np.abs(G))) / scale if n else 0.0
    lo = closure.phi_min
    for it in range(max_iter):
        if res < tol:
            return phi, res, it, True
        ab[1] = 2.0 * c + np.asarray(closure.drho_e(phi[1:-1]))
        d = solve_banded((1, 1), ab, -G, check_finite=False)
        step = 1.0
        for _ in range(max_halvings + 1):
            trial = phi.copy()
            trial[1:-1] += step * d
            if np.all(trial[1:-1] > lo):
                Gt = _poisson_residual(trial, rho, lam2, h, closure)
                rt = float(np.max(np.abs(Gt))) / scale
                if rt < res or rt < tol:
                    break
            step *= 0.5
        else:
            if not np.all(trial[1:-1] > lo):
                raise ClosureDomainError(
                    f"Newton iterate left the admissible potential interval (phi > {lo:g}) after damping"
                )
            return phi, res, it + 1, False
        phi, G, res = trial, Gt, rt
    return phi, res, max_iter, res < tol


def poisson_solve(rho, lam2, closure: ElectronClosure, phi_bc, h=None, x=None, guess=None, tol=1e-10,
                  return_info=False):
    """Solve -lambda^2 phi'' = rho - rho_e(phi) with Dirichlet data ``phi_bc``.

    Either the grid spacing ``h`` or the node array ``x`` must be given. The
    default initial guess is the quasineutral potential rho_e^{-1}(rho). When
    Newton stalls, the problem is first solved with 10 lambda and lambda is
    then halved back down, each solve seeding the next.
    """
    rho = np.asarray(rho, float)
    if h is None:
        if x is None:
            raise ValueError("poisson_solve needs h or x")
        h = float(x[1] - x[0])
    if not lam2 > 0:
        raise ValueError("lambda^2 must be positive")
    phi = np.array(closure.rho_e_inv(rho) if guess is None else guess, dtype=float, copy=True)
    phi[0], phi[-1] = phi_bc
    phi, res, its, ok = _newton(phi, rho, lam2, h, closure, tol)
    used_cont = False
    if not ok:
        used_cont = True
        lam = math.sqrt(lam2)
        ladder = [10.0 * lam]
        while ladder[-1] / 2.0 > lam:
            ladder.append(ladder[-1] / 2.0)
        ladder.append(lam)
        psi = np.array(closure.rho_e_inv(rho), dtype=float)
        psi[0], psi[-1] = phi_bc
        for lc in ladder:
            psi, res, n_it, ok = _newton(psi, rho, lc * lc, h, closure, tol)
            its += n_it
            if not ok:
                raise ConvergenceError(
                    f"Poisson Newton failed at continuation lambda={lc:.3g} (relative residual {res:.3g})",
                    residual=res,
                )
        phi = psi
    if return_info:
        return phi, PoissonInfo(its, res, used_cont)
    return phi


# right-hand side -------------------------------------------------------------


def _face_avg(f):
    return 0.5 * (f[1:] + f[:-1])


def face_fluxes(f: FluidField, cfg: SolverConfig, eps=None):
    """Total face fluxes F_{j+1/2} (convective minus diffusive), shape (5, nx-1)."""
    eps = cfg.epsilon if eps is None else eps
    h = f.h
    r, u1, u2, u3, th = f.rho, f.u1, f.u2, f.u3, f.theta
    P = (2.0 / 3.0) * r * th
    E = r * (th + 0.5 * (u1**2 + u2**2 + u3**2))
    conv = np.stack([r * u1, r * u1 * u1 + P, r * u1 * u2, r * u1 * u3, u1 * (E + P)])
    F = 0.5 * (conv[:, 1:] + conv[:, :-1])
    if eps:
        th_f = _face_avg(th)
        mu = cfg.transport.mu(th_f)
        ka = cfg.transport.kappa(th_f)
        du1, du2, du3, dth = (np.diff(q) / h for q in (u1, u2, u3, th))
        F[1] -= eps * (4.0 / 3.0) * mu * du1
        F[2] -= eps * mu * du2
        F[3] -= eps * mu * du3
        F[4] -= eps * (
            ka * dth
            + (4.0 / 3.0) * mu * _face_avg(u1) * du1
            + mu * _face_avg(u2) * du2
            + mu * _face_avg(u3) * du3
        )
    return F


def ns_poisson_rhs(f: FluidField, cfg: SolverConfig, eps=None, details=False):
    """Time derivatives of the conservative variables, shape (5, nx).

    The end nodes carry Dirichlet data and get zero. ``f.phi`` is used as
    given (it should solve the Poisson equation for ``f.rho``). ``eps``
    overrides the Knudsen number, e.g. ``eps=0`` for the inviscid operator.
    With ``details=True`` also returns the boundary face fluxes and the
    integral of the electric work rho u1 phi_x over interior nodes.
    """
    f.check_positive()
    h = f.h
    F = face_fluxes(f, cfg, eps)
    phi_x = (f.phi[2:] - f.phi[:-2]) / (2.0 * h)
    r_in, u_in = f.rho[1:-1], f.u1[1:-1]
    dU = np.zeros((5, f.x.size))
    dU[:, 1:-1] = -(F[:, 1:] - F[:, :-1]) / h
    dU[1, 1:-1] -= r_in * phi_x
    dU[4, 1:-1] -= r_in * u_in * phi_x
    if not details:
        return dU
    work = h * float(np.sum(r_in * u_in * phi_x))
    force = h * float(np.sum(r_in * phi_x))
    return dU, {"flux_left": F[:, 0].copy(), "flux_right": F[:, -1].copy(), "work": work, "force": force}


# time stepping ---------------------------------------------------------------


def max_stable_dt(f: FluidField, cfg: SolverConfig):
    """min of the CFL and viscous limits."""
    c2 = (10.0 / 9.0) * f.theta + np.asarray(cfg.closure.dP_phi_drho(f.rho))
    speed = float(np.max(np.abs(f.u1) + np.sqrt(c2)))
    dt = cfg.cfl * f.h / speed
    diff = max(
        float(np.max((4.0 / 3.0) * cfg.transport.mu(f.theta) / f.rho)),
        float(np.max(cfg.transport.kappa(f.theta) / f.rho)),
    )
    dt_visc = f.h**2 / (2.0 * cfg.epsilon * diff)
    return min(dt, dt_visc)


@dataclass
class ConservationAudit:
    """Running balance of interior totals against boundary fluxes and electric sources."""

    initial: np.ndarray
    boundary_in: np.ndarray = field(default_factory=lambda: np.zeros(5))
    work: float = 0.0
    force: float = 0.0
    elapsed: float = 0.0

    @classmethod
    def start(cls, f: FluidField):
        return cls(f.h * np.sum(f.conservative()[:, 1:-1], axis=1))

    def record(self, wt, info):
        self.boundary_in += wt * (info["flux_left"] - info["flux_right"])
        self.work += wt * info["work"]
        self.force += wt * info["force"]

    def residuals(self, f: FluidField):
        """Drift of interior totals not explained by fluxes and sources."""
        now = f.h * np.sum(f.conservative()[:, 1:-1], axis=1)
        expected = self.initial + self.boundary_in
        expected[1] -= self.force
        expected[4] -= self.work
        scale = np.maximum(np.abs(self.initial), 1.0)
        return {
            "mass": float(abs(now[0] - expected[0]) / scale[0]),
            "momentum": float(abs(now[1] - expected[1]) / scale[1]),
            "energy": float(abs(now[4] - expected[4]) / scale[4]),
            "electric_work": self.work,
        }


def _solve_phi(f: FluidField, cfg: SolverConfig, guess):
    bc = (float(cfg.closure.rho_e_inv(f.rho[0])), float(cfg.closure.rho_e_inv(f.rho[-1])))
    return poisson_solve(f.rho, cfg.lam2, cfg.closure, bc, h=f.h, guess=guess)


def step(f: FluidField, cfg: SolverConfig, dt, audit: ConservationAudit | None = None):
    """One classical RK4 step with a Poisson solve at every stage."""
    limit = max_stable_dt(f, cfg)
    if dt > limit * (1.0 + 1e-12):
        raise ConfigError(f"dt={dt:.4g} exceeds the stability limit {limit:.4g}")
    U0 = f.conservative()
    stages = []
    g = f
    for i in range(4):
        if i > 0:
            c = 0.5 if i < 3 else 1.0
            U = U0 + c * dt * stages[-1]
            g = FluidField.from_conservative(f.x, U, g.phi, f.t + c * dt, f.meta)
            g.check_positive()
            g.phi = _solve_phi(g, cfg, g.phi)
        k, info = ns_poisson_rhs(g, cfg, details=True)
        stages.append(k)
        if audit is not None:
            audit.record(RK4_WEIGHTS[i] * dt, info)
    U = U0 + dt * sum(w * k for w, k in zip(RK4_WEIGHTS, stages))
    U[:, 0], U[:, -1] = U0[:, 0], U0[:, -1]
    out = FluidField.from_conservative(f.x, U, g.phi, f.t + dt, f.meta)
    out.check_positive()
    out.phi = _solve_phi(out, cfg, out.phi)
    if audit is not None:
        audit.elapsed += dt
    return out


# initial data and runs -------------------------------------------------------


def grid_for(cfg: SolverConfig):
    return np.linspace(-cfg.L, cfg.L, int(cfg.nx))


def initial_data_smooth_wave(cfg: SolverConfig, x=None):
    """Well-prepared data from the smooth wave at t = 0, with a discrete Poisson potential."""
    x = grid_for(cfg) if x is None else np.asarray(x, float)
    sw = SmoothWave(cfg.wave(), cfg.delta)
    rho, u1, th, phi_bar = sw.eval(0.0, x)
    zero = np.zeros_like(x)
    f = FluidField(x, rho, u1, zero.copy(), zero.copy(), th, phi_bar, 0.0)
    f.phi = _solve_phi(f, cfg, phi_bar)
    return f


@dataclass
class Trajectory:
    times: list
    snapshots: list
    manifest: dict
    audit: ConservationAudit
    completed: bool = True


def _fmt(v):
    return repr(float(v))


def write_snapshot(path, f: FluidField):
    cols = [np.full_like(f.x, f.t), f.x, f.rho, f.u1, f.u2, f.u3, f.theta, f.phi]
    with open(path, "w", newline="") as fh:
        fh.write("t,x,rho,u1,u2,u3,theta,phi\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_snapshot(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = float(data[0, 0]) if data.size else 0.0
    return FluidField(data[:, 1], *(data[:, i] for i in range(2, 8)), t=t)


def write_manifest(path, entries: dict):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        for key, val in entries.items():
            w.writerow([key, _fmt(val) if isinstance(val, float) else val])


def run(cfg: SolverConfig, out_dir=None, observe=None, observe_interval=None, initial=None, keep=True):
    """Integrate from well-prepared data to ``t_end``.

    Snapshots are taken every ``snapshot_interval`` (written as CSV frames
    when ``out_dir`` is given). ``observe(field)`` is called every
    ``observe_interval`` (default: at snapshots). Step sizes are chosen by
    the stability limits and shortened to land exactly on output times, so
    the run is deterministic for a given configuration.
    """
    t_wall = time.perf_counter()
    f = initial_data_smooth_wave(cfg) if initial is None else initial
    audit = ConservationAudit.start(f)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    n_snap = int(math.floor(cfg.t_end / cfg.snapshot_interval + 1e-9))
    snap_times = [i * cfg.snapshot_interval for i in range(n_snap + 1)]
    if snap_times[-1] < cfg.t_end - 1e-12:
        snap_times.append(cfg.t_end)
    obs_times = []
    if observe is not None and observe_interval:
        n_obs = int(math.floor(cfg.t_end / observe_interval + 1e-9))
        obs_times = [i * observe_interval for i in range(n_obs + 1)]
    marks = sorted(set(round(t, 12) for t in snap_times + obs_times))
    snap_set = set(round(t, 12) for t in snap_times)
    obs_set = set(round(t, 12) for t in obs_times) if obs_times else snap_set
    times, snaps = [], []
    steps = 0
    error = None
    frame = 0

    def emit(field_):
        nonlocal frame
        key = round(field_.t, 12)
        if key in snap_set:
            times.append(field_.t)
            if keep:
                snaps.append(field_)
            if out_dir is not None:
                write_snapshot(os.path.join(out_dir, f"frame_{frame:05d}.csv"), field_)
            frame += 1
        if observe is not None and key in obs_set:
            observe(field_)

    try:
        emit(f)
        for target in marks[1:]:
            while f.t < target - 1e-12:
                dt = max_stable_dt(f, cfg)
                remaining = target - f.t
                n = math.ceil(remaining / dt - 1e-12)
                dt = remaining / n
                f = step(f, cfg, dt, audit)
                steps += 1
            f.t = target
            emit(f)
    except (StateError, ConvergenceError, ClosureDomainError) as exc:
        error = exc
    manifest = dict(cfg.describe())
    manifest.update(
        {
            "run.completed": error is None,
            "run.error": "" if error is None else f"{type(error).__name__}: {error}",
            "run.t_reached": float(f.t),
            "run.steps": steps,
            "run.frames": frame,
        }
    )
    for name, val in audit.residuals(f).items():
        manifest[f"audit.{name}"] = val
    manifest["run.wall_time_s"] = time.perf_counter() - t_wall
    if out_dir is not None:
        write_manifest(os.path.join(out_dir, "manifest.txt"), manifest)
    traj = Trajectory(times, snaps, manifest, audit, error is None)
    if error is not None:
        traj.error = error
    return traj


# scaling ---------------------------------------------------------------------


def scaling_metadata(eps, a, b=None):
    out = {"scale.eps": eps, "scale.a": a, "scale.knudsen": eps ** (1.0 - a)}
    if b is not None:
        out["scale.debye_coeff"] = eps ** (2.0 * b - 2.0 * a)
    return out


def scale_transform(obj, eps, a, direction="to_scaled", b=None):
    """Map (t, x) to (tau, y) = (t, x) / eps^a or back.

    ``obj`` is either a ``FluidField`` (coordinates and time are mapped, the
    field values are untouched and the scaling metadata is recorded) or a
    ``(t, x)`` pair.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if direction == "to_scaled":
        fac = eps ** (-a)
    elif direction == "to_physical":
        fac = eps**a
    else:
        raise ValueError("direction must be 'to_scaled' or 'to_physical'")
    if isinstance(obj, FluidField):
        out = obj.copy()
        out.x = obj.x * fac
        out.t = obj.t * fac
        out.meta.update(scaling_metadata(eps, a, b))
        out.meta["scale.variables"] = "scaled" if direction == "to_scaled" else "physical"
        return out
    t, x = obj
    return t * fac, np.asarray(x) * fac
