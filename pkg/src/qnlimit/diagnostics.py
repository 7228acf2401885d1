"""Diagnostics computed from fields and waves.

Relative entropy pair, the two-variable convexity function and its Hessian,
distances to the exact wave, the macroscopic parts of the energy and
dissipation functionals, decay-rate fits for the smooth wave, and the
power-law rate fit used by the sweep harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, StateError
from .euler import RarefactionWave
from .kinetic import q3_from_fields
from .smoothwave import SmoothWave


def Psi(s):
    s = np.asarray(s, float)
    return s - np.log(s) - 1.0


# entropy pair ----------------------------------------------------------------


def _components(obj):
    if isinstance(obj, dict):
        get = obj.get
    else:
        def get(name, default=None):
            return getattr(obj, name, default)
    rho, theta, u1 = get("rho"), get("theta"), get("u1")
    zero = np.zeros_like(np.asarray(rho, float))
    u2 = get("u2", None)
    u3 = get("u3", None)
    return (np.asarray(rho, float), np.asarray(u1, float),
            zero if u2 is None else np.asarray(u2, float),
            zero if u3 is None else np.asarray(u3, float),
            np.asarray(theta, float))


def entropy_pair(fld, bar):
    """Relative entropy eta and flux q of ``fld`` about the background ``bar``.

    ``bar`` may be a SmoothWave (evaluated at the field's time and nodes), a
    FluidField, or a dict with keys rho, u1, theta (u2, u3 optional).
    """
    if isinstance(bar, SmoothWave):
        bar = bar.fields(fld.t, fld.x)
    r, u1, u2, u3, th = _components(fld)
    rb, ub1, ub2, ub3, thb = _components(bar)
    if np.any(r <= 0) or np.any(th <= 0) or np.any(rb <= 0) or np.any(thb <= 0):
        raise StateError("entropy pair needs positive densities and temperatures")
    du2 = (u1 - ub1) ** 2 + (u2 - ub2) ** 2 + (u3 - ub3) ** 2
    eta = r * thb * Psi(rb / r) + 1.5 * r * thb * Psi(th / thb) + 0.75 * r * du2
    q = u1 * eta + (u1 - ub1) * (r * th - rb * thb)
    return eta, q


# convexity function -----------------------------------------------------------


def appendix_f(x1, x2):
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    if np.any(x1 <= 0) or np.any(x2 <= 0):
        raise InputError("appendix_f needs positive arguments")
    L = (2.0 / 3.0) * np.log(x1) + np.log(x2)
    out = (2.0 / 3.0) * Psi(x1) + Psi(x2) - 0.2 * L * L
    return float(out) if out.ndim == 0 else out


HESSIAN_EXACT = {"f11": 22.0 / 45.0, "f12": -4.0 / 15.0, "f22": 3.0 / 5.0, "det": 2.0 / 9.0}


@dataclass
class HessianReport:
    value: float
    gradient: tuple
    hessian: dict
    errors: dict
    c_lower: float
    c_box: tuple
    tol: float

    @property
    def passed(self):
        return all(e <= self.tol for e in self.errors.values()) and abs(self.value) < 1e-14 and self.c_lower > 0


def _fourth_order_hessian(f, x, y, h):
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    offs = np.array([-2, -1, 0, 1, 2]) * h
    fxx = sum(ci * f(x + o, y) for ci, o in zip(c, offs))
    fyy = sum(ci * f(x, y + o) for ci, o in zip(c, offs))
    d = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    fxy = sum(di * dj * f(x + oi, y + oj) for di, oi in zip(d, offs) for dj, oj in zip(d, offs) if di and dj)
    gx = sum(di * f(x + o, y) for di, o in zip(d, offs))
    gy = sum(di * f(x, y + o) for di, o in zip(d, offs))
    return fxx, fxy, fyy, gx, gy


def appendix_hessian_check(h=1e-3, box=(0.9, 1.1), n=200, tol=1e-6):
    """Hessian of appendix_f at (1, 1) by fourth-order differences, plus a lower constant.

    ``c_lower`` is the minimum of f / |x - (1, 1)|^2 over an ``n`` x ``n``
    grid on ``box``^2 (the centre excluded).
    """
    f11, f12, f22, g1, g2 = _fourth_order_hessian(appendix_f, 1.0, 1.0, h)
    hess = {"f11": f11, "f12": f12, "f22": f22, "det": f11 * f22 - f12 * f12}
    errors = {k: abs(hess[k] - HESSIAN_EXACT[k]) for k in hess}
    s = np.linspace(box[0], box[1], n)
    X1, X2 = np.meshgrid(s, s, indexing="ij")
    r2 = (X1 - 1.0) ** 2 + (X2 - 1.0) ** 2
    mask = r2 > 1e-14
    ratio = appendix_f(X1[mask], X2[mask]) / r2[mask]
    return HessianReport(appendix_f(1.0, 1.0), (g1, g2), hess, errors, float(np.min(ratio)), tuple(box), tol)


# distance to the exact wave ---------------------------------------------------


def sup_distance_to_wave(fld, wave: RarefactionWave, t=None, x=None):
    """Sup-norm gaps to the exact wave at time t for rho, u1, theta and phi.

    Also returns ``fluid`` (the largest of the three fluid gaps) and
    ``total`` = fluid + phi, the quantity measured by the sweep.
    """
    t = fld.t if t is None else t
    if not t > 0:
        raise InputError("distance to the self-similar wave needs t > 0")
    x = fld.x if x is None else np.asarray(x, float)
    rho, u1, th, phi = wave.eval(x / t)
    out = {
        "rho": float(np.max(np.abs(fld.rho - rho))),
        "u1": float(np.max(np.abs(fld.u1 - u1))),
        "theta": float(np.max(np.abs(fld.theta - th))),
        "phi": float(np.max(np.abs(fld.phi - phi))),
    }
    out["fluid"] = max(out["rho"], out["u1"], out["theta"])
    out["total"] = out["fluid"] + out["phi"]
    return out


# energy functionals -----------------------------------------------------------


@dataclass
class EnergyReport:
    tau: float
    fluid_E: float
    fluid_D: float
    q3: float = 0.0
    parts: dict = field(default_factory=dict)


def _dy(g, hy, order):
    if order == 0:
        return g
    if order == 1:
        return np.gradient(g, hy, edge_order=2)
    if order == 2:
        out = np.zeros_like(g)
        out[1:-1] = (g[2:] - 2 * g[1:-1] + g[:-2]) / hy**2
        return out
    out = np.zeros_like(g)
    out[2:-2] = (-g[:-4] + 2 * g[1:-3] - 2 * g[3:-1] + g[4:]) / (2 * hy**3)
    return out


def energy_terms(fld, sw: SmoothWave, eps, a, b):
    """Macroscopic energy and dissipation of one snapshot about the smooth wave.

    Perturbations are measured in the scaled variables (tau, y) =
    (t, x) / eps^a with y-derivatives only.
    """
    s = eps**a
    hy = fld.h / s
    bar = sw.fields(fld.t, fld.x)
    tilde = [fld.rho - bar["rho"], fld.u1 - bar["u1"], fld.u2, fld.u3, fld.theta - bar["theta"]]
    phi_t = fld.phi - bar["phi"]

    def sq(g):
        return hy * float(np.sum(g * g))

    fl = [sum(sq(_dy(g, hy, k)) for g in tilde) for k in range(3)]
    ph = [sq(_dy(phi_t, hy, k)) for k in range(4)]
    w_d = eps ** (2.0 * b - 2.0 * a)
    w_2 = eps ** (2.0 - 2.0 * a)
    potential = ph[0] + ph[1] + w_d * (ph[1] + ph[2]) + w_2 * (ph[2] + w_d * ph[3])
    E = fl[0] + fl[1] + w_2 * fl[2] + potential
    D = eps ** (1.0 - a) * (fl[1] + fl[2] + ph[1] + ph[2] + w_d * (ph[2] + ph[3]))
    return EnergyReport(fld.t / s, E, D, 0.0, {"fluid": fl, "phi": ph, "potential": potential})


def fluid_energy_report(history, sw: SmoothWave, eps, a, b):
    """EnergyReport per snapshot of ``history`` (a list of FluidField)."""
    if len(history) < 3:
        raise InputError("energy report needs at least 3 snapshots")
    reports = [energy_terms(f, sw, eps, a, b) for f in history]
    t = np.array([f.t for f in history])
    phi = np.stack([f.phi for f in history])
    _, q3 = q3_from_fields(phi, t, history[0].x, eps, a)
    for r, q in zip(reports, q3):
        r.q3 = float(q)
    return reports


# rate fitting -----------------------------------------------------------------


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float
    n: int
    target: float | None = None

    def summary(self):
        tgt = "" if self.target is None else f", target {self.target:.6g}"
        return f"slope {self.slope:.6g} (residual {self.residual:.3g}, {self.n} points{tgt})"


def rate_fit(points, a=None):
    """Least squares of log(error / |ln eps|) against log eps.

    ``residual`` is the root-mean-square of the log residuals; ``target`` is
    3/5 - 2a/5 when ``a`` is given.
    """
    pts = [(float(e), float(err)) for e, err in points]
    if len(pts) < 4:
        raise InputError(f"rate fit needs at least 4 points, got {len(pts)}")
    eps = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    if np.any(err <= 0):
        raise InputError("errors must be positive for a log fit")
    if np.any((eps <= 0) | (eps >= 1)):
        raise InputError("epsilon values must lie in (0, 1)")
    X = np.log(eps)
    Y = np.log(err / np.abs(np.log(eps)))
    A = np.vstack([X, np.ones_like(X)]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    res = Y - A @ coef
    target = None if a is None else 0.6 - 0.4 * float(a)
    return RateFit(float(coef[0]), float(coef[1]), float(math.sqrt(np.mean(res**2))), len(pts), target)


# smooth-wave decay -------------------------------------------------------------


def _wave_window(sw: SmoothWave, t, pad=40.0, per_delta=40):
    d = sw.delta
    lo = sw.omega_minus * t - pad * d
    hi = sw.omega_plus * t + pad * d
    n = max(2001, int(math.ceil((hi - lo) / d * per_delta)) + 1)
    return np.linspace(lo, hi, n)


def derivative_norm(sw: SmoothWave, t, p):
    """Largest L^p norm over (rho, u1, theta, phi) of the x-derivative at time t."""
    x = _wave_window(sw, t)
    h = x[1] - x[0]
    f = sw.fields(t, x, derivs=1)
    D = np.abs(np.stack([f["rho_x"], f["u1_x"], f["theta_x"], f["phi_x"]]))
    if p == math.inf:
        return float(np.max(D))
    return float(np.max((h * np.sum(D**p, axis=1)) ** (1.0 / p)))


def lemma71_decay_check(sw: SmoothWave, p, t_range=None, n_times=12):
    """Fitted exponent of the L^p norm of the x-derivative against (delta + t).

    The default time range is [10 delta, 1000 delta]. Returns
    ``(exponent, expected)`` with expected = -1 + 1/p.
    """
    d = sw.delta
    t0, t1 = (10.0 * d, 1000.0 * d) if t_range is None else t_range
    if t1 / t0 < 99.0:
        raise InputError("time range must span at least two decades")
    ts = np.geomspace(t0, t1, n_times)
    norms = [derivative_norm(sw, t, p) for t in ts]
    slope = float(np.polyfit(np.log(d + ts), np.log(norms), 1)[0])
    expected = -1.0 + (0.0 if p == math.inf else 1.0 / p)
    return slope, expected


def second_derivative_ratio(sw: SmoothWave, ts):
    """sup |u1_xx| * delta * (delta + t) at each time (bounded per the decay estimates)."""
    out = []
    for t in ts:
        x = _wave_window(sw, t)
        f = sw.fields(t, x, derivs=2)
        out.append(float(np.max(np.abs(f["u1_xx"]))) * sw.delta * (sw.delta + t))
    return np.array(out)


def gap_envelope(delta, t):
    return delta / t * (math.log1p(t) + abs(math.log(delta)))


def lemma71_gap_ratio(sw: SmoothWave, ts):
    """sup_x |smooth - exact| over all four fields divided by the gap envelope."""
    w = sw.wave
    d = sw.delta
    out = []
    for t in ts:
        W = d * (40.0 + 3.0 * math.log1p(t / d))
        x = np.concatenate([
            np.linspace(w.xi_lo * t - W, w.xi_lo * t + W, 4001),
            np.linspace(w.xi_lo * t, w.xi_hi * t, 2001),
            np.linspace(w.xi_hi * t - W, w.xi_hi * t + W, 4001),
        ])
        s = np.array(sw.eval(t, x))
        e = np.array(w.eval(x / t))
        out.append(float(np.max(np.abs(s - e))) / gap_envelope(d, t))
    return np.array(out)
