"""Smooth approximate 3-rarefaction generated by Burgers' equation.

``omega(t, x)`` solves ``omega_t + omega omega_x = 0`` with tanh data of width
delta. Because the data are increasing the solution stays classical and is
obtained exactly from the characteristic relation

    x = x0 + t g(x0),    omega = g(x0),

which is solved for the foot ``x0`` by a bracketed Newton iteration. The fluid
profile follows by inverting lambda_3(rho) = omega along the 3-rarefaction
curve; all x- and t-derivatives are computed by the chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .euler import RarefactionWave, entropy


@dataclass
class SmoothWave:
    wave: RarefactionWave
    delta: float
    omega_minus: float = field(init=False)
    omega_plus: float = field(init=False)

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        self.omega_minus = self.wave.xi_lo
        self.omega_plus = self.wave.xi_hi

    @property
    def mean(self):
        return 0.5 * (self.omega_plus + self.omega_minus)

    @property
    def half_jump(self):
        return 0.5 * (self.omega_plus - self.omega_minus)

    # Burgers profile -------------------------------------------------------

    def profile(self, x, order=0):
        """The tanh datum g and its x-derivatives up to ``order`` (<= 3)."""
        z = np.asarray(x, float) / self.delta
        T = np.tanh(z)
        s = 1.0 - T * T
        h, d = self.half_jump, self.delta
        out = [self.mean + h * T]
        if order >= 1:
            out.append(h * s / d)
        if order >= 2:
            out.append(-2.0 * h * s * T / d**2)
        if order >= 3:
            out.append(-2.0 * h * s * (s - 2.0 * T * T) / d**3)
        return out if order else out[0]

    def foot(self, t, x, tol=1e-14):
        """Characteristic foot x0 with x0 + t g(x0) = x."""
        t = float(t)
        x = np.asarray(x, float)
        if t == 0.0 or self.half_jump == 0.0:
            return x - t * self.mean
        a = x - t * self.omega_plus
        b = x - t * self.omega_minus
        # rarefaction-fan guess: x0 = x - t * clip(x / t, omega_-, omega_+)
        with np.errstate(over="ignore"):
            xi = np.clip(x / t, self.omega_minus, self.omega_plus)
        x0 = np.clip(x - t * xi, a, b)
        scale = np.maximum(np.abs(x), 1.0)
        for _ in range(200):
            g, g1 = self.profile(x0, order=1)
            H = x0 + t * g - x
            a = np.where(H < 0, x0, a)
            b = np.where(H > 0, x0, b)
            done = (np.abs(H) <= tol * scale) | (b - a <= tol * scale)
            if np.all(done):
                return x0
            xn = x0 - H / (1.0 + t * g1)
            bad = (xn < a) | (xn > b)
            xn = np.where(bad, 0.5 * (a + b), xn)
            x0 = np.where(done, x0, xn)
        raise NumericalError("Burgers characteristic solve did not converge")

    def omega_jet(self, t, x):
        """omega and (omega_t, omega_x, omega_xx, omega_xxx)."""
        x0 = self.foot(t, x)
        g, g1, g2, g3 = self.profile(x0, order=3)
        J = 1.0 + t * g1
        w_x = g1 / J
        w_xx = g2 / J**3
        w_xxx = g3 / J**4 - 3.0 * t * g2 * g2 / J**5
        return g, -g * w_x, w_x, w_xx, w_xxx

    # fluid profile -----------------------------------------------------------

    def fields(self, t, x, derivs=0):
        """Profile (rho, u1, theta, phi) and, if ``derivs`` >= 1, its derivatives.

        Returns a dict with keys ``rho, u1, theta, phi`` and for each name
        ``name_t`` plus ``name_x``, ``name_xx``, ``name_xxx`` up to ``derivs``.
        """
        w, w_t, w_x, w_xx, w_xxx = self.omega_jet(t, x)
        curve = self.wave.curve
        rho = curve.rho_of_lambda(w)
        rho, u1, th, phi = self.wave.state_at_rho(rho)
        out = {"rho": rho, "u1": u1, "theta": th, "phi": phi, "omega": w}
        if derivs <= 0:
            return out
        jets = curve.jets(rho, order=3)
        L1, L2, L3 = jets["lambda3"]
        if curve.degenerate:
            r_x = r_xx = r_xxx = r_t = np.zeros_like(rho)
        else:
            r_x = w_x / L1
            r_t = w_t / L1
            r_xx = (w_xx - L2 * r_x**2) / L1
            r_xxx = (w_xxx - 3.0 * L2 * r_x * r_xx - L3 * r_x**3) / L1
        out.update(rho_t=r_t, rho_x=r_x, rho_xx=r_xx, rho_xxx=r_xxx)
        for name in ("u1", "theta", "phi"):
            f1, f2, f3 = jets[name]
            out[name + "_t"] = f1 * r_t
            out[name + "_x"] = f1 * r_x
            out[name + "_xx"] = f2 * r_x**2 + f1 * r_xx
            out[name + "_xxx"] = f3 * r_x**3 + 3.0 * f2 * r_x * r_xx + f1 * r_xxx
        return out

    def eval(self, t, x):
        f = self.fields(t, x)
        return f["rho"], f["u1"], f["theta"], f["phi"]


def burgers_profile(sw: SmoothWave, x):
    out = sw.profile(x)
    return float(out) if np.ndim(out) == 0 else out


def burgers_eval(sw: SmoothWave, t, x):
    if t < 0:
        raise ValueError("t must be nonnegative")
    out = sw.profile(sw.foot(t, x))
    return float(out) if np.ndim(out) == 0 else out


def burgers_derivs(sw: SmoothWave, t, x):
    _, w_t, w_x, w_xx, _ = sw.omega_jet(t, x)
    return w_t, w_x, w_xx


def smooth_wave_eval(sw: SmoothWave, t, x):
    return sw.eval(t, x)


def delta_from_epsilon(eps, a, k):
    """Smoothing width delta = eps^{3/5 - 2a/5} / k."""
    if not (0 < eps < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    if not (0 < k < 1):
        raise ValueError("k must lie in (0, 1)")
    return eps ** (0.6 - 0.4 * a) / k


def _euler_residuals(f, dx_flux):
    """Residuals of the four evolution equations given fields and a flux differentiator."""
    rho, u, th = f["rho"], f["u1"], f["theta"]
    P = (2.0 / 3.0) * rho * th
    E = rho * (th + 0.5 * u * u)
    m_t = f["rho_t"] * u + rho * f["u1_t"]
    E_t = f["rho_t"] * (th + 0.5 * u * u) + rho * (f["theta_t"] + u * f["u1_t"])
    mass = f["rho_t"] + dx_flux(rho * u, "mass")
    mom = m_t + dx_flux(rho * u * u + P, "mom") + rho * f["phi_x"]
    trans = np.zeros_like(rho)  # u2 = u3 = 0 identically
    energy = E_t + dx_flux(u * (E + P), "energy") + rho * u * f["phi_x"]
    return {"mass": mass, "momentum": mom, "transverse": trans, "energy": energy}


def smooth_wave_residual(sw: SmoothWave, t, x, method="fd"):
    """L2 and Linf norms of the quasineutral Euler residuals of the smooth wave.

    ``method="fd"`` differentiates the fluxes with second-order central
    differences (time derivatives stay analytic); ``method="analytic"`` uses
    the chain-rule derivatives everywhere. ``x`` must be uniform.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, float)
    h = x[1] - x[0]
    f = sw.fields(t, x, derivs=1)
    if method == "fd":
        def dx_flux(F, _name):
            return np.gradient(F, h, edge_order=2)
    elif method == "analytic":
        rho, u, th = f["rho"], f["u1"], f["theta"]
        r_x, u_x, th_x = f["rho_x"], f["u1_x"], f["theta_x"]
        P = (2.0 / 3.0) * rho * th
        P_x = (2.0 / 3.0) * (r_x * th + rho * th_x)
        E = rho * (th + 0.5 * u * u)
        E_x = r_x * (th + 0.5 * u * u) + rho * (th_x + u * u_x)
        table = {
            "mass": r_x * u + rho * u_x,
            "mom": r_x * u * u + 2.0 * rho * u * u_x + P_x,
            "energy": u_x * (E + P) + u * (E_x + P_x),
        }

        def dx_flux(_F, name):
            return table[name]
    else:
        raise ValueError("method must be 'fd' or 'analytic'")
    res = _euler_residuals(f, dx_flux)
    out = {}
    for name, r in res.items():
        out[name] = {"L2": float(math.sqrt(h * np.sum(r * r))), "Linf": float(np.max(np.abs(r)))}
    return out


def entropy_along(sw: SmoothWave, t, x):
    f = sw.fields(t, x)
    return entropy(f["rho"], f["theta"])
