"""Isentropic quasineutral Euler system: eigenvalues and the exact 3-rarefaction.

The gas constant is R = 2/3, so the internal energy equals theta and

    S = -(2/3) ln rho + ln(4 pi theta / 3) + 1,    P = exp(S - 1) rho^{5/3} / (2 pi).

Along the 3-rarefaction curve through a left state the entropy is frozen at
S_* and

    u1(rho) = u1_- + int_{rho_-}^{rho} c(r) / r dr,
    c^2(rho) = (5/3) exp(S_* - 1) rho^{2/3} / (2 pi) + dP_phi/drho(rho).

The curve integral is tabulated once per wave as a Chebyshev series (the
integrand is analytic on the closed interval), which gives values and
derivatives at machine precision and makes wave evaluation a vectorised
root solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import integrate, optimize

from .closures import ElectronClosure
from .errors import NotARarefactionError, NumericalError

TWO_PI_E = 2.0 * math.pi * math.e


@dataclass(frozen=True)
class EulerState:
    rho: float
    u1: float
    theta: float

    def __post_init__(self):
        if not (self.rho > 0 and self.theta > 0):
            raise ValueError(f"EulerState needs rho > 0 and theta > 0, got {self}")

    @property
    def u2(self):
        return 0.0

    @property
    def u3(self):
        return 0.0

    def as_tuple(self):
        return (self.rho, self.u1, self.theta)


def entropy(rho, theta=None):
    """Macroscopic entropy; accepts an EulerState as the single argument too."""
    if isinstance(rho, EulerState):
        rho, theta = rho.rho, rho.theta
    return -(2.0 / 3.0) * np.log(rho) + np.log(4.0 * math.pi * theta / 3.0) + 1.0


def state_entropy(state: EulerState) -> float:
    return float(entropy(state.rho, state.theta))


def _kinetic_coeff(S_star):
    # d/drho of exp(S-1) rho^{5/3} / (2 pi) is K rho^{2/3}
    return (5.0 / 3.0) * math.exp(S_star) / TWO_PI_E


def sound_speed_sq(rho, S_star, closure: ElectronClosure):
    rho = np.asarray(rho, dtype=float)
    out = _kinetic_coeff(S_star) * rho ** (2.0 / 3.0) + np.asarray(closure.dP_phi_drho(rho))
    return float(out) if out.ndim == 0 else out


def theta_isentropic(rho, S_star):
    return 1.5 * math.exp(S_star) / TWO_PI_E * np.asarray(rho, dtype=float) ** (2.0 / 3.0)


def lam(i: int, state: EulerState, closure: ElectronClosure) -> float:
    """Characteristic speed lambda_i (i = 1, 2, 3)."""
    if i == 2:
        return state.u1
    c = math.sqrt(sound_speed_sq(state.rho, state_entropy(state), closure))
    if i == 1:
        return state.u1 - c
    if i == 3:
        return state.u1 + c
    raise ValueError("eigenvalue index must be 1, 2 or 3")


def curve_integral(rho_a, rho_b, S_star, closure, tol=1e-10):
    """int_{rho_a}^{rho_b} c(r)/r dr by adaptive quadrature."""
    val, err = integrate.quad(
        lambda r: math.sqrt(sound_speed_sq(r, S_star, closure)) / r,
        rho_a, rho_b, epsabs=tol, epsrel=tol, limit=200,
    )
    if err > tol:
        raise NumericalError(f"curve integral error estimate {err:g} above {tol:g}")
    return val


def r3_connect(left: EulerState, rho_plus: float, closure: ElectronClosure) -> EulerState:
    """Right state on the 3-rarefaction curve of ``left`` with density ``rho_plus``."""
    if rho_plus < left.rho:
        raise NotARarefactionError(
            f"rho_plus={rho_plus} < rho_-={left.rho}: a 3-rarefaction needs rho_+ > rho_-"
        )
    if rho_plus == left.rho:
        return left
    S = state_entropy(left)
    u = left.u1 + curve_integral(left.rho, rho_plus, S, closure)
    return EulerState(rho_plus, u, float(theta_isentropic(rho_plus, S)))


def _cheb_fit(func, a, b, tol=1e-15, max_deg=512):
    deg = 16
    while True:
        ser = Chebyshev.interpolate(func, deg, domain=[a, b])
        c = np.abs(ser.coef)
        if np.max(c[-4:]) <= tol * np.max(c) or deg >= max_deg:
            return ser.trim(0.1 * tol * np.max(c))
        deg *= 2


class R3Curve:
    """Tabulated 3-rarefaction curve on [rho_lo, rho_hi]."""

    def __init__(self, left: EulerState, rho_hi: float, closure: ElectronClosure):
        self.left = left
        self.closure = closure
        self.S_star = state_entropy(left)
        self.rho_lo = left.rho
        self.rho_hi = rho_hi
        self.K = _kinetic_coeff(self.S_star)
        self.degenerate = rho_hi <= left.rho
        if self.degenerate:
            return
        a, b = self.rho_lo, self.rho_hi
        self._k = _cheb_fit(lambda r: np.sqrt(self.c2(r)) / r, a, b)
        self._U = self._k.integ(lbnd=a) + left.u1
        self._lam = _cheb_fit(lambda r: self._U(r) + np.sqrt(self.c2(r)), a, b)
        self._dlam = self._lam.deriv()
        self._d2lam = self._dlam.deriv()
        self._d3lam = self._d2lam.deriv()
        self._U1, self._U2, self._U3 = self._U.deriv(1), self._U.deriv(2), self._U.deriv(3)
        self._phi = _cheb_fit(lambda r: np.asarray(closure.rho_e_inv(r)), a, b)
        self._phi1, self._phi2, self._phi3 = self._phi.deriv(1), self._phi.deriv(2), self._phi.deriv(3)

    def c2(self, rho):
        return self.K * np.asarray(rho) ** (2.0 / 3.0) + np.asarray(self.closure.dP_phi_drho(rho))

    def u1(self, rho):
        if self.degenerate:
            return np.full_like(np.asarray(rho, float), self.left.u1)
        return self._U(rho)

    def theta(self, rho):
        return 1.5 * self.K / (5.0 / 3.0) * np.asarray(rho, float) ** (2.0 / 3.0)

    def lambda3(self, rho):
        rho = np.asarray(rho, float)
        return self.u1(rho) + np.sqrt(self.c2(rho))

    def dlambda3(self, rho):
        return self._dlam(rho)

    @property
    def xi_lo(self):
        return float(self.lambda3(self.rho_lo))

    @property
    def xi_hi(self):
        return float(self.lambda3(self.rho_hi))

    def rho_of_lambda(self, xi, tol=1e-13):
        """Solve lambda3(rho) = xi for xi in [xi_lo, xi_hi] (clipped otherwise)."""
        xi = np.asarray(xi, float)
        if self.degenerate:
            return np.full(xi.shape, self.rho_lo)
        lo_x, hi_x = self.xi_lo, self.xi_hi
        xi = np.clip(xi, lo_x, hi_x)
        a = np.full(xi.shape, self.rho_lo)
        b = np.full(xi.shape, self.rho_hi)
        # linear seed, then safeguarded Newton with bracket updates
        r = self.rho_lo + (xi - lo_x) / (hi_x - lo_x) * (self.rho_hi - self.rho_lo)
        scale = max(abs(lo_x), abs(hi_x), 1.0)
        for _ in range(100):
            f = self.lambda3(r) - xi
            a = np.where(f < 0, r, a)
            b = np.where(f > 0, r, b)
            step = f / self._dlam(r)
            rn = r - step
            outside = (rn <= a) | (rn >= b)
            rn = np.where(outside, 0.5 * (a + b), rn)
            done = np.abs(f) <= tol * scale
            r = np.where(done, r, rn)
            if np.all(done):
                return r
        raise NumericalError("lambda3 inversion did not converge")

    def jets(self, rho, order=3):
        """Derivatives d^k/drho^k of (u1, theta, phi, lambda3) for k = 1..order.

        Returns a dict name -> list of arrays [f', f'', f'''].
        """
        rho = np.asarray(rho, float)
        zero = np.zeros_like(rho)
        if self.degenerate:
            return {n: [zero] * order for n in ("u1", "theta", "phi", "lambda3")}
        th = self.theta(rho)
        out = {
            "u1": [self._U1(rho), self._U2(rho), self._U3(rho)],
            "theta": [
                (2.0 / 3.0) * th / rho,
                -(2.0 / 9.0) * th / rho**2,
                (8.0 / 27.0) * th / rho**3,
            ],
            "phi": [self._phi1(rho), self._phi2(rho), self._phi3(rho)],
            "lambda3": [self._dlam(rho), self._d2lam(rho), self._d3lam(rho)],
        }
        return {k: v[:order] for k, v in out.items()}


@dataclass
class RarefactionWave:
    left: EulerState
    right: EulerState
    closure: ElectronClosure
    S_star: float = field(init=False)
    curve: R3Curve = field(init=False, repr=False)

    def __post_init__(self):
        S_l, S_r = state_entropy(self.left), state_entropy(self.right)
        if abs(S_l - S_r) > 1e-9 * max(1.0, abs(S_l)):
            raise NotARarefactionError(f"end states are not isentropic (S_-={S_l}, S_+={S_r})")
        if self.right.rho < self.left.rho or self.right.u1 < self.left.u1:
            raise NotARarefactionError("3-rarefaction needs rho_- <= rho_+ and u1_- <= u1_+")
        self.S_star = S_l
        self.curve = R3Curve(self.left, self.right.rho, self.closure)
        if not self.curve.degenerate:
            u_curve = float(self.curve.u1(self.right.rho))
            if abs(u_curve - self.right.u1) > 1e-8 * max(1.0, abs(u_curve)):
                raise NotARarefactionError(
                    f"right state is not on the 3-rarefaction curve (u1_+={self.right.u1}, curve gives {u_curve})"
                )

    @classmethod
    def from_left(cls, left: EulerState, rho_plus: float, closure: ElectronClosure):
        return cls(left, r3_connect(left, rho_plus, closure), closure)

    @property
    def xi_lo(self):
        return lam(3, self.left, self.closure)

    @property
    def xi_hi(self):
        return lam(3, self.right, self.closure)

    @property
    def phi_minus(self):
        return float(self.closure.rho_e_inv(self.left.rho))

    @property
    def phi_plus(self):
        return float(self.closure.rho_e_inv(self.right.rho))

    def state_at_rho(self, rho):
        rho = np.asarray(rho, float)
        return (rho, self.curve.u1(rho), self.curve.theta(rho), np.asarray(self.closure.rho_e_inv(rho)))

    def eval(self, xi):
        """Self-similar profile (rho, u1, theta, phi) at xi = x / t (vectorised)."""
        xi = np.asarray(xi, float)
        lo, hi = self.xi_lo, self.xi_hi
        rho = np.where(xi <= lo, self.left.rho, np.where(xi >= hi, self.right.rho, np.nan))
        fan = (xi > lo) & (xi < hi)
        if np.any(fan):
            rho[fan] = self.curve.rho_of_lambda(xi[fan])
        r, u, th, ph = self.state_at_rho(rho)
        # the constant branches are reproduced exactly
        u = np.where(xi <= lo, self.left.u1, np.where(xi >= hi, self.right.u1, u))
        th = np.where(xi <= lo, self.left.theta, np.where(xi >= hi, self.right.theta, th))
        ph = np.where(xi <= lo, self.phi_minus, np.where(xi >= hi, self.phi_plus, ph))
        return r, u, th, ph


def exact_wave_eval(wave: RarefactionWave, xi):
    out = wave.eval(xi)
    if np.ndim(xi) == 0:
        return tuple(float(v) for v in out)
    return out


def wave_strength(wave: RarefactionWave) -> float:
    l, r = wave.left, wave.right
    return abs(r.rho - l.rho) + abs(r.u1 - l.u1) + abs(r.theta - l.theta)


def rho_plus_for_strength(left: EulerState, strength: float, closure: ElectronClosure, tol=1e-13) -> float:
    """Right density whose 3-rarefaction from ``left`` has the given total jump."""
    if not strength > 0:
        raise NotARarefactionError("wave strength must be positive")

    def gap(r):
        s = r3_connect(left, r, closure)
        return abs(s.rho - left.rho) + abs(s.u1 - left.u1) + abs(s.theta - left.theta) - strength

    hi = left.rho * (1.0 + strength)
    while gap(hi) < 0:
        hi = left.rho + 2.0 * (hi - left.rho)
    return optimize.brentq(gap, left.rho, hi, xtol=tol * left.rho)
