"""Electron density closures rho_e(phi) and the potential-induced pressure.

Two closures are supported: the Boltzmann relation ``exp(phi / A_e)`` and the
gamma-law family

    rho_e(phi) = (1 + (gamma_e - 1) / gamma_e * phi / A_e) ** (1 / (gamma_e - 1))

defined for ``phi > -gamma_e A_e / (gamma_e - 1)``. Both are increasing,
positive and log-concave, which is what the fluid and kinetic machinery
relies on.

All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ClosureDomainError, ClosureRangeError, NumericalError

KINDS = ("boltzmann", "gamma")


@dataclass(frozen=True)
class ElectronClosure:
    kind: str = "boltzmann"
    A_e: float = 1.0
    gamma_e: float = 1.0

    def __post_init__(self):
        kind = {"gamma-law": "gamma", "gamma_law": "gamma"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ValueError(f"unknown closure kind {self.kind!r}; expected one of {KINDS}")
        if not self.A_e > 0:
            raise ValueError("A_e must be positive")
        if kind == "gamma" and not self.gamma_e > 1.0:
            raise ValueError("gamma-law closure needs gamma_e > 1 (use boltzmann for gamma_e = 1)")

    @classmethod
    def boltzmann(cls, A_e=1.0):
        return cls("boltzmann", A_e)

    @classmethod
    def gamma_law(cls, gamma_e, A_e=1.0):
        return cls("gamma", A_e, gamma_e)

    # admissible intervals -------------------------------------------------

    @property
    def phi_min(self):
        if self.kind == "boltzmann":
            return -math.inf
        return -self.gamma_e * self.A_e / (self.gamma_e - 1.0)

    @property
    def phi_max(self):
        return math.inf

    @property
    def rho_min(self):
        return 0.0

    @property
    def rho_max(self):
        return math.inf

    def _check_phi(self, phi):
        phi = np.asarray(phi, dtype=float)
        bad = ~((phi > self.phi_min) & (phi < self.phi_max))
        if np.any(bad):
            worst = phi[bad].flat[0]
            raise ClosureDomainError(
                f"phi={worst!r} outside ({self.phi_min}, {self.phi_max}) for the "
                f"{self.kind} closure (lower bound phi_m = {self.phi_min})"
            )
        return phi

    def _check_rho(self, rho):
        rho = np.asarray(rho, dtype=float)
        bad = ~((rho > self.rho_min) & (rho < self.rho_max))
        if np.any(bad):
            worst = rho[bad].flat[0]
            raise ClosureRangeError(
                f"rho={worst!r} outside the range ({self.rho_min}, {self.rho_max}) "
                f"of the {self.kind} closure"
            )
        return rho

    # rho_e and its derivatives ---------------------------------------------

    def _base(self, phi):
        # 1 + c phi for the gamma law
        c = (self.gamma_e - 1.0) / (self.gamma_e * self.A_e)
        return 1.0 + c * phi, c

    def rho_e(self, phi):
        phi = self._check_phi(phi)
        if self.kind == "boltzmann":
            out = np.exp(phi / self.A_e)
        else:
            base, _ = self._base(phi)
            out = base ** (1.0 / (self.gamma_e - 1.0))
        return _unwrap(out)

    def drho_e(self, phi):
        phi = self._check_phi(phi)
        if self.kind == "boltzmann":
            out = np.exp(phi / self.A_e) / self.A_e
        else:
            base, _ = self._base(phi)
            n = 1.0 / (self.gamma_e - 1.0)
            out = base ** (n - 1.0) / (self.gamma_e * self.A_e)
        return _unwrap(out)

    def d2rho_e(self, phi):
        phi = self._check_phi(phi)
        if self.kind == "boltzmann":
            out = np.exp(phi / self.A_e) / self.A_e**2
        else:
            base, c = self._base(phi)
            n = 1.0 / (self.gamma_e - 1.0)
            out = n * (n - 1.0) * c * c * base ** (n - 2.0)
        return _unwrap(out)

    def rho_e_inv(self, rho):
        rho = self._check_rho(rho)
        if self.kind == "boltzmann":
            out = self.A_e * np.log(rho)
        else:
            g = self.gamma_e
            # expm1/log keeps accuracy as gamma_e -> 1
            out = g * self.A_e * np.expm1((g - 1.0) * np.log(rho)) / (g - 1.0)
        return _unwrap(out)

    def drho_e_inv(self, rho):
        """d(rho_e^{-1})/drho = dP_phi_drho(rho) / rho."""
        return _unwrap(np.asarray(self.dP_phi_drho(rho)) / np.asarray(rho, dtype=float))

    # induced pressure --------------------------------------------------------

    def dP_phi_drho(self, rho):
        """rho_e / rho_e' evaluated at phi = rho_e^{-1}(rho); equals rho * d(rho_e^{-1})/drho."""
        rho = self._check_rho(rho)
        if self.kind == "boltzmann":
            out = np.full_like(rho, self.A_e, dtype=float)
        else:
            out = self.gamma_e * self.A_e * rho ** (self.gamma_e - 1.0)
        return _unwrap(out)

    def d2P_phi_drho2(self, rho):
        """Second derivative of P_phi, ((rho_e')^2 - rho_e rho_e'') / (rho_e')^3 at phi = rho_e^{-1}(rho)."""
        rho = self._check_rho(rho)
        if self.kind == "boltzmann":
            out = np.zeros_like(rho, dtype=float)
        else:
            g = self.gamma_e
            out = g * (g - 1.0) * self.A_e * rho ** (g - 2.0)
        return _unwrap(out)

    def P_phi(self, rho, tol=1e-10):
        """Potential pressure normalised so that P_phi(1) = 0, by adaptive quadrature."""
        rho_arr = self._check_rho(rho)
        out = np.empty(rho_arr.shape)
        for idx, r in np.ndenumerate(rho_arr):
            val, err = integrate.quad(
                lambda s: float(self.dP_phi_drho(s)), 1.0, float(r), epsabs=tol, epsrel=tol, limit=200
            )
            if not err <= max(tol, tol * abs(val)):
                raise NumericalError(f"P_phi quadrature did not reach {tol:g} (error estimate {err:g})")
            out[idx] = val
        return _unwrap(out)

    def describe(self):
        if self.kind == "boltzmann":
            return {"closure.kind": "boltzmann", "closure.A_e": self.A_e}
        return {"closure.kind": "gamma", "closure.A_e": self.A_e, "closure.gamma_e": self.gamma_e}


@dataclass
class AssumptionReport:
    phi: np.ndarray
    in_domain: np.ndarray
    A1: bool
    A2: np.ndarray
    A3: np.ndarray
    A3_slack: np.ndarray
    convexity: np.ndarray
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        ok = self.in_domain
        return bool(self.A1 and np.all(self.A2[ok]) and np.all(self.A3[ok]) and np.all(self.convexity[ok]))


def check_assumption_A(closure, phi_grid, rtol=1e-12):
    """Pointwise check of the three closure assumptions and of P_phi'' >= 0.

    Out-of-domain grid points are flagged in ``in_domain`` and skipped.
    ``A3_slack`` is ``(rho_e')^2 - rho_e rho_e''`` scaled by ``(rho_e')^2``;
    it is zero for the Boltzmann relation.
    """
    phi = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    inside = (phi > closure.phi_min) & (phi < closure.phi_max)
    A2 = np.zeros(phi.shape, bool)
    A3 = np.zeros(phi.shape, bool)
    slack = np.full(phi.shape, np.nan)
    convex = np.zeros(phi.shape, bool)
    notes = []
    if not np.all(inside):
        notes.append(f"{int(np.sum(~inside))} grid points outside the admissible interval")
    p = phi[inside]
    if p.size:
        r0 = np.asarray(closure.rho_e(p))
        r1 = np.asarray(closure.drho_e(p))
        r2 = np.asarray(closure.d2rho_e(p))
        A2[inside] = (r0 > 0) & (r1 > 0)
        s = (r1 * r1 - r0 * r2) / (r1 * r1)
        slack[inside] = s
        A3[inside] = s >= -rtol
        # P_phi'' scaled by rho_e' is dimensionless, so rtol applies to it
        convex[inside] = np.asarray(closure.d2P_phi_drho2(r0)) * r1 >= -rtol
    A1 = closure.phi_min < 0.0 < closure.phi_max and float(closure.rho_e(0.0)) == 1.0
    return AssumptionReport(phi, inside, A1, A2, A3, slack, convex, notes)


def _unwrap(arr):
    arr = np.asarray(arr)
    return float(arr) if arr.ndim == 0 else arr
