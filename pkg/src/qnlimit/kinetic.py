"""Velocity-space utilities on a tensor-product trapezoid grid.

Maxwellians use the gas constant R = 2/3, so that the internal energy equals
theta and the reference equilibrium ``mu`` is the Maxwellian with
(rho, u, theta) = (1, 0, 3/2).

The collision frequency ``sigma^{ij} = Phi_ij * mu`` with the Coulomb kernel
``Phi_ij(z) = (delta_ij - z_i z_j / |z|^2) / |z|`` is computed in spherical
coordinates centred at the singularity. By rotational invariance of ``mu`` the
matrix has the form

    sigma(v) = s_par(|v|) vhat vhat^T + s_perp(|v|) (I - vhat vhat^T),

and after the azimuthal and polar integrals (done in closed form) each
eigenvalue is a one-dimensional radial integral with a smooth integrand,
which is evaluated by adaptive quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import DegenerateMomentsError, InputError, NumericalError

R_GAS = 2.0 / 3.0


# grids and states -----------------------------------------------------------


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform grid on [-V, V]^3 with trapezoid weights.

    The integral of ``mu`` over the grid is checked at construction for
    ``V >= 8`` and ``n >= 64``.
    """

    V: float = 8.0
    n: int = 64
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.V > 0:
            raise InputError("velocity half-width V must be positive")
        if int(self.n) != self.n or self.n < 16:
            raise InputError("n_per_axis must be an integer >= 16")
        axis = np.linspace(-self.V, self.V, int(self.n))
        w1 = np.full(axis.size, axis[1] - axis[0])
        w1[[0, -1]] *= 0.5
        object.__setattr__(self, "nodes", axis)
        object.__setattr__(self, "weights", w1)
        if self.V >= 8 and self.n >= 64:
            mass = self.integrate(mu(self.v))
            if abs(mass - 1.0) > 1e-8:
                raise NumericalError(f"grid integral of mu is {mass!r}, not within 1e-8 of 1")

    @property
    def h(self):
        return float(self.nodes[1] - self.nodes[0])

    @property
    def v(self):
        """Node coordinates, shape (n, n, n, 3)."""
        return _mesh(float(self.V), int(self.n))

    @property
    def speed(self):
        return np.sqrt(np.sum(self.v**2, axis=-1))

    def integrate(self, f):
        """Trapezoid integral over the last three axes."""
        w = self.weights
        out = np.tensordot(f, w, axes=([-1], [0]))
        out = np.tensordot(out, w, axes=([-1], [0]))
        out = np.tensordot(out, w, axes=([-1], [0]))
        return float(out) if np.ndim(out) == 0 else out

    def inner(self, f, g):
        return self.integrate(f * g)

    def gradient(self, g):
        """Centred differences, one-sided (second order) at the box faces."""
        return np.stack(np.gradient(g, self.h, edge_order=2), axis=-1)


@lru_cache(maxsize=4)
def _mesh(V, n):
    axis = np.linspace(-V, V, n)
    out = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MacroState:
    rho: float
    u: tuple = (0.0, 0.0, 0.0)
    theta: float = 1.5

    def __post_init__(self):
        u = tuple(float(c) for c in np.broadcast_to(np.asarray(self.u, float), (3,)))
        object.__setattr__(self, "u", u)
        if not (self.rho > 0 and self.theta > 0):
            raise InputError(f"MacroState needs rho > 0 and theta > 0, got rho={self.rho}, theta={self.theta}")

    def check_regime(self):
        """Warn when theta leaves (1, 3); returns True inside."""
        ok = 1.0 < self.theta < 3.0
        if not ok:
            warnings.warn(f"theta={self.theta} outside the working range (1, 3)", stacklevel=2)
        return ok


REFERENCE = MacroState(1.0, (0.0, 0.0, 0.0), 1.5)


def maxwellian(ms: MacroState, v):
    """Local Maxwellian rho (2 pi R theta)^{-3/2} exp(-|v-u|^2 / (2 R theta))."""
    v = np.asarray(v, float)
    Rt = R_GAS * ms.theta
    d2 = np.sum((v - np.asarray(ms.u)) ** 2, axis=-1)
    out = ms.rho / (2.0 * math.pi * Rt) ** 1.5 * np.exp(-d2 / (2.0 * Rt))
    return float(out) if np.ndim(out) == 0 else out


def mu(v):
    return maxwellian(REFERENCE, v)


# moments, basis and projections --------------------------------------------


def _shell_mask(grid: VelocityGrid, width=2):
    idx = np.arange(grid.n)
    edge = (idx < width) | (idx >= grid.n - width)
    return edge[:, None, None] | edge[None, :, None] | edge[None, None, :]


def moments(F, grid: VelocityGrid, tail_tol=1e-8):
    """Conserved moments (rho, rho u, rho (theta + |u|^2 / 2)) of ``F``.

    Returns ``(moment_tuple, MacroState)``. Mass in the two outermost grid
    shells above ``tail_tol`` (relative) means the grid truncates ``F``.
    """
    F = np.asarray(F, float)
    v = grid.v
    m0 = grid.integrate(F)
    if not m0 > 0:
        raise DegenerateMomentsError(f"recovered density {m0!r} is not positive")
    tail = grid.integrate(np.where(_shell_mask(grid), np.abs(F), 0.0))
    if tail > tail_tol * abs(m0):
        raise DegenerateMomentsError(
            f"tail mass fraction {tail / abs(m0):.3g} above {tail_tol:g}; enlarge the velocity box"
        )
    m = np.array([grid.integrate(F * v[..., i]) for i in range(3)])
    e = grid.integrate(F * 0.5 * np.sum(v * v, axis=-1))
    u = m / m0
    theta = e / m0 - 0.5 * float(u @ u)
    if not theta > 0:
        raise DegenerateMomentsError(f"recovered temperature {theta!r} is not positive")
    return (m0, m, e), MacroState(m0, tuple(u), theta)


def _chi_over_M(ms: MacroState, v):
    """The five polynomials chi_i / M, shape (5, ...)."""
    Rt = R_GAS * ms.theta
    c = np.asarray(v, float) - np.asarray(ms.u)
    sr = math.sqrt(ms.rho)
    out = [np.full(c.shape[:-1], 1.0 / sr)]
    for i in range(3):
        out.append(c[..., i] / math.sqrt(Rt * ms.rho))
    out.append((np.sum(c * c, axis=-1) / Rt - 3.0) / math.sqrt(6.0 * ms.rho))
    return np.stack(out)


def chi_basis(ms: MacroState, v):
    """Orthonormal basis chi_0..chi_4 of the macroscopic kernel, shape (5, ...)."""
    return _chi_over_M(ms, v) * maxwellian(ms, v)


def gram(ms: MacroState, grid: VelocityGrid):
    """Matrix <chi_i, chi_j / M> by quadrature."""
    P = _chi_over_M(ms, grid.v)
    M = maxwellian(ms, grid.v)
    G = np.empty((5, 5))
    for i in range(5):
        for j in range(5):
            G[i, j] = grid.integrate(P[i] * M * P[j])
    return G


def project_P0(h, ms: MacroState, grid: VelocityGrid):
    P = _chi_over_M(ms, grid.v)
    chi = P * maxwellian(ms, grid.v)
    coef = [grid.integrate(h * P[i]) for i in range(5)]
    return sum(c * chi[i] for i, c in enumerate(coef))


def project_P1(h, ms: MacroState, grid: VelocityGrid):
    return h - project_P0(h, ms, grid)


def collision_invariants(v):
    v = np.asarray(v, float)
    return np.stack([np.ones(v.shape[:-1]), v[..., 0], v[..., 1], v[..., 2], 0.5 * np.sum(v * v, axis=-1)])


def burnett_hat(kind, indices, ms: MacroState, v):
    """Burnett functions at w = (v - u) / sqrt(R theta).

    ``kind="A"`` with ``indices=j`` gives (|w|^2 - 5)/2 w_j; ``kind="B"`` with
    ``indices=(i, j)`` gives w_i w_j - |w|^2 delta_ij / 3. Indices are 1-based.
    """
    w = (np.asarray(v, float) - np.asarray(ms.u)) / math.sqrt(R_GAS * ms.theta)
    w2 = np.sum(w * w, axis=-1)
    kind = str(kind).upper().rstrip("_IJ")
    if kind == "A":
        j = int(np.ravel([indices])[0])
        if j not in (1, 2, 3):
            raise InputError("Burnett index must be 1, 2 or 3")
        out = 0.5 * (w2 - 5.0) * w[..., j - 1]
    elif kind == "B":
        i, j = (int(k) for k in indices)
        if i not in (1, 2, 3) or j not in (1, 2, 3):
            raise InputError("Burnett indices must be in 1..3")
        out = w[..., i - 1] * w[..., j - 1] - (w2 / 3.0 if i == j else 0.0)
    else:
        raise InputError(f"unknown Burnett function kind {kind!r}; expected 'A' or 'B'")
    return float(out) if np.ndim(out) == 0 else out


# collision frequency -----------------------------------------------------


_SERIES_CUT = 0.1


def _angular(r, s):
    """Polar integrals of exp(rs c) against 1 and c^2, times exp(-(r^2+s^2)/2)."""
    r = np.asarray(r, float)
    a = r * s
    base = np.exp(-0.5 * (r * r + s * s))
    a2 = a * a
    I0s = 2.0 * (1 + a2 / 6 + a2**2 / 120 + a2**3 / 5040) * base
    I2s = 2.0 * (1 / 3 + a2 / 10 + a2**2 / 168 + a2**3 / 6480) * base
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        Em = np.exp(-0.5 * (r - s) ** 2)
        Ep = np.exp(-0.5 * (r + s) ** 2)
        D, S = Em - Ep, Em + Ep
        I0 = D / a
        I2 = D / a - 2.0 * S / a2 + 2.0 * D / (a2 * a)
    small = a < _SERIES_CUT
    return np.where(small, I0s, I0), np.where(small, I2s, I2)


_NORM = (2.0 * math.pi) ** -1.5


def sigma_eigs(s, tol=1e-12, accept=1e-9):
    """(parallel, transverse) eigenvalues of sigma at speed ``s = |v|``.

    ``tol`` is the requested relative accuracy; a quadrature error estimate
    above ``accept`` (relative) is treated as a failure.
    """
    s = float(abs(s))

    def par(r):
        I0, I2 = _angular(r, s)
        return r * (I0 - I2)

    def perp(r):
        I0, I2 = _angular(r, s)
        return r * (I0 + I2)

    hi = s + 40.0
    pts = [s] if s > 0 else None
    vals = []
    for fn in (par, perp):
        val, err = integrate.quad(fn, 0.0, hi, points=pts, epsabs=tol * 1e-2, epsrel=tol, limit=400)
        if not err <= accept * abs(val):
            raise NumericalError(f"sigma quadrature error estimate {err:g} at |v|={s}")
        vals.append(val)
    return 2.0 * math.pi * _NORM * vals[0], math.pi * _NORM * vals[1]


def collision_frequency(v):
    """The 3x3 matrix sigma^{ij}(v) for a single velocity ``v``."""
    v = np.asarray(v, float).reshape(3)
    s = float(np.linalg.norm(v))
    sp, st = sigma_eigs(s)
    if s == 0.0:
        return st * np.eye(3)
    e = v / s
    return st * np.eye(3) + (sp - st) * np.outer(e, e)


@lru_cache(maxsize=8)
def sigma_table(s_max, n=400):
    """Cached cubic splines of the two eigenvalues on [0, s_max].

    Nodes are clustered near the origin (Chebyshev-like) where the
    transverse and parallel branches meet.
    """
    s = s_max * (1.0 - np.cos(np.linspace(0.0, math.pi / 2, n)))
    vals = np.array([sigma_eigs(x) for x in s])
    return CubicSpline(s, vals[:, 0]), CubicSpline(s, vals[:, 1])


def sigma_on_grid(grid: VelocityGrid):
    sp_fn, st_fn = sigma_table(round(math.sqrt(3.0) * grid.V + 1e-9, 9))
    s = grid.speed
    return sp_fn(s), st_fn(s)


# weights and norms ---------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    l: float = 0.0
    q1: float = 0.1
    q2: float = 1.0
    q_tau: float = 0.0
    alpha: int = 0
    beta: tuple = (0, 0, 0)

    def __post_init__(self):
        beta = tuple(int(b) for b in np.broadcast_to(np.asarray(self.beta), (3,)))
        object.__setattr__(self, "beta", beta)
        if self.alpha < 0 or min(beta) < 0:
            raise InputError("derivative orders must be nonnegative")
        if self.l < self.order:
            raise InputError(f"l={self.l} must be at least |alpha|+|beta|={self.order}")
        if not (self.q1 > 0 and self.q2 > 0):
            raise InputError("q1 and q2 must be positive")
        if not (0 <= self.q_tau <= self.q1):
            raise InputError(f"q(tau)={self.q_tau} must lie in [0, q1={self.q1}]")

    @property
    def order(self):
        return int(self.alpha) + sum(self.beta)


def japanese(v):
    v = np.asarray(v, float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


def weight_w(spec: WeightSpec, v):
    jv = japanese(v)
    out = jv ** (2.0 * (spec.l - spec.order)) * np.exp(spec.q_tau * jv)
    return float(out) if np.ndim(out) == 0 else out


def sigma_norm(g, grid: VelocityGrid, weight: WeightSpec | None = None):
    """Weighted dissipation norm |g|_{sigma,w} (the square root of the quadratic form)."""
    g = np.asarray(g, float)
    v = grid.v
    sp, st = sigma_on_grid(grid)
    s = grid.speed
    with np.errstate(invalid="ignore", divide="ignore"):
        e = np.where(s[..., None] > 0, v / s[..., None], 0.0)
    dg = grid.gradient(g)
    along = np.sum(e * dg, axis=-1)
    quad = st * np.sum(dg * dg, axis=-1) + (sp - st) * along**2
    quad = quad + 0.25 * sp * s * s * g * g
    w2 = 1.0 if weight is None else weight_w(weight, v) ** 2
    return math.sqrt(max(grid.integrate(w2 * quad), 0.0))


def sigma_norm_equivalent(g, grid: VelocityGrid, weight: WeightSpec | None = None):
    """The three-term comparison quantity for |g|_{sigma,w}.

    |w <v>^{-1/2} g| + |w <v>^{-3/2} grad g . vhat| + |w <v>^{-1/2} grad g x vhat|.
    """
    v = grid.v
    s = grid.speed
    jv = japanese(v)
    w = 1.0 if weight is None else weight_w(weight, v)
    with np.errstate(invalid="ignore", divide="ignore"):
        e = np.where(s[..., None] > 0, v / s[..., None], 0.0)
    dg = grid.gradient(np.asarray(g, float))
    along = np.sum(e * dg, axis=-1)
    cross = np.cross(dg, e)
    t1 = grid.integrate((w * jv**-0.5 * g) ** 2)
    t2 = grid.integrate((w * jv**-1.5 * along) ** 2)
    t3 = grid.integrate((w * jv**-0.5) ** 2 * np.sum(cross * cross, axis=-1))
    return math.sqrt(t1) + math.sqrt(t2) + math.sqrt(t3)


# the time-dependent exponent q(tau) ---------------------------------------


@dataclass
class QProfile:
    tau: np.ndarray
    q: np.ndarray
    q1: float
    q2: float
    positive: bool
    first_nonpositive: float | None

    def __call__(self, tau):
        return np.interp(tau, self.tau, self.q)

    @property
    def q_inf(self):
        return float(self.q[-1])


def q_of_tau(q1, q2, tau, q3):
    """q(tau) = q1 - q2 * int_0^tau q3 by the trapezoid rule.

    The first sample is taken as tau = 0. ``positive`` is False when q reaches
    zero anywhere on the grid; the crossing is located by linear interpolation.
    """
    tau = np.asarray(tau, float)
    q3 = np.asarray(q3, float)
    if tau.ndim != 1 or tau.shape != q3.shape or tau.size < 2:
        raise InputError("tau and q3 must be 1-D arrays of the same length >= 2")
    if np.any(np.diff(tau) <= 0):
        raise InputError("tau grid must be strictly increasing")
    if np.any(q3 < 0):
        raise InputError("q3 samples must be nonnegative")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (q3[1:] + q3[:-1]) * np.diff(tau))])
    q = q1 - q2 * cum
    bad = np.nonzero(q <= 0)[0]
    first = None
    if bad.size:
        i = bad[0]
        if i == 0:
            first = float(tau[0])
        else:
            first = float(np.interp(0.0, [q[i], q[i - 1]], [tau[i], tau[i - 1]]))
    return QProfile(tau, q, q1, q2, bad.size == 0, first)


def _d3_five_point(f, h):
    out = np.full(f.shape, np.nan)
    out[..., 2:-2] = (-f[..., :-4] + 2 * f[..., 1:-3] - 2 * f[..., 3:-1] + f[..., 4:]) / (2 * h**3)
    return out


def q3_from_fields(phi, t, x, eps, a):
    """q3 at each snapshot of a potential history given in physical variables.

    ``phi`` has shape (n_snapshots, nx) on the uniform grid ``x`` at times
    ``t``. Derivatives are taken in the scaled variables (tau, y) =
    (t, x) / eps^a: second-order differences in tau and y, a five-point
    stencil for the third y-derivative. L^2 norms are over the interior
    points where every stencil is defined.
    Returns ``(tau, q3)``.
    """
    phi = np.asarray(phi, float)
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    if phi.ndim != 2 or phi.shape[0] < 3:
        raise InputError("q3 needs at least 3 potential snapshots")
    if phi.shape != (t.size, x.size):
        raise InputError("phi must have shape (len(t), len(x))")
    if np.any(np.diff(t) <= 0):
        raise InputError("snapshot times must be strictly increasing")
    s = eps**a
    tau, y = t / s, x / s
    hy = y[1] - y[0]
    phi_tau = np.gradient(phi, tau, axis=0, edge_order=2)
    phi_y = np.gradient(phi, hy, axis=1, edge_order=2)
    phi_yy = np.empty_like(phi)
    phi_yy[:, 1:-1] = (phi[:, 2:] - 2 * phi[:, 1:-1] + phi[:, :-2]) / hy**2
    phi_yyy = _d3_five_point(phi, hy)
    sl = slice(2, -2)
    q3 = eps ** (1.0 - a) * (
        np.max(np.abs(phi_tau), axis=1) ** 2
        + np.max(np.abs(phi_y), axis=1) ** 2
        + hy * np.sum(phi_yy[:, sl] ** 2, axis=1)
        + hy * np.sum(phi_yyy[:, sl] ** 2, axis=1)
    )
    return tau, q3
