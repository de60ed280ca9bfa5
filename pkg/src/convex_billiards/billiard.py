"""The billiard map, its lift, its Jacobian and Lazutkin coordinates.

States are ``(s, theta)`` with ``theta`` the angle between the outgoing chord
and the positively oriented (counterclockwise) tangent.  Internally the map is
iterated in the curve parameter ``t`` of the domain, which is never wrapped:
each bounce adds an increment in ``(0, 2 pi)``, so the lifted arclength is read
off the unwrapped arclength table and the winding number is exact.

The low-level ``*_param`` functions are vectorized over arrays of states; the
dataclass-based public API wraps them for single states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoordinateOutOfRange, NotOneRotation, TangentialState
from .geometry import TWO_PI, ConvexDomain, Ellipse, cross, dot

TANGENTIAL_GUARD = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    s: float
    theta: float


@dataclass(frozen=True)
class LiftedPhasePoint:
    s_lift: float
    theta: float

    def project(self, d: ConvexDomain) -> PhasePoint:
        return PhasePoint(float(d.wrap(self.s_lift)), self.theta)


@dataclass(frozen=True)
class LazutkinPoint:
    x: float
    alpha: float


def _check_angle(theta):
    theta = np.asarray(theta, dtype=float).ravel()
    bad = ~((theta >= TANGENTIAL_GUARD) & (theta <= math.pi - TANGENTIAL_GUARD))
    if np.any(bad):
        bad = theta[np.argmax(bad)]
        raise TangentialState(f"reflection angle {bad!r} is within {TANGENTIAL_GUARD} of tangency")


def frame(d: ConvexDomain, t):
    """Point, unit tangent and inward unit normal at parameter ``t``."""
    P, d1, _, _ = d._derivs(np.asarray(t, dtype=float))
    T = d1 / np.hypot(d1[..., 0], d1[..., 1])[..., None]
    n_in = np.stack([-T[..., 1], T[..., 0]], axis=-1)
    return P, T, n_in


def direction(T, n_in, theta):
    theta = np.asarray(theta, dtype=float)[..., None]
    return np.cos(theta) * T + np.sin(theta) * n_in


def _chord_ellipse(d: Ellipse, P0, u):
    a2, b2 = d.a**2, d.b**2
    num = P0[..., 0] * u[..., 0] / a2 + P0[..., 1] * u[..., 1] / b2
    den = u[..., 0] ** 2 / a2 + u[..., 1] ** 2 / b2
    tau = -2.0 * num / den
    P1 = P0 + tau[..., None] * u
    Q0 = np.stack([P0[..., 0] / d.a, P0[..., 1] / d.b], axis=-1)
    Q1 = np.stack([P1[..., 0] / d.a, P1[..., 1] / d.b], axis=-1)
    return np.mod(np.arctan2(cross(Q0, Q1), dot(Q0, Q1)), TWO_PI)


def _chord_generic(d: ConvexDomain, t0, P0, u, guess):
    """Safeguarded Newton on the deflated ray residual over ``(0, 2 pi)``.

    ``h(dt) = cross(u, P(t0+dt) - P0) / sin(dt/2)`` is negative near 0 and
    positive near 2 pi, with a single root by strict convexity.
    """
    lo = np.zeros_like(t0)
    hi = np.full_like(t0, TWO_PI)
    x = np.clip(guess, 1e-12, TWO_PI - 1e-12)
    for _ in range(200):
        P, d1, _, _ = d._derivs(t0 + x)
        g = cross(u, P - P0)
        gp = cross(u, d1)
        D = np.sin(0.5 * x)
        Dp = 0.5 * np.cos(0.5 * x)
        h = g / D
        hp = (gp * D - g * Dp) / D**2
        neg = h < 0.0
        lo = np.where(neg, x, lo)
        hi = np.where(neg, hi, x)
        newton = x - h / hp
        bad = ~((newton > lo) & (newton < hi)) | ~np.isfinite(newton)
        x_new = np.where(bad, 0.5 * (lo + hi), newton)
        step = np.abs(x_new - x)
        x = x_new
        if np.all((step < 1e-15 * TWO_PI) | (hi - lo < 1e-15 * TWO_PI)):
            break
    return x


def chord_increment(d: ConvexDomain, t0, u, theta=None):
    """Parameter increment in ``(0, 2 pi)`` to where the ray ``P(t0) + tau u`` exits."""
    t0 = np.asarray(t0, dtype=float)
    P0 = d._derivs(t0)[0]
    if isinstance(d, Ellipse):
        return _chord_ellipse(d, P0, u)
    # osculating-circle guess: arc 2 rho theta
    if theta is None:
        _, T, n_in = frame(d, t0)
        theta = np.arctan2(dot(u, n_in), dot(u, T))
    rho = 1.0 / d.curvature_t(t0)
    guess = 2.0 * rho * np.asarray(theta) / d.speed_t(t0)
    return _chord_generic(d, t0, P0, u, np.clip(guess, 1e-9, TWO_PI - 1e-9))


def step_param(d: ConvexDomain, t0, theta0):
    """One bounce in parameter form.  Returns ``(t1, theta1, chord_length)``."""
    t0 = np.asarray(t0, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    _check_angle(theta0)
    P0, T0, n0 = frame(d, t0)
    u = direction(T0, n0, theta0)
    dt = chord_increment(d, t0, u, theta0)
    t1 = t0 + dt
    P1, T1, _ = frame(d, t1)
    theta1 = np.arctan2(cross(u, T1), dot(u, T1))
    L = np.hypot(P1[..., 0] - P0[..., 0], P1[..., 1] - P0[..., 1])
    return t1, theta1, L


def step_param_inverse(d: ConvexDomain, t1, theta1):
    """Inverse bounce via time reversal ``theta -> pi - theta``."""
    t, th, L = step_param(d, t1, math.pi - np.asarray(theta1, dtype=float))
    return t - TWO_PI, math.pi - th, L


def orbit_param(d: ConvexDomain, t0, theta0, n: int):
    """``n`` forward bounces.  Arrays of shape ``(n+1,) + t0.shape``."""
    t0 = np.asarray(t0, dtype=float)
    ts = np.empty((n + 1,) + t0.shape)
    ths = np.empty_like(ts)
    Ls = np.empty((n,) + t0.shape)
    ts[0], ths[0] = t0, theta0
    for k in range(n):
        ts[k + 1], ths[k + 1], Ls[k] = step_param(d, ts[k], ths[k])
    return ts, ths, Ls


# -- public single-state API ---------------------------------------------------

def billiard_map(d: ConvexDomain, p: PhasePoint) -> PhasePoint:
    t1, th1, _ = step_param(d, d.param(p.s), p.theta)
    return PhasePoint(float(d.wrap(d.arclength(t1))), float(th1))


def billiard_map_inverse(d: ConvexDomain, p: PhasePoint) -> PhasePoint:
    t0, th0, _ = step_param_inverse(d, d.param(p.s), p.theta)
    return PhasePoint(float(d.wrap(d.arclength(t0))), float(th0))


def iterate_lifted(d: ConvexDomain, p: LiftedPhasePoint, n: int) -> LiftedPhasePoint:
    t, th = d.param(p.s_lift), p.theta
    stepper = step_param if n >= 0 else step_param_inverse
    for _ in range(abs(n)):
        t, th, _ = stepper(d, t, th)
    s = float(d.arclength(t)) if n else p.s_lift
    return LiftedPhasePoint(s, float(th))


def _jacobian_param(d, t0, th0, t1, th1, L):
    k0 = d.curvature_t(t0)
    k1 = d.curvature_t(t1)
    s0, s1 = np.sin(th0), np.sin(th1)
    J = np.empty(np.shape(t0) + (2, 2))
    J[..., 0, 0] = (k0 * L - s0) / s1
    J[..., 0, 1] = L / s1
    J[..., 1, 0] = (k0 * k1 * L - k0 * s1 - k1 * s0) / s1
    J[..., 1, 1] = (k1 * L - s1) / s1
    return J


def jacobian(d: ConvexDomain, p: PhasePoint) -> np.ndarray:
    """``d(s', theta') / d(s, theta)`` of a single bounce."""
    t0 = d.param(p.s)
    t1, th1, L = step_param(d, t0, p.theta)
    return _jacobian_param(d, t0, p.theta, t1, th1, L)


def symplectic_det(J: np.ndarray, theta0, theta1) -> np.ndarray:
    """Determinant of the Jacobian in the coordinates ``(s, -cos theta)``."""
    return np.linalg.det(J) * np.sin(theta1) / np.sin(theta0)


# -- Lazutkin coordinates ------------------------------------------------------

def to_lazutkin(d: ConvexDomain, p: PhasePoint) -> LazutkinPoint:
    """``x = int_0^s kappa^{2/3} / C`` and ``alpha = 4 rho^{1/3} sin(theta/2) / C``.

    ``C`` is the total of ``kappa^{2/3}`` over the boundary.
    """
    t = d.param(d.wrap(p.s))
    C = d.lazutkin_total
    x = float(d.lazutkin_integral(t)) / C
    rho = 1.0 / float(d.curvature_t(t))
    alpha = 4.0 * rho ** (1.0 / 3.0) * math.sin(0.5 * p.theta) / C
    return LazutkinPoint(x % 1.0, alpha)


def from_lazutkin(d: ConvexDomain, lp: LazutkinPoint) -> PhasePoint:
    C = d.lazutkin_total
    t = d.lazutkin_param((lp.x % 1.0) * C)
    rho = 1.0 / float(d.curvature_t(t))
    arg = lp.alpha * C / (4.0 * rho ** (1.0 / 3.0))
    if not 0.0 <= arg <= 1.0:
        raise CoordinateOutOfRange(f"alpha = {lp.alpha} has no angle at x = {lp.x}")
    return PhasePoint(float(d.wrap(d.arclength(t))), 2.0 * math.asin(arg))


def lazutkin_alpha_param(d: ConvexDomain, t, theta):
    rho = 1.0 / d.curvature_t(t)
    return 4.0 * rho ** (1.0 / 3.0) * np.sin(0.5 * np.asarray(theta)) / d.lazutkin_total


def _lazutkin_frame(d, t, theta):
    """Jacobian ``d(x, alpha) / d(s, theta)``."""
    C = d.lazutkin_total
    k = d.curvature_t(t)
    rho = 1.0 / k
    drho = -d.curvature_deriv_t(t) / k**2
    M = np.zeros(np.shape(t) + (2, 2))
    M[..., 0, 0] = k ** (2.0 / 3.0) / C
    M[..., 1, 0] = (4.0 / 3.0) * rho ** (-2.0 / 3.0) * drho * np.sin(0.5 * theta) / C
    M[..., 1, 1] = 2.0 * rho ** (1.0 / 3.0) * np.cos(0.5 * theta) / C
    return M


def lazutkin_iterated_jacobian(d: ConvexDomain, p: PhasePoint, j: int) -> np.ndarray:
    """Jacobian of the ``j``-fold lifted map in Lazutkin coordinates."""
    if j == 0:
        return np.eye(2)
    t0 = d.param(d.wrap(p.s))
    ts, ths, Ls = orbit_param(d, t0, p.theta, j)
    advance = float(d.arclength(ts[-1]) - d.arclength(ts[0]))
    ell = d.perimeter
    if abs(advance - ell) > ell / 100.0:
        raise NotOneRotation(
            f"{j}-bounce orbit advances {advance / ell:.6f} perimeters, not one rotation within 1/100"
        )
    J = _jacobian_param(d, ts[:-1], ths[:-1], ts[1:], ths[1:], Ls)
    prod = np.eye(2)
    for k in range(j):
        prod = J[k] @ prod
    M0 = _lazutkin_frame(d, ts[0], ths[0])
    Mj = _lazutkin_frame(d, ts[-1], ths[-1])
    return Mj @ prod @ np.linalg.inv(M0)


def lazutkin_iterated_jacobian_defect(d: ConvexDomain, p: PhasePoint, j: int) -> float:
    D = lazutkin_iterated_jacobian(d, p, j)
    return float(np.max(np.sum(np.abs(D - np.array([[1.0, j], [0.0, 1.0]])), axis=1)))


def one_rotation_state(d: ConvexDomain, s: float, j: int) -> PhasePoint:
    """Angle at ``s`` whose ``j``-bounce orbit advances exactly one perimeter."""
    from scipy.optimize import brentq

    t0 = float(d.param(s))
    s0 = float(d.arclength(t0))

    def excess(theta):
        ts, _, _ = orbit_param(d, t0, theta, j)
        return float(d.arclength(ts[-1])) - s0 - d.perimeter

    lo, hi = 0.2 * math.pi / j, min(3.0 * math.pi / j, 0.5 * math.pi)
    return PhasePoint(s, brentq(excess, lo, hi, xtol=1e-15, rtol=1e-14))


# -- rotation number -----------------------------------------------------------

def _bump_weights(n: int) -> np.ndarray:
    t = (np.arange(n) + 0.5) / n
    w = np.exp(-1.0 / (t * (1.0 - t)))
    return w / w.sum()


def rotation_number(d: ConvexDomain, p: PhasePoint, n_iters: int = 1000) -> float:
    """Weighted Birkhoff average of the per-bounce lifted advance over ``l``.

    The smooth bump weight makes the average converge faster than any power of
    ``n_iters`` on periodic and quasi-periodic orbits.
    """
    if n_iters < 100:
        raise ValueError("rotation_number needs at least 100 iterations")
    ts, _, _ = orbit_param(d, d.param(d.wrap(p.s)), p.theta, n_iters)
    inc = np.diff(d.arclength(ts)) / d.perimeter
    return float(np.sum(_bump_weights(n_iters) * inc))
