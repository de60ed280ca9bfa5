"""Broken geodesics: boundary-to-boundary orbits, loop functions, periodic orbits
and the eight near-diagonal interior orbits.

Reflection counting convention: ``connect_boundary(q, q', j)`` returns ``j``
links with ``j - 1`` interior reflection points, so critical points of the
loop function ``Psi_j(q, q)`` are periodic orbits of rotation number ``1/j``.

Solvers work in the lifted curve parameter ``t`` of the domain and convert to
arclength only at the interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .billiard import frame, step_param
from .errors import BelowMinimumJ, CrossCheckFailed, NoConvergence, WrongCount
from .geometry import TWO_PI, ConvexDomain, Ellipse, cross, dot

J_MIN_DEFAULT = 10
FD_STEP = 1e-5  # finite-difference step as a fraction of the perimeter


@dataclass
class Orbit:
    vertices: np.ndarray
    length: float
    angles: list
    direction: str = "ccw"
    config: str = "BoundaryToBoundary"
    winding: int = 1
    params: np.ndarray | None = field(default=None, repr=False)

    @property
    def links(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)


@dataclass(frozen=True)
class LoopFunctionSample:
    q: float
    psi: float
    omega1: float
    omega2: float
    domega1_dqprime: float


def j_min(d: ConvexDomain) -> int:
    """Smallest ``j`` accepted by the near-diagonal solvers.

    Nearly circular tables admit small ``j``; the default floor of 10 applies
    once the curvature ratio departs noticeably from 1.
    """
    ratio = d.kappa_max / d.kappa_min
    if ratio < 1.5:
        return 3
    return J_MIN_DEFAULT


def _require_j(d, j, floor=None):
    jm = j_min(d) if floor is None else floor
    if j < jm:
        raise BelowMinimumJ(f"j = {j} is below j_min = {jm} for this domain")


# -- length functional on boundary polygons ------------------------------------

def _link_terms(d, t):
    """Gradient and tridiagonal Hessian pieces of ``sum |P(t_{k+1}) - P(t_k)|``."""
    P, d1, d2, _ = d._derivs(t)
    v = P[1:] - P[:-1]
    L = np.hypot(v[:, 0], v[:, 1])
    e = v / L[:, None]
    da, db = d1[:-1], d1[1:]
    pa, pb = dot(da, e), dot(db, e)
    grad_b = pb
    grad_a = -pa
    h_bb = dot(d2[1:], e) + (dot(db, db) - pb**2) / L
    h_aa = -dot(d2[:-1], e) + (dot(da, da) - pa**2) / L
    h_ab = -(dot(da, db) - pa * pb) / L
    return P, d1, L, e, grad_a, grad_b, h_aa, h_bb, h_ab


def _open_path_system(d, t):
    _, d1, L, e, ga, gb, haa, hbb, hab = _link_terms(d, t)
    g = gb[:-1] + ga[1:]
    diag = hbb[:-1] + haa[1:]
    off = hab[1:-1]
    speed = np.hypot(d1[1:-1, 0], d1[1:-1, 1])
    return g, diag, off, speed, L


def _solve_banded_step(diag, off, g):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, -g)


def maximize_open_path(d: ConvexDomain, ta: float, tb: float, seed: np.ndarray, tol: float = 1e-12, max_iter: int = 100):
    """Critical point of the length of ``ta -> seed -> tb`` over interior vertices.

    Newton with a tridiagonal Hessian and backtracking on the residual; damped
    gradient ascent if Newton stalls.  ``tol`` bounds the reflection-law
    residual (difference of cosines), a dimensionless quantity.
    """
    x = np.array(seed, dtype=float)
    if x.size == 0:
        return x
    bounds = (ta, tb)

    def residual(x):
        t = np.concatenate([[bounds[0]], x, [bounds[1]]])
        g, diag, off, speed, L = _open_path_system(d, t)
        return g, diag, off, speed

    g, diag, off, speed = residual(x)
    res = np.max(np.abs(g / speed))
    for _ in range(max_iter):
        if res <= tol:
            break
        dx = _solve_banded_step(diag, off, g)
        lam = 1.0
        accepted = False
        for _ in range(40):
            xn = x + lam * dx
            tt = np.concatenate([[ta], xn, [tb]])
            if np.all(np.diff(tt) > 0.0):
                gn, diagn, offn, speedn = residual(xn)
                resn = np.max(np.abs(gn / speedn))
                if resn < res or resn <= tol:
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            # gradient ascent fallback: length is maximal along the family
            xn = x.copy()
            gn_, step = g, 0.1 * (tb - ta) / (x.size + 1)
            for _ in range(200):
                cand = xn + step * gn_ / max(np.max(np.abs(gn_)), 1e-300)
                tt = np.concatenate([[ta], cand, [tb]])
                if np.all(np.diff(tt) > 0.0):
                    xn = cand
                    gn_ = residual(xn)[0]
                else:
                    step *= 0.5
            gn, diagn, offn, speedn = residual(xn)
            resn = np.max(np.abs(gn / speedn))
            if resn >= res:
                raise NoConvergence(f"length functional stalled at residual {res:.3e}")
        x, g, diag, off, speed, res = xn, gn, diagn, offn, speedn, resn
    if res > max(tol, 1e-11):
        raise NoConvergence(f"reflection residual {res:.3e} above tolerance after {max_iter} iterations")
    return x


def _seed_lazutkin(d, ta, tb, j):
    """Interior vertices uniformly spaced in the Lazutkin coordinate."""
    ia, ib = d.lazutkin_integral(ta), d.lazutkin_integral(tb)
    return d.lazutkin_param(ia + (ib - ia) * np.arange(1, j) / j)


def _lift_end(ta, tq2, windings=1):
    """Lift ``tq2`` near ``ta + 2 pi windings``."""
    target = ta + TWO_PI * windings
    return tq2 + TWO_PI * np.round((target - tq2) / TWO_PI)


@dataclass
class _PathSolution:
    t: np.ndarray  # all vertex parameters including both endpoints (lifted)
    length: float
    omega1: float
    omega2: float
    angles: np.ndarray


def _path_solution(d, t):
    P, T, _ = frame(d, t)
    v = np.diff(P, axis=0)
    L = np.hypot(v[:, 0], v[:, 1])
    e = v / L[:, None]
    w1 = math.atan2(cross(T[0], e[0]), dot(T[0], e[0]))
    w2 = math.atan2(cross(e[-1], T[-1]), dot(e[-1], T[-1]))
    inner = np.arctan2(cross(T[1:-1], e[1:]), dot(T[1:-1], e[1:]))
    angles = np.concatenate([[w1], inner, [w2]])
    return _PathSolution(t, float(math.fsum(L)), w1, w2, angles)


def _ccw_path(d, q, qp, j, seed=None, tol=1e-12):
    ta = float(d.param(q))
    tb = float(_lift_end(ta, float(d.param(qp))))
    if seed is None:
        seed = _seed_lazutkin(d, ta, tb, j)
    x = maximize_open_path(d, ta, tb, seed, tol=tol)
    return _path_solution(d, np.concatenate([[ta], x, [tb]]))


def _domega1_implicit(d, t):
    """``d omega_1 / d q'`` by implicit differentiation of the critical-point equations."""
    _, d1, L, e, *_ = _link_terms(d, t)
    g, diag, off, speed, _ = _open_path_system(d, t)
    # sensitivity of the last interior gradient to the moving endpoint
    da, db = d1[-2], d1[-1]
    ee = e[-1]
    mixed = -(dot(da, db) - dot(da, ee) * dot(db, ee)) / L[-1]
    rhs = np.zeros(diag.size)
    rhs[-1] = mixed
    dt_dtq = _solve_banded_step(diag, off, rhs)  # solves H dx = -rhs
    dt1 = dt_dtq[0] / np.hypot(db[0], db[1])
    return float(cross(e[0], d1[1]) / L[0] * dt1)


def _to_orbit(d, sol: _PathSolution, direction="ccw", config="BoundaryToBoundary"):
    P = d.point_t(sol.t)
    orbit = Orbit(P, sol.length, list(sol.angles), direction, config, 1, sol.t)
    if direction == "cw":
        orbit.vertices = P[::-1].copy()
        orbit.angles = list(sol.angles[::-1])
        orbit.params = sol.t[::-1].copy()
    return orbit


def connect_boundary(d: ConvexDomain, q: float, qprime: float, j: int, direction: str = "ccw") -> Orbit:
    """The ``j``-link one-rotation orbit from boundary point ``q`` to ``q'``.

    Clockwise orbits are the reversals of counterclockwise orbits from ``q'``
    to ``q``; their angles are measured against the negatively oriented
    tangent, so the first angle of a clockwise orbit is the last angle of the
    reversed one.
    """
    _require_j(d, j)
    if direction == "ccw":
        return _to_orbit(d, _ccw_path(d, q, qprime, j), "ccw")
    if direction == "cw":
        return _to_orbit(d, _ccw_path(d, qprime, q, j), "cw")
    raise ValueError(f"direction must be 'ccw' or 'cw', got {direction!r}")


def psi(d: ConvexDomain, q: float, qprime: float, j: int) -> float:
    """Length ``Psi_j(q, q')`` of the ccw one-rotation ``j``-link orbit."""
    return _ccw_path(d, q, qprime, j).length


def omega1(d: ConvexDomain, q: float, qprime: float, j: int) -> float:
    return _ccw_path(d, q, qprime, j).omega1


def _richardson_first(f, x, h):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def domega1_dqprime(d: ConvexDomain, q: float, j: int, rtol: float = 1e-5) -> float:
    """``d omega_1 / d q'`` at ``q' = q``, cross-checked two ways.

    (a) a central difference of ``omega_1`` in ``q'`` with one Richardson level;
    (b) the mixed second difference of ``Psi_j`` divided by ``sin omega_1``,
    using the identity ``d^2 Psi / dq dq' = sin(omega_1) d omega_1 / dq'``.
    Returns (a); raises :class:`CrossCheckFailed` if (b) disagrees.
    """
    _require_j(d, j)
    ell = d.perimeter
    base = _ccw_path(d, q, q, j)
    seed = base.t[1:-1]

    def w1(qp):
        return _ccw_path(d, q, qp, j, seed=seed + (d.param(qp) - d.param(q)) * np.arange(1, j) / j).omega1

    a = _richardson_first(w1, q, FD_STEP * ell)

    # the mixed difference divides by h^2, so it needs a larger step
    def mixed(h):
        vals = []
        for sq, sp in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            vals.append(sq * sp * _ccw_path(d, q + sq * h, q + sp * h, j).length)
        return math.fsum(vals) / (4 * h * h)

    h = 1e-3 * ell
    b = (4 * mixed(h / 2) - mixed(h)) / 3 / math.sin(base.omega1)
    if abs(a - b) > rtol * abs(a):
        raise CrossCheckFailed(f"d omega1/dq': difference quotient {a:.12g} vs mixed second difference {b:.12g}")
    return float(a)


def psi_gradient_fd(d: ConvexDomain, q: float, qprime: float, j: int):
    """Finite-difference ``(dPsi/dq, dPsi/dq')`` for the length-gradient identity."""
    h = FD_STEP * d.perimeter
    dq = _richardson_first(lambda x: psi(d, x, qprime, j), q, h)
    dqp = _richardson_first(lambda x: psi(d, q, x, j), qprime, h)
    return dq, dqp


# -- loop function and periodic orbits -----------------------------------------

def _loop_sample(d, q, j, seed=None):
    sol = _ccw_path(d, q, q, j, seed=seed)
    dw = _domega1_implicit(d, sol.t)
    return sol, LoopFunctionSample(float(q), sol.length, sol.omega1, sol.omega2, dw)


def loop_function(d: ConvexDomain, j: int, grid_n: int = 64) -> list[LoopFunctionSample]:
    """``Psi_j(q, q)``, the two angles and ``d omega_1/dq'`` on a uniform arclength grid.

    Each solve is seeded with the previous solution shifted by the grid step.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    _require_j(d, j)
    qs = np.arange(grid_n) * d.perimeter / grid_n
    out = []
    seed = None
    prev_t = None
    for q in qs:
        if prev_t is not None:
            shift = float(d.param(q)) - prev_t[0]
            seed = prev_t[1:-1] + shift
        sol, sample = _loop_sample(d, q, j, seed)
        prev_t = sol.t
        out.append(sample)
    return out


@dataclass
class PeriodicReport:
    j: int
    t_j: float
    T_j: float
    caustic: bool
    orbits: list
    critical_q: list
    hessians: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.critical_q)


def _loop_derivative(d, q, j, seed=None):
    sol = _ccw_path(d, q, q, j, seed=seed)
    return math.cos(sol.omega2) - math.cos(sol.omega1), sol


def find_periodic(d: ConvexDomain, j: int, grid_n: int = 64, caustic_tol: float = 1e-9) -> PeriodicReport:
    """Critical points of ``q -> Psi_j(q, q)``; each is a periodic orbit.

    The derivative of the loop function is ``cos(omega_2) - cos(omega_1)``;
    sign changes on the grid are refined by Brent's method.  A loop function
    that is flat to ``caustic_tol`` is reported as a caustic family with one
    representative orbit.
    """
    samples = loop_function(d, j, grid_n)
    psis = np.array([s.psi for s in samples])
    qs = np.array([s.q for s in samples])
    if psis.max() - psis.min() < caustic_tol:
        sol = _ccw_path(d, qs[0], qs[0], j)
        orbit = _to_orbit(d, sol, "ccw", "Periodic")
        return PeriodicReport(j, float(psis.min()), float(psis.max()), True, [orbit], [float(qs[0])])
    der = np.array([math.cos(s.omega2) - math.cos(s.omega1) for s in samples])
    crit, orbits, hess = [], [], []
    n = len(qs)
    ell = d.perimeter
    for i in range(n):
        a, b = qs[i], qs[i] + ell / n
        fa, fb = der[i], der[(i + 1) % n]
        if fa == 0.0:
            root = a
        elif fa * fb < 0.0:
            root = brentq(lambda q: _loop_derivative(d, q, j)[0], a, b, xtol=1e-14 * ell, rtol=1e-15)
        else:
            continue
        _, sol = _loop_derivative(d, root, j)
        closure = abs(sol.omega1 - sol.omega2)
        if closure > 1e-9:
            raise NoConvergence(f"critical point at q={root:.12g} does not close (angle mismatch {closure:.3e})")
        crit.append(float(root % ell))
        orbits.append(_to_orbit(d, sol, "ccw", "Periodic"))
        hq = 1e-4 * ell
        hess.append((psi(d, root + hq, root + hq, j) - 2 * sol.length + psi(d, root - hq, root - hq, j)) / hq**2)
    lengths = [o.length for o in orbits] + list(psis)
    return PeriodicReport(j, float(min(lengths)), float(max(lengths)), False, orbits, crit, hess)


def caustic_parameter_from_orbit(d: Ellipse, orbit: Orbit) -> np.ndarray:
    """Confocal-caustic parameter ``zeta`` of each link line of an ellipse orbit.

    A line ``n . x = c`` is tangent to the confocal ellipse with semi-axes
    ``sqrt(a^2 - zeta^2), sqrt(b^2 - zeta^2)`` when
    ``c^2 = (a^2 - zeta^2) n_x^2 + (b^2 - zeta^2) n_y^2``.
    """
    v = np.diff(orbit.vertices, axis=0)
    n = np.stack([-v[:, 1], v[:, 0]], axis=1) / np.linalg.norm(v, axis=1)[:, None]
    c = np.sum(n * orbit.vertices[:-1], axis=1)
    return np.sqrt(d.a**2 * n[:, 0] ** 2 + d.b**2 * n[:, 1] ** 2 - c**2)


# -- noncoincidence ---------------------------------------------------------------

def _closed_polygon_max(d, m, n, seed=None, tol=1e-12, max_iter=200):
    """Maximal perimeter closed n-gon winding ``m`` times (cyclic Newton)."""
    if seed is None:
        ia = d.lazutkin_total
        x = d.lazutkin_param(ia * m * np.arange(n) / n)
    else:
        x = np.array(seed, dtype=float)

    def system(x):
        t = np.concatenate([x, [x[0] + TWO_PI * m]])
        _, d1, L, _, ga, gb, haa, hbb, hab = _link_terms(d, t)
        # cyclic: vertex k has incoming link k-1 and outgoing link k
        g = np.roll(gb, 1) + ga
        H = np.diag(np.roll(hbb, 1) + haa)
        idx = np.arange(n)
        H[idx, (idx + 1) % n] += hab
        H[(idx + 1) % n, idx] += hab
        speed = np.hypot(d1[:-1, 0], d1[:-1, 1])
        return g, H, speed, float(math.fsum(L))

    g, H, speed, length = system(x)
    for _ in range(max_iter):
        res = np.max(np.abs(g / speed))
        if res <= tol:
            break
        w, V = np.linalg.eigh(H)
        if np.all(w < 1e-10 * np.max(np.abs(w))):
            dx = np.linalg.lstsq(H, -g, rcond=1e-10)[0]
        else:
            dx = 0.1 * g / np.max(np.abs(g)) * (TWO_PI * m / n)  # ascent until in the concave basin
        lam, accepted = 1.0, None
        for _ in range(40):
            xn = x + lam * dx
            if np.all(np.diff(np.concatenate([xn, [xn[0] + TWO_PI * m]])) > 0):
                trial = system(xn)
                if trial[3] >= length - 1e-13 * abs(length) or np.max(np.abs(trial[0] / trial[2])) < res:
                    accepted = xn, trial
                    break
            lam *= 0.5
        if accepted is None:
            raise NoConvergence(f"closed ({m}, {n}) polygon: no acceptable step at residual {res:.3e}")
        x, (g, H, speed, length) = accepted
    return x, length


@dataclass
class NoncoincidenceReport:
    perimeter: float
    epsilon0: float
    lengths: dict
    offending: list

    @property
    def passed(self) -> bool:
        return not self.offending


def noncoincidence_check(d: ConvexDomain, epsilon0: float, m_max: int, n_max: int) -> NoncoincidenceReport:
    """Lengths of maximal ``(m, n)`` Birkhoff orbits versus the window ``(l - eps0, l)``.

    Orbits with ``n < 2m`` are the reversals of ``(n - m, n)`` orbits and are
    not recomputed.
    """
    if m_max < 2:
        raise ValueError("m_max must be at least 2")
    ell = d.perimeter
    lengths, bad = {}, []
    for m in range(2, m_max + 1):
        for n in range(2 * m, n_max + 1):
            _, L = _closed_polygon_max(d, m, n)
            lengths[(m, n)] = L
            if ell - epsilon0 < L < ell:
                bad.append((m, n, L))
    return NoncoincidenceReport(ell, epsilon0, lengths, bad)


# -- interior rays and the eight orbits ---------------------------------------------

def _ray_exit(d: ConvexDomain, x, v):
    """Parameter of the boundary point hit by the ray ``x + tau v``, ``tau > 0``."""
    x = np.asarray(x, dtype=float)
    if isinstance(d, Ellipse):
        A = np.array([1.0 / d.a**2, 1.0 / d.b**2])
        qa = np.sum(A * v * v, axis=-1)
        qb = 2.0 * np.sum(A * x * v, axis=-1)
        qc = np.sum(A * x * x, axis=-1) - 1.0
        disc = np.sqrt(qb * qb - 4 * qa * qc)
        tau = np.where(qb > 0, -2 * qc / (qb + disc), (-qb + disc) / (2 * qa))
        p = x + tau[..., None] * v
        return np.arctan2(p[..., 1] / d.b, p[..., 0] / d.a)
    # osculating-circle guess followed by Newton on cross(v, P(t) - x)
    from .geometry import BoundaryNormalCoords  # noqa: F401

    foot = d.to_boundary_normal(x)
    t0 = float(d.param(foot.phi))
    P0, T0, n0 = frame(d, t0)
    rho = 1.0 / float(d.curvature_t(t0))
    c = P0 + rho * n0
    w = x - c
    bq = dot(w, v)
    tau = -bq + np.sqrt(bq * bq - (dot(w, w) - rho * rho))
    p = x + tau[..., None] * v
    rel = p - c
    ang = np.arctan2(cross(-n0, rel), dot(-n0, rel))
    t = t0 + ang * rho / float(d.speed_t(t0))
    for _ in range(60):
        P, dP, _, _ = d._derivs(t)
        g = cross(v, P - x)
        step = g / cross(v, dP)
        t = t - step
        if np.all(np.abs(step) < 1e-15):
            break
    return t


def _shoot(d, x, t_foot, e_t, n_in, psi_arr, j):
    """Cast from the interior point ``x`` at angles ``psi`` relative to the level-curve tangent.

    Returns ``(ts, ths, u0, tB)``: boundary params ``ts[k]`` for the hit points
    ``q_1 .. q_{j+1}`` (lifted), outgoing angles, and the initial directions.
    """
    psi_arr = np.asarray(psi_arr, dtype=float)
    u = np.cos(psi_arr)[:, None] * e_t + np.sin(psi_arr)[:, None] * n_in
    tB = np.asarray(_ray_exit(d, x, -u), dtype=float)
    tB = t_foot - np.mod(t_foot - tB, TWO_PI)
    PB, TB, nB = frame(d, tB)
    thB = np.arctan2(dot(u, nB), dot(u, TB))
    ts = np.empty((j + 2, psi_arr.size))
    ths = np.empty_like(ts)
    ts[0], ths[0] = tB, thB
    for k in range(j + 1):
        ts[k + 1], ths[k + 1], _ = step_param(d, ts[k], ths[k])
    return ts, ths, u


def _last_link_residual(d, ts, ths, y, j):
    """Signed offset of ``y`` from the line of the link leaving ``q_j``, and the link parameter."""
    P, T, n = frame(d, ts[j])
    e = np.cos(ths[j])[:, None] * T + np.sin(ths[j])[:, None] * n
    r = y - P
    return cross(e, r), dot(e, r), e


def landing_curve(d: ConvexDomain, x, psi_arr, j: int):
    """Lifted arclength of the ``j``-th boundary hit as a function of the shooting angle."""
    foot = d.to_boundary_normal(x)
    t_foot = float(d.param(foot.phi))
    _, e_t, n_in = frame(d, t_foot)
    ts, _, _ = _shoot(d, np.asarray(x, float), t_foot, e_t, n_in, np.atleast_1d(psi_arr), j)
    return d.arclength(ts[j]) - d.arclength(t_foot) + foot.phi


def _ccw_quadruple(d, x, y, j, n_scan):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ell = d.perimeter
    fx = d.to_boundary_normal(x)
    fy = d.to_boundary_normal(y)
    t_foot = float(d.param(fx.phi))
    _, e_t, n_in = frame(d, t_foot)
    _, _, nin_y = frame(d, float(d.param(fy.phi)))
    s_foot = float(d.arclength(t_foot))
    s_y = fy.phi + ell * np.round((s_foot - fy.phi) / ell)

    rho_min, rho_max = 1.0 / d.kappa_max, 1.0 / d.kappa_min
    th_lo = ell / (2 * (j + 1) * rho_max)
    th_hi = ell / (2 * max(j - 1, 1) * rho_min)
    grid = np.linspace(0.25 * th_lo, 2.0 * th_hi, n_scan)
    found = []
    for sign, first in ((1.0, "T"), (-1.0, "N")):
        psis = sign * grid

        def evaluate(p):
            p = np.atleast_1d(p)
            ts, ths, _ = _shoot(d, x, t_foot, e_t, n_in, p, j)
            G, tau, e = _last_link_residual(d, ts, ths, y, j)
            sj = d.arclength(ts[j])
            sj1 = d.arclength(ts[j + 1])
            target = s_y + ell
            window = (sj - ell / 100 <= target) & (target <= sj1 + ell / 100)
            return G, window, ts, ths, e

        G, window, _, _, _ = evaluate(psis)
        for i in range(n_scan - 1):
            if not (window[i] and window[i + 1]) or G[i] * G[i + 1] > 0:
                continue
            root = brentq(lambda p: float(evaluate(p)[0][0]), psis[i], psis[i + 1], xtol=1e-16, rtol=1e-15)
            _, _, ts, ths, e = evaluate(root)
            tau = float(dot(e[0], y - d.point_t(ts[j, 0])))
            if not 0.0 < tau < float(np.linalg.norm(d.point_t(ts[j + 1, 0]) - d.point_t(ts[j, 0]))):
                continue
            last = "T" if float(dot(e[0], nin_y)) < 0.0 else "N"
            found.append((first + last, root, ts[:, 0], ths[:, 0]))
    return found


def _interior_orbit(d, x, y, t_hits, config, direction, psi_root):
    P = d.point_t(t_hits)
    verts = np.vstack([x, P, y])
    links = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    _, T, _ = frame(d, t_hits)
    e = np.diff(verts, axis=0) / links[:, None]
    angles = list(np.arctan2(cross(T, e[1:]), dot(T, e[1:])))
    orbit = Orbit(verts, float(math.fsum(links)), angles, direction, config, 1, np.asarray(t_hits))
    orbit.shooting_angle = float(psi_root)
    return orbit


def find_eight_orbits(d: ConvexDomain, x, y, j: int, n_scan: int = 4096) -> list[Orbit]:
    """The eight ``j``-reflection one-rotation orbits from ``x`` to ``y``.

    Counterclockwise orbits are found by shooting from ``x`` across both halves
    of the admissible cone (inward angles give a first T link, outward angles a
    first N link) and locating the angles where the link leaving the ``j``-th
    reflection passes through ``y``.  Clockwise orbits are the reversals of the
    counterclockwise orbits from ``y`` to ``x``, with the T/N labels of the
    first and last links exchanged.
    """
    _require_j(d, j)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    orbits = []
    for cfg, root, ts, ths in _ccw_quadruple(d, x, y, j, n_scan):
        orbits.append(_interior_orbit(d, x, y, ts[1 : j + 1], cfg, "ccw", root))
    for cfg, root, ts, ths in _ccw_quadruple(d, y, x, j, n_scan):
        o = _interior_orbit(d, y, x, ts[1 : j + 1], cfg, "cw", root)
        o.vertices = o.vertices[::-1].copy()
        o.params = o.params[::-1].copy()
        o.angles = o.angles[::-1]
        o.config = cfg[::-1]
        orbits.append(o)
    configs = sorted((o.config, o.direction) for o in orbits)
    expected = sorted((c, dirn) for c in ("TT", "TN", "NT", "NN") for dirn in ("ccw", "cw"))
    if len(orbits) != 8 or configs != expected:
        raise WrongCount(len(orbits), f"found {len(orbits)} orbits with configurations {configs}")
    order = {c: i for i, c in enumerate(("TT", "TN", "NT", "NN"))}
    orbits.sort(key=lambda o: (o.direction != "ccw", order[o.config]))
    return orbits


def resimulate(d: ConvexDomain, orbit: Orbit) -> float:
    """Largest vertex deviation when the orbit is replayed by the billiard map.

    Replays from the first boundary vertex with its reflection angle and
    compares every later boundary vertex.
    """
    t = np.asarray(orbit.params, dtype=float)
    verts = orbit.vertices
    boundary = verts[1:-1] if orbit.config != "BoundaryToBoundary" and orbit.config != "Periodic" else verts
    if orbit.direction == "cw":
        t = t[::-1]
        boundary = boundary[::-1]
    P, T, n = frame(d, t[0])
    e = boundary[1] - boundary[0]
    th = math.atan2(float(dot(e, n)), float(dot(e, T)))
    tk = float(t[0])
    err = 0.0
    for k in range(1, len(boundary)):
        tk, th, _ = step_param(d, np.array(tk), np.array(th))
        tk, th = float(tk), float(th)
        err = max(err, float(np.linalg.norm(d.point_t(tk) - boundary[k])))
    return err


def limit_link_count(orbit: Orbit, threshold: float) -> int:
    return int(np.sum(orbit.links > threshold))
