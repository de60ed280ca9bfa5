"""Closed-form data for elliptic billiards from elliptic integrals alone.

Nothing here touches the orbit solvers: the caustic parameter ``zeta`` of the
rotation number ``1/j`` family, the angle field, and the wave invariant ``c_j``
are computed from Carlson's symmetric integral ``R_F`` and one-dimensional
quadrature, which makes this module an independent oracle for the geometric
pipeline.

Three readings of the closed form for ``c_j`` are available.  Two follow the
printed formula with ``sqrt(1 - k^2 sin(phi))`` or ``sqrt(1 - k^2 sin^2(phi))``
under the radical.  The third is derived from the action-angle picture: the
boundary map on the caustic family is a rotation by ``2 F(arcsin(zeta/b); k)``
in the coordinate ``u = F(phi - pi/2; k)``, so ``omega_1(q, q')`` depends on
``q'`` only through the caustic parameter, which is differentiated implicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModulusOutOfRange, NegativeRadicand, NoRoot


# -- elliptic integrals ------------------------------------------------------------

def carlson_rf(x: float, y: float, z: float, rtol: float = 1e-15) -> float:
    """Carlson's ``R_F(x, y, z)`` by duplication, for non-negative arguments with at most one zero."""
    if min(x, y, z) < 0.0 or (x == 0.0) + (y == 0.0) + (z == 0.0) > 1:
        raise ValueError("R_F needs non-negative arguments with at most one zero")
    tol = (3.0 * rtol) ** (1.0 / 6.0) / 3.0  # Carlson's bound on the series remainder
    for _ in range(100):
        mu = (x + y + z) / 3.0
        dx, dy, dz = 1.0 - x / mu, 1.0 - y / mu, 1.0 - z / mu
        if max(abs(dx), abs(dy), abs(dz)) < tol:
            break
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * (sy + sz) + sy * sz
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / math.sqrt(mu)


def _check_modulus(k):
    if not (0.0 <= k < 1.0):
        raise ModulusOutOfRange(f"modulus k = {k} outside [0, 1)")


def elliptic_K(k: float) -> float:
    _check_modulus(k)
    return carlson_rf(0.0, 1.0 - k * k, 1.0)


def elliptic_F(s: float, k: float) -> float:
    """Incomplete integral ``int_0^s dtau / sqrt(1 - k^2 sin^2 tau)`` for any real ``s``."""
    _check_modulus(k)
    n = round(s / math.pi)
    r = s - n * math.pi
    sr, cr = math.sin(r), math.cos(r)
    base = sr * carlson_rf(cr * cr, 1.0 - k * k * sr * sr, 1.0) if sr != 0.0 else 0.0
    return base + (2 * n * elliptic_K(k) if n else 0.0)


# -- caustic parameter -------------------------------------------------------------

@dataclass(frozen=True)
class CausticParam:
    zeta: float
    k: float
    j: int
    a: float
    b: float

    @property
    def semi_axes(self):
        return math.sqrt(self.a**2 - self.zeta**2), math.sqrt(self.b**2 - self.zeta**2)

    @property
    def lam(self) -> float:
        return self.zeta**2


def modulus(a: float, b: float, zeta: float) -> float:
    return math.sqrt((a * a - b * b) / (a * a - zeta * zeta))


def rotation_fraction(a: float, b: float, zeta: float) -> float:
    """``F(arcsin(zeta/b); k_zeta) / (2 K(k_zeta))``, the rotation number of the caustic."""
    k = modulus(a, b, zeta)
    return elliptic_F(math.asin(min(zeta / b, 1.0)), k) / (2.0 * elliptic_K(k))


def solve_zeta(a: float, b: float, j: int) -> CausticParam:
    """Caustic parameter of the rotation number ``1/j`` family.

    Eighty bisection steps on ``[1e-12, b(1 - 1e-12)]`` followed by secant
    polishing; the residual is returned to better than ``1e-12``.
    """
    if j < 3:
        raise NoRoot(f"no elliptic caustic of rotation number 1/{j}")
    if not a >= b > 0.0:
        raise ValueError(f"need a >= b > 0, got a={a}, b={b}")

    def f(z):
        return rotation_fraction(a, b, z) - 1.0 / j

    lo, hi = 1e-12 * b, b * (1.0 - 1e-12)
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0.0:
        raise NoRoot(f"rotation number 1/{j} not bracketed on (0, b)")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    z_prev, f_prev = lo, f(lo)
    for _ in range(8):
        fz = f(z)
        if fz == 0.0 or fz == f_prev:
            break
        z, z_prev, f_prev = z - fz * (z - z_prev) / (fz - f_prev), z, fz
    if abs(f(z)) > 1e-12:
        raise NoRoot(f"caustic equation residual {f(z):.3e} for j={j}")
    return CausticParam(z, modulus(a, b, z), j, a, b)


def omega_of_phi(cp: CausticParam, a: float, b: float, phi):
    """Reflection angle of the caustic family at parameter ``phi``."""
    phi = np.asarray(phi, dtype=float)
    return np.arcsin(cp.zeta / np.sqrt(b * b + (a * a - b * b) * np.sin(phi) ** 2))


def _periodic_quad(f, n=512, tol=1e-10, max_n=1 << 16):
    """Trapezoid rule on ``[0, 2 pi)``, doubling until the change is below ``tol``."""
    prev = None
    while True:
        t = 2.0 * math.pi * np.arange(n) / n
        val = float(np.sum(f(t))) * 2.0 * math.pi / n
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        if n >= max_n:
            return val
        prev, n = val, 2 * n


def _dK4_dlam(a: float, lam: float, k: float) -> float:
    """``d(4K)/d(zeta^2)`` as a trapezoid integral."""
    integral = _periodic_quad(lambda t: np.sin(t) ** 2 / (1.0 - k * k * np.sin(t) ** 2) ** 1.5)
    return k * k / (2.0 * (a * a - lam)) * integral


def _h(a, b, u):
    z = math.sqrt(u)
    return elliptic_F(math.asin(z / b), modulus(a, b, z))


def _dh_du(a, b, u):
    """Central difference with one Richardson level for ``d/du F(arcsin(sqrt u)/b; k)``."""
    h = 1e-4 * min(u, b * b - u)
    d1 = (_h(a, b, u + h) - _h(a, b, u - h)) / (2 * h)
    d2 = (_h(a, b, u + h / 2) - _h(a, b, u - h / 2)) / h
    return (4 * d2 - d1) / 3


def G_of_zeta(cp: CausticParam, a: float, b: float, j: int) -> float:
    """The printed ``G(zeta_j)``, reading ``d/d zeta^2`` as a derivative in ``u = zeta^2``."""
    lam, k = cp.lam, cp.k
    quad = _periodic_quad(lambda t: np.sin(t) ** 2 / (1.0 - k * k * np.sin(t) ** 2) ** 1.5)
    return -k * k / (a * a - lam) * quad + (2 * j + 2) * _dh_du(a, b, lam)


def rotation_defect_derivative(cp: CausticParam, a: float, b: float, j: int) -> float:
    """``d/d zeta^2 [2 j F(arcsin(zeta/b); k) - 4K(k)]`` at the caustic."""
    return 2 * j * _dh_du(a, b, cp.lam) - _dK4_dlam(a, cp.lam, cp.k)


def domega1_dqprime_ellipse(cp: CausticParam, a: float, b: float, phi):
    """Closed-form ``d omega_1 / d q'`` on the diagonal at parameter ``phi``."""
    phi = np.asarray(phi, dtype=float)
    W = a * a * np.sin(phi) ** 2 + b * b * np.cos(phi) ** 2
    w = omega_of_phi(cp, a, b, phi)
    rho_u = 1.0 / np.sqrt(1.0 - cp.k**2 * np.cos(phi) ** 2)
    D = rotation_defect_derivative(cp, a, b, cp.j)
    return rho_u / (2.0 * cp.zeta * W * np.cos(w) * D)


@dataclass
class OracleReport:
    a: float
    b: float
    j: int
    zeta: float
    k: float
    omega_at_phi0: float
    G: float
    c_j_sin_radical: float
    c_j_sin_squared_radical: float
    c_j_action_angle: float
    L_j: float
    quad_n: int
    convergence: dict

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _printed_integrand(cp, a, b, j, G, squared):
    sign = (-1.0) ** (j + 1)

    def f(phi):
        w = omega_of_phi(cp, a, b, phi)
        s, c = np.sin(phi), np.cos(phi)
        inner = 1.0 - cp.k**2 * (s * s if squared else s)
        rad = np.cos(w) * (a * a * s * s + b * b * c * c) * (b * b + (a * a - b * b) * s * s) * G * np.sqrt(inner)
        if np.any(rad < 0.0) or np.any(inner < 0.0):
            i = int(np.argmax((rad < 0.0) | (inner < 0.0)))
            raise NegativeRadicand(int(i), float(rad[i]))
        return sign * 2 * a * b * np.sin(w) * np.sqrt(a * a * c * c + b * b * s * s) / np.sqrt(rad)

    return f


def _action_angle_integrand(cp, a, b, j):
    sign = (-1.0) ** (j + 1)
    D = rotation_defect_derivative(cp, a, b, j)

    def f(phi):
        w = omega_of_phi(cp, a, b, phi)
        W = a * a * np.sin(phi) ** 2 + b * b * np.cos(phi) ** 2
        rho_u = 1.0 / np.sqrt(1.0 - cp.k**2 * np.cos(phi) ** 2)
        rad = np.cos(w) * D
        if np.any(rad < 0.0):
            i = int(np.argmax(rad < 0.0))
            raise NegativeRadicand(i, float(np.broadcast_to(rad, np.shape(phi))[i]))
        return sign * 2.0 * math.sqrt(2.0) * a * b * np.sin(w) * np.sqrt(rho_u) / (np.sqrt(rad) * W**0.75)

    return f


def _trapz(f, n):
    t = 2.0 * math.pi * np.arange(n) / n
    return float(np.sum(f(t))) * 2.0 * math.pi / n


def c_j_closed_form(a: float, b: float, j: int, quad_n: int = 256, reading: str = "sin_phi") -> tuple[float, float]:
    """``(c_j, convergence estimate)`` for one reading of the closed form.

    ``reading`` is ``"sin_phi"`` (radical with ``sin phi``), ``"sin_squared"`` or
    ``"action_angle"``.  The convergence estimate is the change from
    ``quad_n / 2`` nodes.
    """
    if quad_n < 128:
        raise ValueError("quad_n must be at least 128")
    cp = solve_zeta(a, b, j)
    if reading == "action_angle":
        f = _action_angle_integrand(cp, a, b, j)
    elif reading in ("sin_phi", "sin_squared"):
        f = _printed_integrand(cp, a, b, j, G_of_zeta(cp, a, b, j), reading == "sin_squared")
    else:
        raise ValueError(f"unknown reading {reading!r}")
    val = _trapz(f, quad_n)
    return val, abs(val - _trapz(f, quad_n // 2))


def caustic_orbit_length(cp: CausticParam, a: float, b: float) -> float:
    """Length of the ``j``-periodic orbits tangent to the caustic, from the top vertex.

    Successive vertices are found from the rotation in the coordinate
    ``u = F(phi - pi/2; k)``, inverted with Newton's method.
    """
    k = cp.k
    delta = 2.0 * elliptic_F(math.asin(cp.zeta / b), k)

    def u_of(phi):
        return elliptic_F(phi - math.pi / 2, k)

    phis = [math.pi / 2]
    for m in range(1, cp.j):
        target = m * delta
        phi = math.pi / 2 + 2 * math.pi * m / cp.j
        for _ in range(60):
            step = (u_of(phi) - target) * math.sqrt(1.0 - k * k * math.cos(phi) ** 2)
            phi -= step
            if abs(step) < 1e-15:
                break
        phis.append(phi)
    phis.append(math.pi / 2 + 2 * math.pi)
    P = np.array([[a * math.cos(p), b * math.sin(p)] for p in phis])
    return float(math.fsum(np.linalg.norm(np.diff(P, axis=0), axis=1)))


def oracle_report(a: float, b: float, j: int, quad_n: int = 256) -> OracleReport:
    cp = solve_zeta(a, b, j)
    G = G_of_zeta(cp, a, b, j)
    vals, conv = {}, {}
    for reading in ("sin_phi", "sin_squared", "action_angle"):
        try:
            vals[reading], conv[reading] = c_j_closed_form(a, b, j, quad_n, reading)
        except NegativeRadicand as exc:
            vals[reading], conv[reading] = float("nan"), str(exc)
    return OracleReport(
        a, b, j, cp.zeta, cp.k, float(omega_of_phi(cp, a, b, 0.0)), G,
        vals["sin_phi"], vals["sin_squared"], vals["action_angle"],
        caustic_orbit_length(cp, a, b), quad_n, conv,
    )
