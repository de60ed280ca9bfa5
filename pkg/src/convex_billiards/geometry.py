"""Smooth strictly convex planar domains.

Two analytic boundary families are supported: ellipses ``(a cos t, b sin t)``
and Fourier-perturbed circles in radial form
``r(t) = R (1 + sum_k c_k cos kt + s_k sin kt)``.  Every boundary quantity is
available either in the curve parameter ``t`` (suffix ``_t``) or in arclength
``s``; arclength origin is ``t = 0`` and orientation is counterclockwise.

All public geometric quantities accept scalars or numpy arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CoordinateOutOfRange, OriginOutside, SpecError

TWO_PI = 2.0 * math.pi

_N_PANELS = 1024
_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W
_CONVEXITY_GRID = 4096


def cross(u, v):
    """z-component of the planar cross product (broadcasting over ``[..., 2]``)."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]


@dataclass(frozen=True)
class BoundaryNormalCoords:
    """Distance ``mu`` into the domain and foot-point arclength ``phi``."""

    mu: float
    phi: float


class _CumulativeTable:
    """Cumulative integral ``I(t) = int_0^t g`` of a smooth 2pi-periodic density.

    ``I`` is extended to all real ``t`` by ``I(t + 2pi) = I(t) + total``.
    Panels of Gauss-Legendre quadrature keep the table exact to rounding for
    analytic densities; the inverse uses interpolation and Newton refinement.
    """

    def __init__(self, density, n_panels: int = _N_PANELS):
        self.density = density
        self.h = TWO_PI / n_panels
        self.n_panels = n_panels
        edges = np.arange(n_panels) * self.h
        nodes = edges[:, None] + self.h * _GL_X[None, :]
        panel = self.h * (density(nodes) @ _GL_W)
        self.edges = np.concatenate([edges, [TWO_PI]])
        self.cum = np.concatenate([[0.0], np.cumsum(panel)])
        self.total = float(self.cum[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        turns = np.floor(t / TWO_PI)
        tr = t - turns * TWO_PI
        idx = np.minimum((tr / self.h).astype(int), self.n_panels - 1)
        left = idx * self.h
        width = tr - left
        nodes = left[..., None] + width[..., None] * _GL_X
        partial = width * (self.density(nodes) @ _GL_W)
        return turns * self.total + self.cum[idx] + partial

    def inverse(self, value):
        value = np.asarray(value, dtype=float)
        turns = np.floor(value / self.total)
        vr = value - turns * self.total
        t = np.interp(vr, self.cum, self.edges)
        for _ in range(6):
            step = (self(t) - vr) / self.density(t)
            t = t - step
            if np.all(np.abs(step) < 1e-15):
                break
        return t + turns * TWO_PI


class ConvexDomain:
    """Base class; subclasses provide ``_derivs(t)`` returning ``P, P', P'', P'''``.

    Instances are immutable after construction.  Construction validates strict
    convexity on a 4096-point grid and raises :class:`SpecError` otherwise.
    """

    kind: str = "abstract"

    def __init__(self):
        t = np.linspace(0.0, TWO_PI, _CONVEXITY_GRID, endpoint=False)
        kappa = self.curvature_t(t)
        bad = np.flatnonzero(~(kappa > 0.0))
        if bad.size:
            i = int(bad[0])
            raise SpecError(
                f"boundary is not strictly convex: curvature {kappa[i]:.6g} <= 0 "
                f"at grid point {i} (t = {t[i]:.6f})"
            )
        self.kappa_min = float(kappa.min())
        self.kappa_max = float(kappa.max())
        self._arc = _CumulativeTable(self.speed_t)
        self.perimeter = self._arc.total
        self._laz = _CumulativeTable(lambda u: self.curvature_t(u) ** (2.0 / 3.0) * self.speed_t(u))
        self.lazutkin_total = self._laz.total
        # trapezoid in t is spectrally accurate for these periodic integrands
        tq = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        P, dP, _, _ = self._derivs(tq)
        w = TWO_PI / tq.size
        cr = cross(P, dP)
        self.area = 0.5 * float(np.sum(cr)) * w
        self.centroid = tuple(float(v) for v in (np.sum(P * cr[:, None], axis=0) * w / (3.0 * self.area)))
        self._grid_points = self.point_t(t)
        self._grid_normals = self.normal_t(t)
        self._grid_t = t

    # -- subclass interface -------------------------------------------------
    def _derivs(self, t):
        raise NotImplementedError

    def scaled(self, r: float) -> "ConvexDomain":
        """The dilation of the domain by ``r`` about the origin."""
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    # -- parameter-based primitives ----------------------------------------
    def point_t(self, t):
        return self._derivs(np.asarray(t, dtype=float))[0]

    def speed_t(self, t):
        dP = self._derivs(np.asarray(t, dtype=float))[1]
        return np.hypot(dP[..., 0], dP[..., 1])

    def tangent_t(self, t):
        dP = self._derivs(np.asarray(t, dtype=float))[1]
        return dP / np.hypot(dP[..., 0], dP[..., 1])[..., None]

    def normal_t(self, t):
        """Outward unit normal (right of the ccw tangent)."""
        T = self.tangent_t(t)
        return np.stack([T[..., 1], -T[..., 0]], axis=-1)

    def curvature_t(self, t):
        _, d1, d2, _ = self._derivs(np.asarray(t, dtype=float))
        sp = np.hypot(d1[..., 0], d1[..., 1])
        return cross(d1, d2) / sp**3

    def curvature_deriv_t(self, t):
        """d kappa / ds (arclength derivative) at parameter ``t``."""
        _, d1, d2, d3 = self._derivs(np.asarray(t, dtype=float))
        sp2 = dot(d1, d1)
        sp = np.sqrt(sp2)
        dk_dt = (cross(d1, d3) * sp2 - 3.0 * cross(d1, d2) * dot(d1, d2)) / sp**5
        return dk_dt / sp

    # -- arclength conversions ----------------------------------------------
    def arclength(self, t):
        """Arclength from ``t = 0``; continuous and unwrapped for all real ``t``."""
        return self._arc(t)

    def param(self, s):
        """Inverse of :meth:`arclength` (unwrapped)."""
        return self._arc.inverse(s)

    def lazutkin_integral(self, t):
        """``int_0^t kappa^{2/3} ds`` (unwrapped)."""
        return self._laz(t)

    def lazutkin_param(self, value):
        return self._laz.inverse(value)

    # -- arclength-based primitives ------------------------------------------
    def point(self, s):
        return self.point_t(self.param(s))

    def tangent(self, s):
        return self.tangent_t(self.param(s))

    def normal(self, s):
        return self.normal_t(self.param(s))

    def curvature(self, s):
        return self.curvature_t(self.param(s))

    def radius_of_curvature(self, s):
        return 1.0 / self.curvature(s)

    # -- derived geometry -----------------------------------------------------
    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(dot(self._grid_points - p, self._grid_normals) > 0.0))

    def position_dot_normal(self, s, origin=(0.0, 0.0)):
        """``X(q) . N(q)`` with ``X`` measured from ``origin``."""
        origin = np.asarray(origin, dtype=float)
        if not self.contains(origin):
            raise OriginOutside(f"origin {tuple(origin)} is not interior to the domain")
        t = self.param(s)
        return dot(self.point_t(t) - origin, self.normal_t(t))

    def warp_factor(self, c: BoundaryNormalCoords) -> float:
        """Metric coefficient ``f(mu, phi) = (1 - mu kappa(phi))^2``."""
        k = float(self.curvature(c.phi))
        if c.mu * k >= 1.0 or c.mu < 0.0:
            raise CoordinateOutOfRange(f"mu = {c.mu} outside [0, 1/kappa = {1.0 / k})")
        return (1.0 - c.mu * k) ** 2

    def from_boundary_normal(self, c: BoundaryNormalCoords):
        t = self.param(c.phi)
        return self.point_t(t) - c.mu * self.normal_t(t)

    def to_boundary_normal(self, p) -> BoundaryNormalCoords:
        p = np.asarray(p, dtype=float)
        d2 = np.sum((self._grid_points - p) ** 2, axis=1)
        t = float(self._grid_t[int(np.argmin(d2))])
        for _ in range(50):
            P, d1, dd2, _ = self._derivs(np.array(t))
            r = p - P
            f = float(dot(r, d1))
            fp = float(-dot(d1, d1) + dot(r, dd2))
            if fp >= 0.0:  # at or beyond the focal curve the foot point is not a distance minimum
                raise CoordinateOutOfRange(f"point {tuple(p)} is outside the tubular neighborhood")
            step = f / fp
            t -= step
            if abs(step) < 1e-16:
                break
        P = self.point_t(t)
        mu = float(dot(P - p, self.normal_t(t)))
        if mu < -1e-14 * self.perimeter or mu * self.kappa_max >= 1.0:
            raise CoordinateOutOfRange(
                f"point {tuple(p)} outside the tubular neighborhood (mu = {mu:.6g}, "
                f"1/kappa_max = {1.0 / self.kappa_max:.6g})"
            )
        s = float(self.arclength(t)) % self.perimeter
        return BoundaryNormalCoords(mu=max(mu, 0.0), phi=s)

    def wrap(self, s):
        return np.mod(s, self.perimeter)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()})"


@dataclass(repr=False, eq=False)
class Ellipse(ConvexDomain):
    a: float
    b: float
    kind: str = field(default="ellipse", init=False)

    def __post_init__(self):
        if not (self.a >= self.b > 0.0):
            raise SpecError(f"ellipse requires a >= b > 0, got a={self.a}, b={self.b}")
        ConvexDomain.__init__(self)


    def _derivs(self, t):
        c, s = np.cos(t), np.sin(t)
        a, b = self.a, self.b
        P = np.stack([a * c, b * s], axis=-1)
        d1 = np.stack([-a * s, b * c], axis=-1)
        d2 = -P
        d3 = -d1
        return P, d1, d2, d3

    def scaled(self, r):
        return Ellipse(self.a * r, self.b * r)

    def to_spec(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}

    @property
    def eccentricity(self):
        return math.sqrt(1.0 - (self.b / self.a) ** 2)


def circle(R: float = 1.0) -> Ellipse:
    return Ellipse(R, R)


@dataclass(repr=False, eq=False)
class FourierRadial(ConvexDomain):
    R: float
    cos: tuple = ()
    sin: tuple = ()
    kind: str = field(default="fourier", init=False)

    def __post_init__(self):
        if not self.R > 0.0:
            raise SpecError(f"base radius must be positive, got R={self.R}")
        self.cos = tuple(float(v) for v in self.cos)
        self.sin = tuple(float(v) for v in self.sin)
        n = max(len(self.cos), len(self.sin))
        c = np.zeros(n + 1)
        s = np.zeros(n + 1)
        c[1 : len(self.cos) + 1] = self.cos
        s[1 : len(self.sin) + 1] = self.sin
        self._k = np.arange(n + 1, dtype=float)
        self._c = c
        self._s = s
        tt = np.linspace(0.0, TWO_PI, _CONVEXITY_GRID, endpoint=False)
        r = self._radius(tt)[0]
        if np.any(r <= 0.0):
            i = int(np.flatnonzero(r <= 0.0)[0])
            raise SpecError(f"radial function non-positive at grid point {i} (t = {tt[i]:.6f})")
        ConvexDomain.__init__(self)


    def _radius(self, t):
        kt = np.multiply.outer(t, self._k)
        ck, sk = np.cos(kt), np.sin(kt)
        k = self._k
        c, s = self._c, self._s
        r = 1.0 + ck @ c + sk @ s
        r1 = -sk @ (k * c) + ck @ (k * s)
        r2 = -ck @ (k**2 * c) - sk @ (k**2 * s)
        r3 = sk @ (k**3 * c) - ck @ (k**3 * s)
        return self.R * r, self.R * r1, self.R * r2, self.R * r3

    def _derivs(self, t):
        r, r1, r2, r3 = self._radius(t)
        c, s = np.cos(t), np.sin(t)
        er = np.stack([c, s], axis=-1)
        et = np.stack([-s, c], axis=-1)
        P = r[..., None] * er
        d1 = r1[..., None] * er + r[..., None] * et
        d2 = (r2 - r)[..., None] * er + (2.0 * r1)[..., None] * et
        d3 = (r3 - 3.0 * r1)[..., None] * er + (3.0 * r2 - r)[..., None] * et
        return P, d1, d2, d3

    def scaled(self, r):
        return FourierRadial(self.R * r, self.cos, self.sin)

    def to_spec(self):
        return {"kind": "fourier", "R": self.R, "cos": list(self.cos), "sin": list(self.sin)}


def from_spec(spec: dict) -> ConvexDomain:
    """Build a domain from its JSON-style description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecError("domain spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "ellipse":
            return Ellipse(float(spec["a"]), float(spec["b"]))
        if kind == "circle":
            return circle(float(spec.get("R", 1.0)))
        if kind == "fourier":
            return FourierRadial(float(spec.get("R", 1.0)), tuple(spec.get("cos", ())), tuple(spec.get("sin", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed {kind} spec: {exc}") from exc
    raise SpecError(f"unknown domain kind {kind!r}")


def load_domain(path) -> ConvexDomain:
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read domain file {path}: {exc}") from exc
    return from_spec(spec)
