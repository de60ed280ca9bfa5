"""Acceptance checks shared by ``billiard verify`` and the test suite.

Every check returns a :class:`CheckResult`; the numeric details are kept so a
failing run says by how much it missed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .billiard import (
    PhasePoint,
    jacobian,
    lazutkin_iterated_jacobian_defect,
    one_rotation_state,
    orbit_param,
    rotation_number,
    step_param,
    symplectic_det,
)
from .ellipse_oracle import c_j_closed_form, omega_of_phi, solve_zeta
from .geometry import BoundaryNormalCoords, Ellipse, FourierRadial, circle
from .invariants import a_factor_boundary, circle_wave_invariant, principal_symbol, wave_invariant
from .orbits import find_eight_orbits, find_periodic, loop_function, resimulate
from .trace_check import Window, ft_chi_plus, symbol_samples, trace_pipeline

READINGS = ("sin_phi", "sin_squared", "action_angle")


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0


def _timed(number, name, fn, *args, **kwargs) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn(*args, **kwargs)
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def standard_domains():
    """The three tables used for domain-generic properties."""
    return {
        "circle": circle(1.0),
        "ellipse": Ellipse(1.2, 1.0),
        "fourier": FourierRadial(1.0, (0.0, 0.0, 0.01), (0.0, 0.01)),
    }


# -- 1, 2: circle closed forms ------------------------------------------------------

def _circle_periodic(radii=(1.0, 2.5), js=range(5, 41), grid_n=16):
    worst_len = worst_om = worst_dw = 0.0
    for R in radii:
        d = circle(R)
        for j in js:
            exact = 2 * j * R * math.sin(math.pi / j)
            rep = find_periodic(d, j, grid_n=grid_n)
            worst_len = max(worst_len, abs(rep.t_j / exact - 1), abs(rep.T_j / exact - 1))
            for s in loop_function(d, j, grid_n):
                worst_om = max(worst_om, abs(s.omega1 * j / math.pi - 1), abs(s.omega2 * j / math.pi - 1))
                worst_dw = max(worst_dw, abs(s.domega1_dqprime * 2 * j * R - 1))
    detail = {"length_relerr": worst_len, "omega_relerr": worst_om, "domega_relerr": worst_dw}
    return worst_len <= 1e-9 and worst_om <= 1e-8 and worst_dw <= 1e-8, detail


def _circle_invariant(radii=(1.0, 2.5), js=range(5, 41), quad_n=64):
    worst = 0.0
    for R in radii:
        d = circle(R)
        for j in js:
            c = wave_invariant(d, j, quad_n=quad_n).c_j
            worst = max(worst, abs(c / circle_wave_invariant(R, j) - 1))
    return worst <= 1e-8, {"c_j_relerr": worst}


# -- 3: ellipse cross-pipeline -----------------------------------------------------

def _ellipse_cross(a=2.0, b=1.0, js=(10, 20, 30), quad_n=256, tol=1e-4):
    d = Ellipse(a, b)
    rel = {r: {} for r in READINGS}
    geo = {}
    for j in js:
        geo[j] = wave_invariant(d, j, quad_n=quad_n).c_j
        for r in READINGS:
            val, _ = c_j_closed_form(a, b, j, quad_n=quad_n, reading=r)
            rel[r][j] = (val - geo[j]) / geo[j]
    matching = [r for r in READINGS if all(abs(v) <= tol for v in rel[r].values())]
    chosen = matching[0] if matching else None
    limit = _circle_limit(chosen or "sin_phi")
    detail = {"geometric": geo, "relative_difference": rel, "chosen_reading": chosen, "circle_limit": limit}
    return bool(chosen) and limit["relerr"] <= 1e-6, detail


def _circle_limit(reading, j=10, deltas=(1e-2, 1e-3, 1e-4)):
    """Richardson extrapolation of ``c_j(a = 1 + delta, b = 1)`` to ``delta = 0``."""
    vals = [c_j_closed_form(1.0 + dl, 1.0, j, quad_n=256, reading=reading)[0] for dl in deltas]
    r = deltas[0] / deltas[1]
    extrapolated = (r * vals[-1] - vals[-2]) / (r - 1.0)
    exact = circle_wave_invariant(1.0, j)
    return {"reading": reading, "j": j, "values": vals, "extrapolated": extrapolated, "exact": exact,
            "relerr": abs(extrapolated / exact - 1)}


# -- 4: eight orbits ------------------------------------------------------------

def eight_orbit_points(d, mu, s0=0.3):
    x = d.from_boundary_normal(BoundaryNormalCoords(mu, s0))
    y = d.from_boundary_normal(BoundaryNormalCoords(mu, s0 + 2.0 * mu))
    return x, y


def _eight_orbits(a=1.5, b=1.0, j=20, mu=1e-6):
    d = Ellipse(a, b)
    detail = {}
    ok = True
    for m in (mu, mu / 2):
        x, y = eight_orbit_points(d, m)
        orbits = find_eight_orbits(d, x, y, j)
        err = max(resimulate(d, o) for o in orbits) / d.perimeter
        detail[m] = {"count": len(orbits), "configs": [o.config + "/" + o.direction for o in orbits],
                     "resim_err_over_perimeter": err}
        ok = ok and len(orbits) == 8 and err <= 1e-8
    return ok, detail


# -- 5: Lazutkin Jacobian structure ----------------------------------------------

def lazutkin_defects(d, js=(64, 128, 256), n_start=4):
    out = {}
    for j in js:
        out[j] = max(lazutkin_iterated_jacobian_defect(d, one_rotation_state(d, s, j), j)
                     for s in np.linspace(0, d.perimeter, n_start, endpoint=False))
    return out


def symplectic_residual(d, n=1000, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, d.perimeter, n)
    th = rng.uniform(0.05, math.pi - 0.05, n)
    worst = 0.0
    for si, ti in zip(s, th):
        p = PhasePoint(float(si), float(ti))
        J = jacobian(d, p)
        t1, th1, _ = step_param(d, np.array(d.param(si)), np.array(ti))
        worst = max(worst, abs(float(symplectic_det(J, ti, float(th1))) - 1.0))
    return worst


def _lazutkin(a=1.2, b=1.0):
    d = Ellipse(a, b)
    defects = lazutkin_defects(d)
    js = np.array(sorted(defects))
    exponent = -np.polyfit(np.log(js), np.log([defects[j] for j in js]), 1)[0]
    sym = {name: symplectic_residual(dom, n=1000) for name, dom in standard_domains().items()}
    detail = {"defects": defects, "decay_exponent": float(exponent), "symplectic_residual": sym}
    return exponent >= 0.8 and max(sym.values()) <= 1e-9, detail


# -- 6: angle band -----------------------------------------------------------------

def angle_band(d, j, n_start=2):
    """Extremes of ``j * theta_k`` over one-rotation orbits from ``n_start`` base points."""
    lo, hi = math.inf, 0.0
    for s in np.linspace(0, d.perimeter, n_start, endpoint=False):
        p = one_rotation_state(d, float(s), j)
        _, ths, _ = orbit_param(d, d.param(s), p.theta, j)
        lo, hi = min(lo, j * float(ths.min())), max(hi, j * float(ths.max()))
    return lo, hi


def _angle_band(js=(50, 100, 200, 400), margin=0.05):
    detail, ok = {}, True
    for name, d in standard_domains().items():
        bands = {j: angle_band(d, j) for j in js}
        c1 = (1 - margin) * bands[js[0]][0]
        c2 = (1 + margin) * bands[js[0]][1]
        inside = all(c1 <= lo and hi <= c2 for lo, hi in bands.values())
        detail[name] = {"C1": c1, "C2": c2, "bands": bands, "inside": inside}
        ok = ok and inside
    return ok, detail


# -- 7: stationary-phase order --------------------------------------------------------

DEGENERATE_CASES = (("circle", lambda: circle(1.0), 10), ("ellipse", lambda: Ellipse(2.0, 1.0), 10))
NONDEGENERATE_DOMAIN = lambda: FourierRadial(1.0, (0.0, 0.0, 0.01))  # noqa: E731
NONDEGENERATE_J = 3
WINDOW_ROLLOFFS = (0.2, 0.3)


def _agree(f1, f2, k=2.0):
    return abs(f1.fitted_slope - f2.fitted_slope) <= k * math.hypot(f1.slope_stderr, f2.slope_stderr)


def _order_check(tol=0.05):
    detail, ok = {}, True
    for name, make, j in DEGENERATE_CASES:
        d = make()
        samples = symbol_samples(d, j, 64)
        fits = [trace_pipeline(d, j, rolloff=r, samples=samples).fit for r in WINDOW_ROLLOFFS]
        good = all(abs(f.fitted_slope - 0.5) <= tol for f in fits) and _agree(*fits)
        detail[name] = {"j": j, "slopes": [f.fitted_slope for f in fits], "stderr": [f.slope_stderr for f in fits]}
        ok = ok and good
    d = NONDEGENERATE_DOMAIN()
    samples = symbol_samples(d, NONDEGENERATE_J, 128)
    fits = [trace_pipeline(d, NONDEGENERATE_J, rolloff=r, samples=samples).fit for r in WINDOW_ROLLOFFS]
    good = all(abs(f.fitted_slope) <= tol for f in fits) and _agree(*fits)
    detail["perturbed"] = {"j": NONDEGENERATE_J, "slopes": [f.fitted_slope for f in fits],
                           "stderr": [f.slope_stderr for f in fits],
                           "t_j": float(samples[1].min()), "T_j": float(samples[1].max())}
    return ok and good, detail


def localized_windows(T_j, rolloffs=(0.05, 0.08), width=0.1):
    """Windows flat on ``[T_j, T_j + width]`` that reach only the longest critical length."""
    return [Window(T_j, T_j + width, r) for r in rolloffs]


# -- 8: Poncelet closure ----------------------------------------------------------

def poncelet(a, b, j, n_launch=16):
    d = Ellipse(a, b)
    cp = solve_zeta(a, b, j)
    closure, lengths = [], []
    for phi in np.linspace(0.0, 2 * math.pi, n_launch, endpoint=False):
        ts, _, Ls = orbit_param(d, phi, float(omega_of_phi(cp, a, b, phi)), j)
        closure.append(float(np.linalg.norm(d.point_t(ts[-1]) - d.point_t(ts[0]))))
        lengths.append(math.fsum(Ls))
    p0 = PhasePoint(0.0, float(omega_of_phi(cp, a, b, 0.0)))
    rot = rotation_number(d, p0, 1000)
    return {"closure_over_perimeter": max(closure) / d.perimeter,
            "length_spread": float(np.ptp(lengths) / np.mean(lengths)),
            "rotation_error": abs(rot - 1.0 / j)}


def _poncelet(a=2.0, b=1.0, js=(5, 12, 25)):
    detail = {j: poncelet(a, b, j) for j in js}
    ok = all(v["closure_over_perimeter"] <= 1e-8 and v["rotation_error"] <= 1e-8 and v["length_spread"] <= 1e-9
             for v in detail.values())
    return ok, detail


# -- 9: homogeneous Fourier transform -------------------------------------------------

def _ft_identity(eps=1e-3):
    res = {(a, t): abs(ft_chi_plus(a, t, eps)) for a in (0.0, 0.5, 1.0, 1.5) for t in (-2.0, -1.0, 1.0, 2.0)}
    worst = max(res.values())
    return worst <= 1e-8, {"max_residual": worst}


# -- 10: property suites ----------------------------------------------------------

def exact_area(d) -> float:
    """Enclosed area from the shape parameters alone, independent of any boundary quadrature."""
    if isinstance(d, Ellipse):
        return math.pi * d.a * d.b
    # r = R (1 + sum c_k cos k t + s_k sin k t): area = (1/2) int r^2 dt
    return math.pi * d.R**2 * (1.0 + 0.5 * (sum(c * c for c in d.cos) + sum(v * v for v in d.sin)))


def geometry_properties(d, n=100, seed=1):
    rng = np.random.default_rng(seed)
    ell = d.perimeter
    s = rng.uniform(0, ell, n)
    periodic = float(np.max(np.linalg.norm(d.point(s + ell) - d.point(s), axis=1))) / ell
    h = 1e-5
    speed = np.linalg.norm(d.point(s + h) - d.point(s - h), axis=1) / (2 * h)
    frenet_h = 1e-4
    dT = (d.tangent(s + frenet_h) - d.tangent(s - frenet_h)) / (2 * frenet_h)
    kN = -d.curvature(s)[:, None] * d.normal(s)
    tq = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
    xn = d.position_dot_normal(d.arclength(tq), d.centroid)
    divergence = float(np.sum(xn * d.speed_t(tq)) * 2 * math.pi / tq.size - 2 * exact_area(d))
    worst_rt = 0.0
    for mu in np.linspace(0, 0.5 / d.kappa_max, 5):
        for phi in np.linspace(0, ell, 8, endpoint=False):
            c = d.to_boundary_normal(d.from_boundary_normal(BoundaryNormalCoords(float(mu), float(phi))))
            dphi = (c.phi - phi + ell / 2) % ell - ell / 2
            worst_rt = max(worst_rt, abs(c.mu - mu) / ell, abs(dphi) / ell)
    return {
        "periodicity": periodic,
        "unit_speed": float(np.max(np.abs(speed - 1))),
        "frenet": float(np.max(np.abs(dT - kN))),
        "divergence": abs(divergence),
        "normal_coords_roundtrip": worst_rt,
    }


GEOMETRY_TOLERANCES = {"periodicity": 1e-12, "unit_speed": 1e-10, "frenet": 1e-6, "divergence": 1e-8,
                       "normal_coords_roundtrip": 1e-10}


def _properties():
    detail, ok = {}, True
    for name, d in standard_domains().items():
        props = geometry_properties(d)
        detail[name] = props
        ok = ok and all(props[k] <= tol for k, tol in GEOMETRY_TOLERANCES.items())
    d = Ellipse(2.0, 1.0)
    xs = np.array([1.0, 2.0, 4.0, 8.0])
    vals = np.array([principal_symbol(d, 15, 0.7, x) for x in xs])
    power = np.polyfit(np.log(xs), np.log(vals), 1)[0]
    detail["xi_power_error"] = abs(power - 0.5)
    ok = ok and detail["xi_power_error"] < 1e-12
    r = 1.7
    for name, dom in (("ellipse", Ellipse(1.2, 1.0)), ("fourier", FourierRadial(1.0, (0.0, 0.0, 0.01)))):
        j = 12
        c1 = wave_invariant(dom, j, quad_n=64, force=True).c_j
        c2 = wave_invariant(dom.scaled(r), j, quad_n=64, force=True).c_j
        a1 = a_factor_boundary(dom, j, 0.4)
        a2 = a_factor_boundary(dom.scaled(r), j, 0.4 * r)
        detail[f"dilation_c_{name}"] = abs(c2 / (r**1.5 * c1) - 1)
        detail[f"dilation_A_{name}"] = abs(a2 * r / a1 - 1)
        ok = ok and detail[f"dilation_c_{name}"] <= 1e-8 and detail[f"dilation_A_{name}"] <= 1e-8
    return ok, detail


CHECKS = {
    1: ("circle closed forms", _circle_periodic),
    2: ("circle wave invariant", _circle_invariant),
    3: ("ellipse cross-pipeline", _ellipse_cross),
    4: ("eight orbits", _eight_orbits),
    5: ("Lazutkin Jacobian", _lazutkin),
    6: ("angle band", _angle_band),
    7: ("stationary-phase order", _order_check),
    8: ("Poncelet closure", _poncelet),
    9: ("homogeneous FT identity", _ft_identity),
    10: ("property suites", _properties),
}

SUITES = {"circle": (1, 2), "all": tuple(CHECKS)}


def run_check(number: int) -> CheckResult:
    name, fn = CHECKS[number]
    return _timed(number, name, fn)


def run_suite(suite: str = "all") -> list[CheckResult]:
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    return [run_check(n) for n in SUITES[suite]]
