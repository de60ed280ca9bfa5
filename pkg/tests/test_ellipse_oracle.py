import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ellipkinc, ellipk

from convex_billiards.billiard import PhasePoint, rotation_number
from convex_billiards.ellipse_oracle import (
    G_of_zeta,
    _printed_integrand,
    c_j_closed_form,
    carlson_rf,
    caustic_orbit_length,
    elliptic_F,
    elliptic_K,
    omega_of_phi,
    oracle_report,
    solve_zeta,
)
from convex_billiards.errors import ModulusOutOfRange, NegativeRadicand, NoRoot
from convex_billiards.geometry import Ellipse
from convex_billiards.invariants import circle_wave_invariant, wave_invariant
from convex_billiards.orbits import find_periodic
from convex_billiards.verify import poncelet


def agm(a, b):
    for _ in range(30):  # quadratic convergence; 30 steps is far past double precision
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def test_elliptic_examples():
    assert elliptic_F(0.7, 0.0) == pytest.approx(0.7, rel=1e-15)
    assert elliptic_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    k = 1 / math.sqrt(2)
    oracle = math.pi / (2 * agm(1.0, math.sqrt(1 - k * k)))
    assert elliptic_K(k) == pytest.approx(oracle, rel=1e-13)
    assert elliptic_K(k) == pytest.approx(1.8540746773, abs=1e-10)
    assert carlson_rf(1.0, 1.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ModulusOutOfRange):
        elliptic_K(1.0)


@given(st.floats(-7.0, 7.0), st.floats(0.0, 0.99))
def test_F_against_independent_library(s, k):
    assert elliptic_F(s, k) == pytest.approx(float(ellipkinc(s, k * k)), rel=1e-13, abs=1e-15)


def test_F_quarter_period_is_K():
    for k in np.linspace(0.0, 0.995, 50):
        assert elliptic_F(math.pi / 2, k) == pytest.approx(elliptic_K(k), rel=1e-13)
        assert elliptic_K(k) == pytest.approx(float(ellipk(k * k)), rel=1e-13)


def test_F_monotone():
    s = np.linspace(0.01, 3.0, 40)
    ks = np.linspace(0.0, 0.95, 20)
    table = np.array([[elliptic_F(si, k) for si in s] for k in ks])
    assert np.all(np.diff(table, axis=1) > 0)
    assert np.all(np.diff(table, axis=0) > 0)


def test_solve_zeta_circle_limit():
    for j in (3, 5, 11):
        cp = solve_zeta(1.0, 1.0, j)
        assert cp.k == 0.0
        assert cp.zeta == pytest.approx(math.sin(math.pi / j), rel=1e-12)
        assert cp.semi_axes[0] == pytest.approx(math.cos(math.pi / j), rel=1e-10)


def test_solve_zeta_residual_and_monotone():
    cp = solve_zeta(2.0, 1.0, 3)
    k = cp.k
    assert k * k == pytest.approx(3.0 / (4.0 - cp.zeta**2), rel=1e-14)
    residual = elliptic_F(math.asin(cp.zeta), k) / (2 * elliptic_K(k)) - 1 / 3
    assert abs(residual) <= 1e-12
    zetas = [solve_zeta(2.0, 1.0, j).zeta for j in range(3, 41)]
    assert np.all(np.diff(zetas) < 0)
    with pytest.raises(NoRoot):
        solve_zeta(2.0, 1.0, 2)


@pytest.mark.parametrize("ratio", [1.0, 1.25, 2.0])
def test_tangent_orbits_have_rotation_number_one_over_j(ratio):
    d = Ellipse(ratio, 1.0)
    for j in (3, 7, 16, 40):
        cp = solve_zeta(ratio, 1.0, j)
        p = PhasePoint(0.3 * d.perimeter, 0.0)
        phi = float(d.param(p.s))
        p = PhasePoint(p.s, float(omega_of_phi(cp, ratio, 1.0, phi)))
        assert rotation_number(d, p, 2000) == pytest.approx(1 / j, abs=1e-8)


def test_omega_of_phi(ellipse21):
    cp = solve_zeta(1.0, 1.0, 8)
    assert np.allclose(omega_of_phi(cp, 1.0, 1.0, np.linspace(0, 6, 7)), math.pi / 8, atol=1e-12)
    cp = solve_zeta(2.0, 1.0, 15)
    assert float(omega_of_phi(cp, 2.0, 1.0, 0.0)) == pytest.approx(math.asin(cp.zeta), rel=1e-15)
    orbit = find_periodic(ellipse21, 15, grid_n=16).orbits[0]
    phis = np.asarray(orbit.params)[:-1]
    assert np.allclose(omega_of_phi(cp, 2.0, 1.0, phis), orbit.angles[:-1], atol=1e-7)


def test_caustic_orbit_length_matches_loop(ellipse21):
    cp = solve_zeta(2.0, 1.0, 15)
    assert caustic_orbit_length(cp, 2.0, 1.0) == pytest.approx(find_periodic(ellipse21, 15, 16).t_j, rel=1e-12)


def test_G_circle_reduction():
    for j in (4, 9):
        cp = solve_zeta(1.0, 1.0, j)
        u = cp.zeta**2
        expected = (2 * j + 2) / (2 * math.sqrt(u) * math.sqrt(1 - u))
        assert G_of_zeta(cp, 1.0, 1.0, j) == pytest.approx(expected, rel=1e-8)


def test_G_positive_on_sweep():
    for a in (1.0, 1.25, 1.5, 2.0):
        for j in (3, 10, 25, 40):
            assert G_of_zeta(solve_zeta(a, 1.0, j), a, 1.0, j) > 0


def test_negative_radicand_reported():
    cp = solve_zeta(2.0, 1.0, 10)
    f = _printed_integrand(cp, 2.0, 1.0, 10, -1.0, False)
    with pytest.raises(NegativeRadicand) as info:
        f(np.linspace(0, 2 * math.pi, 8, endpoint=False))
    assert info.value.node == 0 and info.value.value < 0


def test_closed_form_readings(ellipse21):
    geo = wave_invariant(ellipse21, 20, quad_n=128).c_j
    action, conv = c_j_closed_form(2.0, 1.0, 20, reading="action_angle")
    assert action == pytest.approx(geo, rel=1e-4) and conv < 1e-10
    printed, _ = c_j_closed_form(2.0, 1.0, 20, reading="sin_phi")
    squared, _ = c_j_closed_form(2.0, 1.0, 20, reading="sin_squared")
    assert abs(printed - squared) > 1e-6  # both are reported when they differ
    for j in (10, 11):
        for r in ("sin_phi", "sin_squared", "action_angle"):
            assert np.sign(c_j_closed_form(2.0, 1.0, j, reading=r)[0]) == (-1) ** (j + 1)
    with pytest.raises(ValueError):
        c_j_closed_form(2.0, 1.0, 20, quad_n=64)


def test_closed_form_circle():
    for j in (5, 10):
        val, _ = c_j_closed_form(1.0, 1.0, j, reading="action_angle")
        assert val == pytest.approx(circle_wave_invariant(1.0, j), rel=1e-6)


def test_circle_limit_continuity():
    deltas = (1e-2, 1e-3, 1e-4)
    vals = [c_j_closed_form(1 + dl, 1.0, 12, reading="action_angle")[0] for dl in deltas]
    limit = (10 * vals[2] - vals[1]) / 9
    assert limit == pytest.approx(circle_wave_invariant(1.0, 12), rel=1e-6)


@pytest.mark.parametrize("j", [5, 12, 25])
def test_poncelet_closure(j):
    res = poncelet(2.0, 1.0, j)
    assert res["closure_over_perimeter"] <= 1e-8
    assert res["length_spread"] <= 1e-9
    assert res["rotation_error"] <= 1e-8


def test_oracle_report_fields():
    rep = oracle_report(2.0, 1.0, 20).as_dict()
    for key in ("zeta", "k", "omega_at_phi0", "G", "c_j_sin_radical", "c_j_sin_squared_radical", "L_j"):
        assert math.isfinite(rep[key])
