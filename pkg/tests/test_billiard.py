import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convex_billiards.billiard import (
    LazutkinPoint,
    LiftedPhasePoint,
    PhasePoint,
    billiard_map,
    billiard_map_inverse,
    from_lazutkin,
    iterate_lifted,
    jacobian,
    lazutkin_alpha_param,
    lazutkin_iterated_jacobian_defect,
    one_rotation_state,
    orbit_param,
    rotation_number,
    step_param,
    symplectic_det,
    to_lazutkin,
)
from convex_billiards.ellipse_oracle import omega_of_phi, solve_zeta
from convex_billiards.errors import NotOneRotation, TangentialState
from convex_billiards.geometry import Ellipse, FourierRadial, circle
from convex_billiards.verify import angle_band, lazutkin_defects

DOMAINS = [circle(1.0), Ellipse(1.2, 1.0), FourierRadial(1.0, (0.0, 0.02, 0.01), (0.0, 0.01))]


def lifted_step(d, s, th, n=1):
    p = iterate_lifted(d, LiftedPhasePoint(s, th), n)
    return np.array([p.s_lift, p.theta])


def fd_jacobian(d, s, th, n=1, h=1e-6):
    h = min(h, th / 10, (math.pi - th) / 10)
    cols = []
    for ds, dth in ((h, 0.0), (0.0, h)):
        cols.append((lifted_step(d, s + ds, th + dth, n) - lifted_step(d, s - ds, th - dth, n)) / (2 * h))
    return np.array(cols).T


def test_circle_map_examples(unit_circle):
    p = billiard_map(unit_circle, PhasePoint(0.0, math.pi / 3))
    assert p.s == pytest.approx(2 * math.pi / 3, abs=1e-12) and p.theta == pytest.approx(math.pi / 3, abs=1e-12)
    p = billiard_map(unit_circle, PhasePoint(0.0, math.pi / 2))
    assert p.s == pytest.approx(math.pi, abs=1e-12) and p.theta == pytest.approx(math.pi / 2, abs=1e-12)
    back = billiard_map_inverse(unit_circle, PhasePoint(2 * math.pi / 3, math.pi / 3))
    assert min(back.s, 2 * math.pi - back.s) == pytest.approx(0.0, abs=1e-12)
    assert back.theta == pytest.approx(math.pi / 3, abs=1e-12)


def test_ellipse_bouncing_ball(ellipse21):
    half = ellipse21.perimeter / 2
    p = billiard_map(ellipse21, PhasePoint(0.0, math.pi / 2))
    assert p.s == pytest.approx(half, abs=1e-12) and p.theta == pytest.approx(math.pi / 2, abs=1e-12)
    prev = billiard_map_inverse(ellipse21, PhasePoint(half, math.pi / 2))
    assert min(prev.s, ellipse21.perimeter - prev.s) == pytest.approx(0.0, abs=1e-12)


def test_tangential_states_rejected(unit_circle):
    for th in (1e-10, math.pi - 1e-10):
        with pytest.raises(TangentialState):
            billiard_map(unit_circle, PhasePoint(0.0, th))


def test_grazing_chords(generic):
    p = PhasePoint(0.4, 1e-6)
    q = billiard_map(generic, p)
    assert billiard_map_inverse(generic, q).s == pytest.approx(0.4, abs=1e-10)


@given(st.sampled_from(range(3)), st.floats(0.0, 7.0), st.floats(0.01, math.pi - 0.01))
def test_inverse_round_trip(k, s, th):
    d = DOMAINS[k]
    s = s % d.perimeter
    back = billiard_map_inverse(d, billiard_map(d, PhasePoint(s, th)))
    ds = (back.s - s + d.perimeter / 2) % d.perimeter - d.perimeter / 2
    assert abs(ds) <= 1e-10 and abs(back.theta - th) <= 1e-10


@given(st.sampled_from(range(3)), st.floats(0.0, 7.0), st.floats(0.01, math.pi - 0.01))
def test_reversibility(k, s, th):
    """With R(s, theta) = (s, pi - theta), the inverse map equals R o map o R."""
    d = DOMAINS[k]
    s = s % d.perimeter
    inv = billiard_map_inverse(d, PhasePoint(s, th))
    conj = billiard_map(d, PhasePoint(s, math.pi - th))
    assert abs((inv.s - conj.s + d.perimeter / 2) % d.perimeter - d.perimeter / 2) <= 1e-10
    assert inv.theta == pytest.approx(math.pi - conj.theta, abs=1e-10)


def test_iterate_lifted(unit_circle):
    for j in (3, 7, 12):
        p = iterate_lifted(unit_circle, LiftedPhasePoint(0.0, math.pi / j), j)
        assert p.s_lift == pytest.approx(2 * math.pi, abs=1e-12) and p.theta == pytest.approx(math.pi / j)
    p = iterate_lifted(unit_circle, LiftedPhasePoint(0.0, math.pi / 2), 2)
    assert p.s_lift == pytest.approx(2 * math.pi, abs=1e-12)
    assert iterate_lifted(unit_circle, LiftedPhasePoint(0.3, 1.0), 0) == LiftedPhasePoint(0.3, 1.0)
    q = LiftedPhasePoint(0.5, 1.1)
    assert iterate_lifted(unit_circle, iterate_lifted(unit_circle, q, 5), -5).s_lift == pytest.approx(0.5, abs=1e-11)


def test_lifted_coordinate_is_monotone(generic):
    ts, _, _ = orbit_param(generic, 0.2, 0.3, 200)
    assert np.all(np.diff(generic.arclength(ts)) > 0)


def test_jacobian_symplectic_circle(unit_circle):
    p = PhasePoint(0.0, math.pi / 2)
    J = jacobian(unit_circle, p)
    assert float(symplectic_det(J, p.theta, p.theta)) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.0, 2 * math.pi), st.floats(0.05, math.pi - 0.05))
def test_jacobian_matches_finite_differences(s, th):
    for d in (circle(1.0), Ellipse(2.0, 1.0)):
        J = jacobian(d, PhasePoint(s % d.perimeter, th))
        assert np.max(np.abs(J - fd_jacobian(d, s % d.perimeter, th))) <= 1e-6


def test_bouncing_ball_monodromy(ellipse21):
    """Two-bounce Jacobian of the major-axis orbit against finite differences."""
    d = ellipse21
    p0 = PhasePoint(0.0, math.pi / 2)
    J1 = jacobian(d, p0)
    J2 = jacobian(d, billiard_map(d, p0))
    M = J2 @ J1
    assert np.max(np.abs(M - fd_jacobian(d, 0.0, math.pi / 2, n=2))) <= 1e-6 * np.max(np.abs(M))
    # hyperbolic along the major axis: |trace| > 2
    assert abs(np.trace(M)) > 2


def test_symplecticity_random_states():
    rng = np.random.default_rng(3)
    for d in DOMAINS:
        s = rng.uniform(0, d.perimeter, 300)
        th = rng.uniform(1e-3, math.pi - 1e-3, 300)
        for si, ti in zip(s, th):
            _, th1, _ = step_param(d, np.array(d.param(si)), np.array(ti))
            J = jacobian(d, PhasePoint(float(si), float(ti)))
            assert abs(float(symplectic_det(J, ti, float(th1))) - 1) <= 1e-9


def test_lazutkin_examples(unit_circle, ellipse12):
    lp = to_lazutkin(unit_circle, PhasePoint(1.0, 0.4))
    assert lp.x == pytest.approx(1.0 / (2 * math.pi), abs=1e-14)
    assert lp.alpha == pytest.approx(4 * math.sin(0.2) / (2 * math.pi), abs=1e-14)
    assert to_lazutkin(unit_circle, PhasePoint(0.5, 0.0)).alpha == 0.0
    assert to_lazutkin(ellipse12, PhasePoint(0.0, 0.3)).x == 0.0


@given(st.floats(0.0, 0.999), st.floats(0.001, 0.3))
def test_lazutkin_round_trip(x, alpha):
    d = DOMAINS[2]
    p = from_lazutkin(d, LazutkinPoint(x, alpha))
    back = to_lazutkin(d, p)
    assert abs((back.x - x + 0.5) % 1.0 - 0.5) <= 1e-12 and back.alpha == pytest.approx(alpha, abs=1e-12)


def test_lazutkin_defect(unit_circle, ellipse12):
    j = 100
    assert lazutkin_iterated_jacobian_defect(unit_circle, PhasePoint(0.0, math.pi / j), j) <= 0.2
    assert lazutkin_iterated_jacobian_defect(ellipse12, PhasePoint(0.3, 0.1), 0) == 0.0
    defects = lazutkin_defects(ellipse12, js=(64, 128, 256), n_start=2)
    assert 0.4 <= defects[128] / defects[64] <= 0.6
    assert 0.4 <= defects[256] / defects[128] <= 0.6


def test_not_one_rotation(unit_circle):
    with pytest.raises(NotOneRotation):
        lazutkin_iterated_jacobian_defect(unit_circle, PhasePoint(0.0, 1.5 * math.pi / 50), 50)


def test_rotation_number_examples(unit_circle, ellipse21):
    assert rotation_number(unit_circle, PhasePoint(0.0, math.pi / 5), 1000) == pytest.approx(0.2, abs=1e-9)
    assert rotation_number(unit_circle, PhasePoint(0.0, math.pi / 2), 1000) == pytest.approx(0.5, abs=1e-9)
    cp = solve_zeta(2.0, 1.0, 9)
    p = PhasePoint(0.0, float(omega_of_phi(cp, 2.0, 1.0, 0.0)))
    assert rotation_number(ellipse21, p, 2000) == pytest.approx(1 / 9, abs=1e-8)
    with pytest.raises(ValueError):
        rotation_number(unit_circle, PhasePoint(0.0, 0.3), 50)


def test_lazutkin_near_integrability():
    """One-rotation drift of alpha is of fourth order in alpha."""
    for d in DOMAINS[1:]:
        alphas = np.geomspace(1e-3, 1e-1, 7)
        drift = []
        for a1 in alphas:
            p = from_lazutkin(d, LazutkinPoint(0.1, a1))
            ts, ths, _ = orbit_param(d, d.param(p.s), p.theta, int(math.ceil(1 / a1)))
            drift.append(np.max(np.abs(np.diff(lazutkin_alpha_param(d, ts, ths)))))
        exponent = np.polyfit(np.log(alphas), np.log(drift), 1)[0]
        assert 3.5 <= exponent <= 4.5


def test_angle_band_small():
    d = DOMAINS[1]
    bands = [angle_band(d, j) for j in (50, 100, 200)]
    c1, c2 = 0.95 * bands[0][0], 1.05 * bands[0][1]
    assert all(c1 <= lo and hi <= c2 for lo, hi in bands)


@pytest.mark.parametrize("k", range(3))
def test_arc_angle_comparability(k):
    d = DOMAINS[k]
    rho_min, rho_max = 1 / d.kappa_max, 1 / d.kappa_min
    for j in (20, 80):
        p = one_rotation_state(d, 0.7, j)
        ts, ths, _ = orbit_param(d, d.param(p.s), p.theta, j)
        ds = np.diff(d.arclength(ts))
        a = ths[:-1]
        slack = 1e-12 * d.perimeter
        assert np.all(2 * a * rho_min <= ds + slack) and np.all(ds <= 2 * a * rho_max + slack)
