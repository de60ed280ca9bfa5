import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ellipe

from convex_billiards.errors import CoordinateOutOfRange, OriginOutside, SpecError
from convex_billiards.geometry import BoundaryNormalCoords, Ellipse, FourierRadial, circle, from_spec, load_domain
from convex_billiards.verify import exact_area

from conftest import ellipse_curvature


def test_circle_points(unit_circle):
    assert np.allclose(unit_circle.point(0.0), [1.0, 0.0], atol=1e-15)
    assert np.allclose(unit_circle.point(math.pi), [-1.0, 0.0], atol=1e-13)


def test_ellipse_parametrization_start(ellipse21):
    assert np.allclose(ellipse21.point_t(0.0), [2.0, 0.0])
    assert np.allclose(ellipse21.point(0.0), [2.0, 0.0])


def test_perimeter_against_complete_elliptic_integral(ellipse21):
    # independent oracle: l = 4 a E(m) with m = 1 - b^2/a^2
    assert ellipse21.perimeter == pytest.approx(4 * 2.0 * ellipe(1 - 0.25), rel=1e-14)


def test_curvature_examples(ellipse21):
    assert circle(2.0).curvature(1.234) == pytest.approx(0.5, rel=1e-13)
    assert float(ellipse21.curvature_t(0.0)) == pytest.approx(2.0, rel=1e-13)
    assert float(ellipse21.curvature_t(math.pi / 2)) == pytest.approx(0.25, rel=1e-13)
    s = ellipse21.arclength(math.pi / 2)
    assert float(ellipse21.curvature(s)) == pytest.approx(0.25, rel=1e-12)


@given(st.floats(0.0, 2 * math.pi))
def test_ellipse_curvature_formula(phi):
    d = Ellipse(2.0, 1.0)
    assert float(d.curvature_t(phi)) == pytest.approx(ellipse_curvature(2.0, 1.0, phi), rel=1e-12)
    assert float(d.radius_of_curvature(d.arclength(phi))) == pytest.approx(1 / ellipse_curvature(2.0, 1.0, phi), rel=1e-10)


def test_position_dot_normal_examples(unit_circle, ellipse21):
    assert float(unit_circle.position_dot_normal(0.77, (0.0, 0.0))) == pytest.approx(1.0, abs=1e-14)
    assert float(unit_circle.position_dot_normal(0.0, (0.5, 0.0))) == pytest.approx(0.5, abs=1e-14)
    assert float(ellipse21.position_dot_normal(0.0, (0.0, 0.0))) == pytest.approx(2.0, abs=1e-14)


def test_origin_outside_is_rejected(unit_circle):
    with pytest.raises(OriginOutside):
        unit_circle.position_dot_normal(0.0, (1.5, 0.0))


def test_warp_factor(unit_circle, ellipse21):
    assert unit_circle.warp_factor(BoundaryNormalCoords(0.0, 0.3)) == 1.0
    assert ellipse21.warp_factor(BoundaryNormalCoords(0.0, 2.0)) == 1.0
    assert unit_circle.warp_factor(BoundaryNormalCoords(0.5, 0.3)) == pytest.approx(0.25)
    assert ellipse21.warp_factor(BoundaryNormalCoords(0.1, 0.0)) == pytest.approx(0.64)
    with pytest.raises(CoordinateOutOfRange):
        ellipse21.warp_factor(BoundaryNormalCoords(0.5, 0.0))


def test_to_boundary_normal_examples(unit_circle, ellipse21):
    c = unit_circle.to_boundary_normal((0.9, 0.0))
    assert c.mu == pytest.approx(0.1, abs=1e-14)
    assert min(c.phi, 2 * math.pi - c.phi) == pytest.approx(0.0, abs=1e-12)
    c = unit_circle.to_boundary_normal(unit_circle.point(2.0))
    assert c.mu == pytest.approx(0.0, abs=1e-14) and c.phi == pytest.approx(2.0, abs=1e-12)
    c = ellipse21.to_boundary_normal((0.0, 0.95))
    assert c.mu == pytest.approx(0.05, abs=1e-14)
    assert c.phi == pytest.approx(float(ellipse21.arclength(math.pi / 2)), abs=1e-12)
    with pytest.raises(CoordinateOutOfRange):
        unit_circle.to_boundary_normal((0.0, 0.0))


@given(st.floats(0.0, 0.45), st.floats(0.0, 20.0))
def test_boundary_normal_round_trip(frac, phi):
    d = FourierRadial(1.0, (0.0, 0.02, 0.01), (0.0, 0.01))
    mu = frac / d.kappa_max
    c = d.to_boundary_normal(d.from_boundary_normal(BoundaryNormalCoords(mu, phi)))
    ell = d.perimeter
    assert c.mu == pytest.approx(mu, abs=1e-10 * ell)
    assert (c.phi - phi + ell / 2) % ell - ell / 2 == pytest.approx(0.0, abs=1e-10 * ell)


@given(st.floats(-50.0, 50.0))
def test_point_is_periodic(s):
    for d in (circle(1.0), Ellipse(1.2, 1.0), FourierRadial(1.0, (0.0, 0.02, 0.01), (0.0, 0.01))):
        ell = d.perimeter
        assert np.linalg.norm(d.point(s + ell) - d.point(s)) <= 1e-12 * ell


def test_unit_speed_and_frenet(tables):
    rng = np.random.default_rng(7)
    for d in tables.values():
        s = rng.uniform(0, d.perimeter, 100)
        h = 1e-5
        speed = np.linalg.norm(d.point(s + h) - d.point(s - h), axis=1) / (2 * h)
        assert np.max(np.abs(speed - 1)) <= 1e-10
        h = 1e-4
        dT = (d.tangent(s + h) - d.tangent(s - h)) / (2 * h)
        # the stored normal points outward, so dT/ds = -kappa N
        assert np.max(np.abs(dT + d.curvature(s)[:, None] * d.normal(s))) <= 1e-6


def test_arclength_inverse(tables):
    for d in tables.values():
        s = np.linspace(-d.perimeter, 2 * d.perimeter, 301)
        assert np.max(np.abs(d.arclength(d.param(s)) - s)) <= 1e-13 * d.perimeter
        t = np.linspace(0, 2 * math.pi, 50)
        assert np.all(np.diff(d.arclength(t)) > 0)


def test_divergence_identity(tables):
    for d in tables.values():
        tq = np.linspace(0, 2 * math.pi, 1024, endpoint=False)
        xn = d.position_dot_normal(d.arclength(tq), d.centroid)
        integral = np.sum(xn * d.speed_t(tq)) * 2 * math.pi / tq.size
        assert integral == pytest.approx(2 * exact_area(d), abs=1e-8)


def test_construction_validation(tmp_path):
    with pytest.raises(SpecError, match="a >= b"):
        Ellipse(1.0, 2.0)
    with pytest.raises(SpecError, match="grid point"):
        FourierRadial(1.0, (0.0, 0.5))
    with pytest.raises(SpecError):
        from_spec({"kind": "triangle"})
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"kind": "fourier", "R": 2.0, "cos": [0, 0, 0.01]}))
    d = load_domain(path)
    assert d.to_spec() == {"kind": "fourier", "R": 2.0, "cos": [0.0, 0.0, 0.01], "sin": []}
    assert from_spec({"kind": "circle", "R": 2.0}).perimeter == pytest.approx(4 * math.pi, rel=1e-14)
