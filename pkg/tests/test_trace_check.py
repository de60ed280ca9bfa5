import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convex_billiards.errors import DegenerateFit, UnderResolved
from convex_billiards.geometry import circle
from convex_billiards.orbits import find_periodic
from convex_billiards.trace_check import (
    OrderFit,
    Window,
    fit_order,
    ft_chi_plus,
    ft_chi_plus_closed,
    ft_chi_plus_quad,
    lambda_grid,
    order_scan,
    symbol_samples,
    trace_pipeline,
    verdict,
    windowed_transform,
)
from convex_billiards.verify import localized_windows


@pytest.fixture(scope="module")
def circle_samples():
    return symbol_samples(circle(1.0), 10, 64)


@pytest.fixture(scope="module")
def trefoil_samples(trefoil):
    return symbol_samples(trefoil, 3, 128)


def test_window_shape():
    w = Window(1.0, 2.0, 0.25)
    assert w.support == (0.75, 2.25)
    t = np.linspace(0.0, 3.0, 301)
    v, dv = w.value_and_derivative(t)
    assert np.all(v[(t >= 1.0) & (t <= 2.0)] == 1.0)
    assert np.all(v[(t <= 0.75) | (t >= 2.25)] == 0.0)
    assert np.all((v >= 0) & (v <= 1))
    h = 1e-6
    fd = (w(t + h) - w(t - h)) / (2 * h)
    assert np.allclose(dv, fd, atol=1e-5)


def test_windowed_transform_guards(circle_samples):
    q, psi, a0 = circle_samples
    w = Window(psi.min(), psi.max(), 0.2)
    L = circle(1.0).perimeter
    assert windowed_transform(q, psi, np.zeros_like(a0), 0.5, w, 100.0, L) == 0
    for m in (0.0, 1.0):
        with pytest.raises(ValueError):
            windowed_transform(q, psi, a0, m, w, 100.0, L)


def test_under_resolution_reported(trefoil_samples, trefoil):
    q, psi, a0 = trefoil_samples
    w = Window(psi.min(), psi.max(), 0.2)
    with pytest.raises(UnderResolved):
        windowed_transform(q, psi, a0, 0.5, w, 400.0, trefoil.perimeter, max_nodes=64)


def test_fit_recovers_synthetic_orders():
    lam = lambda_grid()
    of = OrderFit(lam, lam**0.5)
    assert fit_order(of) == pytest.approx(0.5, abs=1e-12) and of.slope_stderr < 1e-12
    wobbly = OrderFit(lam, lam**0.5 * (1 + 0.1 * np.sin(lam)))
    assert abs(fit_order(wobbly) - 0.5) < 0.05
    flat = OrderFit(lam, np.full_like(lam, 3.0))
    assert abs(fit_order(flat)) < 1e-12


@pytest.mark.parametrize("lam, mag", [
    (np.geomspace(50, 400, 5), np.ones(5)),
    (np.geomspace(50, 400, 8)[::-1], np.ones(8)),
    (np.geomspace(50, 200, 8), np.ones(8)),
    (np.geomspace(50, 400, 8), np.r_[np.ones(7), 0.0]),
])
def test_degenerate_fits(lam, mag):
    with pytest.raises(DegenerateFit):
        fit_order(OrderFit(lam, mag))


def test_verdict_thresholds():
    assert verdict(0.49) == "degenerate"
    assert verdict(-0.03) == "nondegenerate"
    assert verdict(0.25) == "inconclusive"


def test_threads_do_not_change_results(circle_samples):
    q, psi, a0 = circle_samples
    w = Window(psi.min(), psi.max(), 0.2)
    lam = lambda_grid(50, 400, 6)
    one = order_scan(q, psi, a0, 0.5, w, lam, circle(1.0).perimeter, threads=1)
    two = order_scan(q, psi, a0, 0.5, w, lam, circle(1.0).perimeter, threads=3)
    assert np.array_equal(one.values, two.values)


def test_circle_has_order_one_half(circle_samples):
    rep = trace_pipeline(circle(1.0), 10, samples=circle_samples)
    assert abs(rep.fit.fitted_slope - 0.5) <= 0.05
    assert rep.verdict == "degenerate"
    assert rep.as_dict()["window"]["support"] == [rep.t_j - 0.2, rep.T_j + 0.2]


def test_order_dichotomy(circle_samples, trefoil_samples, trefoil):
    """With a window that reaches only the longest simple critical length the
    orders differ by far more than the fit uncertainties."""
    deg = trace_pipeline(circle(1.0), 10, samples=circle_samples).fit
    T = float(trefoil_samples[1].max())
    fits = [trace_pipeline(trefoil, 3, window=w, samples=trefoil_samples).fit for w in localized_windows(T)]
    for f in fits:
        gap = deg.fitted_slope - f.fitted_slope
        assert gap >= 5 * math.hypot(deg.slope_stderr, f.slope_stderr)
        assert abs(f.fitted_slope) <= 0.05
    a, b = fits
    assert abs(a.fitted_slope - b.fitted_slope) <= 2 * math.hypot(a.slope_stderr, b.slope_stderr)


def test_trefoil_critical_points_are_nondegenerate(trefoil):
    rep = find_periodic(trefoil, 3, 64)
    assert rep.count == 6
    assert min(abs(h) for h in rep.hessians) > 0.1
    assert sorted(np.sign(rep.hessians)) == [-1, -1, -1, 1, 1, 1]


def test_ft_identity_examples():
    for a in (0.0, 0.5, 1.0, 1.5):
        for t in (-2.0, -1.0, 1.0, 2.0):
            assert abs(ft_chi_plus(a, t, 1e-3)) <= 1e-8
    assert ft_chi_plus_closed(0.0, 1.0, 1e-3) == pytest.approx(-1j / complex(1.0, -1e-3), rel=1e-14)
    with pytest.raises(ValueError):
        ft_chi_plus_quad(-1.0, 1.0, 1e-3)
    with pytest.raises(ValueError):
        ft_chi_plus_quad(0.5, 1.0, 0.0)


@given(st.floats(0.0, 2.0), st.floats(0.2, 3.0), st.floats(1e-3, 0.5))
def test_ft_conjugation_symmetry(a, t, eps):
    plus = ft_chi_plus_quad(a, t, eps)
    minus = ft_chi_plus_quad(a, -t, eps)
    assert abs(minus - plus.conjugate()) <= 1e-9 * max(1.0, abs(plus))
    assert abs(ft_chi_plus_closed(a, -t, eps) - ft_chi_plus_closed(a, t, eps).conjugate()) <= 1e-12 * abs(plus)
