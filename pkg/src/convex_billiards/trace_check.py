"""Numerical check of the symbol order through the windowed Fourier transform
of the model trace, plus Fourier transforms of homogeneous distributions.

The model is

    F(lam) = sum_pm int dt int_0^inf dxi int dq
             exp(+-i lam xi (t - Psi(q)) - i lam t) rho(t) lam^{m+1} xi^m a0(q).

The xi-integral is done in closed form, ``Gamma(m+1) (-+ i (t - Psi) + 0)^{-m-1}``,
which no longer depends on ``lam``.  One integration by parts in ``t`` lowers
the exponent to ``-m``, and after summing the two branches only the
combination ``A - B`` survives, with

    A(q) = int_{Psi}^{inf} h'(t) (t - Psi)^{-m} dt,
    B(q) = int_{-inf}^{Psi} h'(t) (Psi - t)^{-m} dt,
    h(t) = rho(t) exp(-i lam t),

so that ``F = -2 Gamma(m+1) sin(pi m / 2) / m * int a0 (A - B) dq``.  The
substitution ``t = Psi +- u^{1/(1-m)}`` removes the integrable endpoint
singularity, and composite Gauss-Legendre panels one oscillation period wide
resolve the phase with 20 nodes per period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .errors import DegenerateFit, UnderResolved

NODES_PER_PERIOD = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(NODES_PER_PERIOD)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


# -- windows ------------------------------------------------------------------------

def _smoothstep(x):
    """C-infinity step from 0 (x <= 0) to 1 (x >= 1) and its derivative."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.where(inside, x, 0.5)
    f0 = np.exp(-1.0 / xc)
    f1 = np.exp(-1.0 / (1.0 - xc))
    s = np.where(inside, f0 / (f0 + f1), (x >= 1.0).astype(float))
    df0 = f0 / xc**2
    df1 = -f1 / (1.0 - xc) ** 2
    ds = np.where(inside, (df0 * (f0 + f1) - f0 * (df0 + df1)) / (f0 + f1) ** 2, 0.0)
    return s, ds


@dataclass(frozen=True)
class Window:
    """Smooth bump equal to 1 on ``[flat_lo, flat_hi]`` with roll-off width ``rolloff``."""

    flat_lo: float
    flat_hi: float
    rolloff: float

    @property
    def support(self):
        return self.flat_lo - self.rolloff, self.flat_hi + self.rolloff

    def __call__(self, t):
        return self.value_and_derivative(t)[0]

    def value_and_derivative(self, t):
        lo, hi = self.support
        s1, d1 = _smoothstep((np.asarray(t) - lo) / self.rolloff)
        s2, d2 = _smoothstep((hi - np.asarray(t)) / self.rolloff)
        return s1 * s2, (d1 * s2 - s1 * d2) / self.rolloff


# -- the transform ---------------------------------------------------------------------

def _trig_interpolate(values: np.ndarray, n_out: int) -> np.ndarray:
    """Band-limited resampling of periodic samples onto ``n_out`` equispaced points."""
    n = values.size
    if n_out == n:
        return values.copy()
    c = np.fft.rfft(values)
    if n % 2 == 0:
        c[-1] *= 0.5  # split the Nyquist mode symmetrically
    out = np.zeros(n_out // 2 + 1, dtype=complex)
    out[: c.size] = c
    return np.fft.irfft(out, n_out) * (n_out / n)


def _half_line(window: Window, lam: float, m: float, psi: np.ndarray, side: int) -> np.ndarray:
    """``int h'(t) |t - psi|^{-m} dt`` over ``side * (t - psi) > 0`` inside the support."""
    lo, hi = window.support
    p = 1.0 / (1.0 - m)
    if side > 0:
        d_near, d_far = np.maximum(lo - psi, 0.0), np.maximum(hi - psi, 0.0)
    else:
        d_near, d_far = np.maximum(psi - hi, 0.0), np.maximum(psi - lo, 0.0)
    period = 2.0 * math.pi / lam
    n_panels = max(1, int(math.ceil(float(np.max(d_far - d_near)) / period)))
    # panel edges uniform in distance from psi, mapped to u = dist^{1-m}
    frac = np.linspace(0.0, 1.0, n_panels + 1)
    dist_edges = d_near[:, None] + (d_far - d_near)[:, None] * frac[None, :]
    u_edges = dist_edges ** (1.0 - m)
    du = np.diff(u_edges, axis=1)
    u = u_edges[:, :-1, None] + du[:, :, None] * _GL_X
    t = psi[:, None, None] + side * u**p
    r, dr = window.value_and_derivative(t)
    hprime = (dr - 1j * lam * r) * np.exp(-1j * lam * t)
    jac = p  # d(dist)/du * dist^{-m} simplifies to 1/(1-m)
    return jac * np.sum(hprime * _GL_W * du[:, :, None], axis=(1, 2))


def windowed_transform(q: np.ndarray, psi: np.ndarray, a0: np.ndarray, m: float, rho: Window, lam: float,
                       perimeter: float, max_nodes: int = 1 << 15) -> complex:
    """Model trace transform from loop-function samples on a uniform ``q`` grid.

    ``psi`` and ``a0`` are resampled by trigonometric interpolation onto a grid
    fine enough for 20 nodes per period of ``exp(-i lam Psi(q))``.
    """
    if not 0.0 < m < 1.0:
        raise ValueError("symbol order must lie in (0, 1)")
    psi = np.asarray(psi, dtype=float)
    a0 = np.asarray(a0, dtype=float)
    if not np.any(a0):
        return 0.0 + 0.0j
    n = psi.size
    dpsi = np.fft.irfft(1j * np.fft.rfftfreq(n, d=perimeter / (2 * math.pi * n)) * np.fft.rfft(psi), n) * (2 * math.pi / perimeter)
    slope = float(np.max(np.abs(dpsi)))
    needed = max(n, int(math.ceil(NODES_PER_PERIOD * lam * slope * perimeter / (2.0 * math.pi))))
    n_fine = n
    while n_fine < needed:
        n_fine *= 2
    if n_fine > max_nodes:
        raise UnderResolved(f"need {n_fine} q-nodes for 20 per period at lambda={lam}, limit {max_nodes}")
    psi_f = _trig_interpolate(psi, n_fine)
    a0_f = _trig_interpolate(a0, n_fine)
    diff = _half_line(rho, lam, m, psi_f, +1) - _half_line(rho, lam, m, psi_f, -1)
    dq = perimeter / n_fine
    pref = -2.0 * gamma(m + 1.0) * math.sin(math.pi * m / 2.0) / m
    return complex(pref * np.sum(a0_f * diff) * dq)


# -- order fits -------------------------------------------------------------------------

@dataclass
class OrderFit:
    lambdas: np.ndarray
    magnitudes: np.ndarray
    values: np.ndarray = field(default=None, repr=False)
    fitted_slope: float = float("nan")
    slope_stderr: float = float("nan")

    def as_dict(self) -> dict:
        return {"slope": self.fitted_slope, "stderr": self.slope_stderr}


def fit_order(of: OrderFit) -> float:
    """Least-squares slope of ``log|F|`` against ``log lam``; fills in the stderr."""
    lam = np.asarray(of.lambdas, dtype=float)
    mag = np.asarray(of.magnitudes, dtype=float)
    if lam.size < 6:
        raise DegenerateFit(f"need at least 6 samples, got {lam.size}")
    if np.any(np.diff(lam) <= 0):
        raise DegenerateFit("lambdas must be strictly increasing")
    if lam[-1] / lam[0] < 8.0:
        raise DegenerateFit(f"samples span a factor {lam[-1] / lam[0]:.3g} < 8 in lambda")
    if np.any(mag <= 0):
        raise DegenerateFit("magnitudes must be positive")
    x, y = np.log(lam), np.log(mag)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(x.size - 2, 1)
    sxx = np.sum((x - x.mean()) ** 2)
    of.fitted_slope = float(coef[0])
    of.slope_stderr = float(math.sqrt(np.sum(resid**2) / dof / sxx))
    return of.fitted_slope


def lambda_grid(lo: float = 50.0, hi: float = 400.0, n: int = 12) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def order_scan(q, psi, a0, m, rho, lambdas, perimeter, threads: int = 1) -> OrderFit:
    def one(lam):
        return windowed_transform(q, psi, a0, m, rho, lam, perimeter)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            vals = np.array(list(pool.map(one, lambdas)))
    else:
        vals = np.array([one(lam) for lam in lambdas])
    of = OrderFit(np.asarray(lambdas, float), np.abs(vals), vals)
    fit_order(of)
    return of


# -- homogeneous distributions ------------------------------------------------------------

def ft_chi_plus_closed(a: float, t: float, eps: float) -> complex:
    """``Gamma(a+1) e^{-i pi (a+1)/2} (t - i eps)^{-a-1}``, the transform of ``xi_+^a``."""
    return complex(gamma(a + 1.0) * np.exp(-0.5j * math.pi * (a + 1.0)) * complex(t, -eps) ** (-a - 1.0))


def ft_chi_plus_quad(a: float, t: float, eps: float, n_periods: int = 16) -> complex:
    """``int_0^inf xi^a e^{-i xi (t - i eps)} d xi`` by quadrature along a bent contour.

    The first ``n_periods`` oscillations are integrated on the real axis with
    one Gauss-Legendre panel per period (the first panel in ``xi = v^2``).
    From there the contour turns into the half plane where ``e^{-i xi t}``
    decays, which avoids summing ``O(1/eps)`` oscillations whose magnitudes
    dwarf the result.  For ``|t| < eps`` the damping alone suffices and the
    whole real axis is used.
    """
    from scipy.integrate import quad

    if a <= -1.0:
        raise ValueError("a must exceed -1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    zp = complex(t, -eps)

    def f(xi):
        return xi**a * np.exp(-1j * xi * zp)

    if abs(t) >= eps:
        period = 2.0 * math.pi / abs(t)
        x0 = n_periods * period
    else:
        period = 2.0 * math.pi / eps
        x0 = 80.0 / eps
    n_panels = int(math.ceil(x0 / period))
    x0 = n_panels * period
    v = math.sqrt(period) * _GL_X
    total = np.sum(math.sqrt(period) * _GL_W * 2.0 * v * f(v * v))
    starts = period * np.arange(1, n_panels)[:, None]
    vals = f(starts + period * _GL_X[None, :]) * (period * _GL_W)[None, :]
    total += vals.sum()
    if abs(t) >= eps:
        sg = math.copysign(1.0, t)

        def g(y):
            return complex(f(complex(x0, -sg * y)) * (-1j * sg))

        kw = dict(limit=400, epsabs=1e-15, epsrel=1e-12)
        total += quad(lambda y: g(y).real, 0.0, np.inf, **kw)[0]
        total += 1j * quad(lambda y: g(y).imag, 0.0, np.inf, **kw)[0]
    return complex(total)


def ft_chi_plus(a: float, t: float, eps: float) -> complex:
    """Residual between the regularized integral by quadrature and its closed form."""
    return ft_chi_plus_quad(a, t, eps) - ft_chi_plus_closed(a, t, eps)


# -- end-to-end pipeline ------------------------------------------------------------------

def verdict(slope: float, tol: float = 0.05) -> str:
    if abs(slope - 0.5) <= tol:
        return "degenerate"
    if abs(slope) <= tol:
        return "nondegenerate"
    return "inconclusive"


@dataclass
class TraceReport:
    j: int
    t_j: float
    T_j: float
    window: Window
    fit: OrderFit
    m: float = 0.5

    @property
    def verdict(self) -> str:
        return verdict(self.fit.fitted_slope)

    def as_dict(self) -> dict:
        lo, hi = self.window.support
        return {
            "j": self.j, "t_j": self.t_j, "T_j": self.T_j, "m": self.m,
            "window": {"flat_lo": self.window.flat_lo, "flat_hi": self.window.flat_hi,
                       "rolloff": self.window.rolloff, "support": [lo, hi]},
            "slope": self.fit.fitted_slope, "stderr": self.fit.slope_stderr, "verdict": self.verdict,
        }


def symbol_samples(d, j: int, grid_n: int = 128, origin=None):
    """Loop-function grid with the principal symbol at ``xi = 1`` on each node."""
    from .orbits import loop_function

    samples = loop_function(d, j, grid_n)
    q = np.array([s.q for s in samples])
    psi = np.array([s.psi for s in samples])
    origin = d.centroid if origin is None else origin
    xn = d.position_dot_normal(q, origin)
    a0 = np.array([4.0 * math.sin(s.omega1) * math.sqrt(math.sin(s.omega2) * abs(s.domega1_dqprime))
                   for s in samples]) * xn
    return q, psi, a0


def trace_pipeline(d, j: int, m: float = 0.5, window: Window | None = None, rolloff: float = 0.2,
                   lambdas=None, grid_n: int = 128, origin=None, samples=None, threads: int = 1) -> TraceReport:
    """Loop function, symbol and windowed transforms for one ``j``, then the slope fit.

    The default window is flat on ``[t_j, T_j]``.  ``samples`` may carry a
    precomputed ``(q, psi, a0)`` triple so that several windows can share one
    loop-function sweep.
    """
    q, psi, a0 = symbol_samples(d, j, grid_n, origin) if samples is None else samples
    t_j, T_j = float(psi.min()), float(psi.max())
    if window is None:
        window = Window(t_j, T_j, rolloff)
    lambdas = lambda_grid() if lambdas is None else lambdas
    fit = order_scan(q, psi, a0, m, window, lambdas, d.perimeter, threads)
    return TraceReport(j, t_j, T_j, window, fit, m)
