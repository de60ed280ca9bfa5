"""Principal symbol of the localized wave trace, the amplitude factor ``|A_j|``
on the boundary diagonal, the wave invariant ``c_j`` and its singularity profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CrossCheckFailed, NotCausticFamily
from .geometry import ConvexDomain
from .orbits import _ccw_path, _domega1_implicit, _loop_sample, _richardson_first, FD_STEP, _require_j


def _diagonal_data(d, j, q):
    _, sample = _loop_sample(d, q, j)
    return sample


def principal_symbol(d: ConvexDomain, j: int, q: float, xi: float, origin=None) -> float:
    """``4 xi^{1/2} sin(w1) sin^{1/2}(w2) |dw1/dq'|^{1/2} X.N`` at the loop based at ``q``."""
    if xi <= 0.0:
        raise ValueError("xi must be positive")
    _require_j(d, j)
    origin = d.centroid if origin is None else origin
    s = _diagonal_data(d, j, q)
    xn = float(d.position_dot_normal(q, origin))
    return 4.0 * math.sqrt(xi) * math.sin(s.omega1) * math.sqrt(math.sin(s.omega2)) * math.sqrt(abs(s.domega1_dqprime)) * xn


def a_factor_boundary(d: ConvexDomain, j: int, q: float, rtol: float = 1e-5) -> float:
    """``|dw1/dq'| / sin(w2)`` on the diagonal, checked against ``|dw2/dq| / sin(w1)``.

    The first form uses implicit differentiation of the orbit equations; the
    second a Richardson-extrapolated difference quotient of ``w2`` in ``q``.
    """
    _require_j(d, j)
    s = _diagonal_data(d, j, q)
    seed = _ccw_path(d, q, q, j).t[1:-1]
    h = FD_STEP * d.perimeter

    def w2(x):
        shift = (float(d.param(x)) - float(d.param(q))) * (1.0 - np.arange(1, j) / j)
        return _ccw_path(d, x, q, j, seed=seed + shift).omega2

    dw2 = _richardson_first(w2, q, h)
    first = abs(s.domega1_dqprime) / math.sin(s.omega2)
    second = abs(dw2) / math.sin(s.omega1)
    if abs(first - second) > rtol * first:
        raise CrossCheckFailed(f"|A_j| forms disagree: {first:.12g} vs {second:.12g}")
    return first


@dataclass
class InvariantReport:
    j: int
    t_j: float
    T_j: float
    c_j: float
    caustic: bool
    origin: tuple
    quad_n: int
    samples: list = field(default_factory=list)
    c_j_half: float = float("nan")

    @property
    def convergence(self) -> float:
        return abs(self.c_j - self.c_j_half) / abs(self.c_j) if self.c_j else 0.0

    def as_dict(self) -> dict:
        return {
            "j": self.j, "t_j": self.t_j, "T_j": self.T_j, "c_j": self.c_j,
            "caustic": self.caustic, "origin": list(self.origin), "quad_n": self.quad_n,
            "convergence": self.convergence,
        }


def wave_invariant(d: ConvexDomain, j: int, origin=None, quad_n: int = 256, force: bool = False,
                   caustic_tol: float = 1e-9) -> InvariantReport:
    """``(-1)^{j+1} 4 \\oint sin^{3/2}(w1) |dw1/dq'|^{1/2} X.N dq`` by the trapezoid rule.

    Nodes are equally spaced in the curve parameter, so ``dq = |P'| dt``.  The
    same sum over every other node gives ``c_j_half``, a free convergence check.
    """
    _require_j(d, j)
    origin = tuple(d.centroid if origin is None else origin)
    tq = 2.0 * math.pi * np.arange(quad_n) / quad_n
    qs = d.arclength(tq)
    speed = d.speed_t(tq)
    xn = d.position_dot_normal(qs, origin)
    vals, psis, samples = np.empty(quad_n), np.empty(quad_n), []
    seed, prev = None, None
    for i, q in enumerate(qs):
        if prev is not None:
            seed = prev[1:-1] + (tq[i] - prev[0])
        sol, s = _loop_sample(d, float(q), j, seed)
        prev = sol.t
        vals[i] = math.sin(s.omega1) ** 1.5 * math.sqrt(abs(s.domega1_dqprime))
        psis[i] = s.psi
        samples.append((float(q), float(vals[i] * xn[i])))
    caustic = float(psis.max() - psis.min()) < caustic_tol
    if not caustic and not force:
        raise NotCausticFamily(
            f"loop function varies by {psis.max() - psis.min():.3e}; pass force=True to evaluate anyway"
        )
    w = vals * xn * speed
    coef = (-1.0) ** (j + 1) * 4.0 * 2.0 * math.pi
    c = coef * math.fsum(w) / quad_n
    c_half = coef * math.fsum(w[::2]) / (quad_n // 2)
    return InvariantReport(j, float(psis.min()), float(psis.max()), c, caustic, origin, quad_n, samples, c_half)


def circle_wave_invariant(R: float, j: int) -> float:
    return (-1.0) ** (j + 1) * 8.0 * math.pi * R**1.5 * math.sin(math.pi / j) ** 1.5 / math.sqrt(2.0 * j)


def singularity_profile(c_j: float, L_j: float, t_grid, eps: float | None = None) -> np.ndarray:
    """``c_j Re{e^{i pi/4} (t - L_j - i eps)^{-3/2}}`` on the principal branch.

    The default ``eps`` is a tenth of the grid spacing.
    """
    t = np.asarray(t_grid, dtype=float)
    if eps is None:
        eps = float(np.min(np.diff(t))) / 10.0 if t.size > 1 else 1e-3
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    z = (t - L_j) - 1j * eps
    return c_j * np.real(np.exp(1j * math.pi / 4) * z ** (-1.5))
