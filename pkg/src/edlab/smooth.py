"""Axis part of the discrepancy: coefficients on the coordinate axes, the
coboundary series and the limit sampler built from it.

For a centrally symmetric body the axis coefficients are even, so with
``s = sin(pi k a)`` each pair ``+-k`` of the coboundary series folds into::

    a_k sin(2 pi k x - pi k a) / s

and the series ``A`` into ``2 a_k cos(2 pi k x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex_body import ConvexBody, DomainError
from .fourier import coefficients

RESONANCE_GUARD = 1e-9


class ResonanceError(ArithmeticError):
    def __init__(self, k, axis):
        super().__init__(f"resonant axis node k={k} on axis {axis}")
        self.k = k
        self.axis = axis


@dataclass
class AxisSeries:
    """Coefficients ``a_k(r)`` on the two coordinate axes for ``1 <= k <= kmax``."""

    body: ConvexBody
    r: float
    kmax: int
    coef: np.ndarray = field(init=False, repr=False)  # shape (2, kmax)

    def __post_init__(self):
        if self.kmax < 0:
            raise DomainError("kmax must be >= 0")
        self.body.check_scale(self.r)
        k = np.arange(1, self.kmax + 1)
        zero = np.zeros_like(k)
        self.coef = np.vstack([coefficients(self.body, self.r, k, zero),
                               coefficients(self.body, self.r, zero, k)])

    def a(self, k) -> float:
        """Coefficient at node ``k``; zero off the axes and at the origin."""
        k1, k2 = int(k[0]), int(k[1])
        if (k1 == 0) == (k2 == 0):
            return 0.0
        axis, j = (0, abs(k1)) if k2 == 0 else (1, abs(k2))
        return float(self.coef[axis, j - 1]) if j <= self.kmax else 0.0


def _k(series):
    return np.arange(1, series.kmax + 1, dtype=np.float64)


def A_series(series: AxisSeries, x, complex_form: bool = False):
    """Truncated axis series at ``x``; ``x`` may carry a leading batch shape."""
    x = np.asarray(x, dtype=float)
    if series.kmax == 0:
        return 0.0 * x[..., 0]
    k = _k(series)
    if complex_form:
        out = 0j
        for i in range(2):
            e = np.exp(2j * np.pi * np.multiply.outer(x[..., i], k))
            out = out + e @ series.coef[i] + np.conj(e) @ series.coef[i]
        return out
    out = 0.0
    for i in range(2):
        out = out + 2.0 * np.cos(2 * np.pi * np.mod(np.multiply.outer(x[..., i], k), 1.0)) @ series.coef[i]
    return out


def _divisors(series, alpha):
    """``sin(pi k a_i)`` per axis, checking the guard ``|e(k a_i) - 1| > 1e-9``."""
    alpha = np.asarray(alpha, dtype=float)
    k = np.arange(1, series.kmax + 1)
    out = []
    for i in range(2):
        ka = np.mod(np.multiply.outer(alpha[..., i], k.astype(np.float64)), 1.0)
        s = np.sin(np.pi * ka)
        bad = np.abs(2.0 * s) <= RESONANCE_GUARD
        if bad.any():
            idx = np.argwhere(bad)[0]
            kk = int(k[idx[-1]])
            raise ResonanceError((kk, 0) if i == 0 else (0, kk), i)
        out.append((ka, s))
    return out


def B_series(series: AxisSeries, alpha, x, complex_form: bool = False):
    """Truncated coboundary ``sum a_k e(k.x) / (e(k.a) - 1)`` over axis nodes."""
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    if series.kmax == 0:
        return 0.0 * x[..., 0]
    k = _k(series)
    div = _divisors(series, alpha)
    if complex_form:
        out = 0j
        for i in range(2):
            ka, _ = div[i]
            for sgn in (1.0, -1.0):
                num = np.exp(2j * np.pi * sgn * np.multiply.outer(x[..., i], k))
                den = np.exp(2j * np.pi * sgn * ka) - 1.0
                out = out + (num / den) @ series.coef[i]
        return out
    out = 0.0
    for i in range(2):
        ka, s = div[i]
        kx = np.mod(np.multiply.outer(x[..., i], k), 1.0)
        arg = 2 * np.pi * kx - np.pi * ka
        if alpha.ndim == x.ndim:
            out = out + np.einsum("...k,k->...", np.sin(arg) / s, series.coef[i])
        else:
            out = out + (np.sin(arg) / s) @ series.coef[i]
    return out


def cocycle_residual(series: AxisSeries, x, alpha, n: int) -> float:
    """``|A(x + n a) - [B(a, x + (n+1) a) - B(a, x + n a)]|``."""
    x = np.asarray(x, float)
    alpha = np.asarray(alpha, float)
    y0 = np.mod(x + n * alpha, 1.0)
    y1 = np.mod(x + (n + 1) * alpha, 1.0)
    lhs = A_series(series, y0)
    rhs = B_series(series, alpha, y1) - B_series(series, alpha, y0)
    return float(abs(lhs - rhs))


def limit_sample_d1(series: AxisSeries, x, alpha, beta):
    """``B(a, beta) - B(a, x)``; arrays broadcast over leading axes."""
    return B_series(series, alpha, beta) - B_series(series, alpha, x)


def axis_sum_over_orbit(series: AxisSeries, x, alpha, N: int) -> float:
    """``sum_{n<N} A(x + n a)`` by direct summation."""
    n = np.arange(N)[:, None]
    pts = np.mod(np.asarray(x, float) + n * np.asarray(alpha, float), 1.0)
    return float(np.sum(A_series(series, pts)))


def sample_limit_d1(body: ConvexBody, r: float, n_samples: int, rng, kmax: int = 4096,
                    batch: int = 64) -> np.ndarray:
    """Draws of the axis limit law with ``(x, a, beta)`` uniform on the 6-torus."""
    series = AxisSeries(body, r, kmax)
    out = np.empty(n_samples)
    pts = rng.random((n_samples, 3, 2))
    for s in range(0, n_samples, batch):
        x, a, b = pts[s:s + batch, 0], pts[s:s + batch, 1], pts[s:s + batch, 2]
        out[s:s + batch] = limit_sample_d1(series, x, a, b)
    return out


def sample_finite_d1(body: ConvexBody, r: float, N: int, n_samples: int, rng) -> np.ndarray:
    """Draws of the exact ``D_{C,1}(N)/N`` with ``(x, a)`` uniform."""
    from .ergodic import ActionConfig, axis_discrepancy

    pts = rng.random((n_samples, 2, 2))
    return np.array([axis_discrepancy(ActionConfig(r, tuple(p[0]), tuple(p[1]), N), body) / N
                     for p in pts])
