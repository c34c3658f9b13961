"""Fourier coefficients of the indicator of ``C_r`` and their asymptotic main terms.

For an ellipse ``C = A D`` (``D`` the unit disk, ``A = diag(a, b)``) the
coefficient is closed form::

    hat chi_{C_r}(k) = r a b J_1(2 pi r P(k)) / P(k)

with ``P`` the support function.  The independent ``quadrature`` route
integrates ``exp(-2 pi i (k, x))`` over ``C_r`` in polar coordinates (radial
integral exact, angular integral adaptive) and is kept as an oracle.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .convex_body import ConvexBody, DomainError, inv_sqrt_curvature, support


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved abs error {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class NodeTerm:
    k: tuple
    c_k: float | None
    d_k: float
    g_k: float


def _check_k(k):
    k = tuple(int(v) for v in k)
    if k == (0, 0):
        raise DomainError("Fourier node must be nonzero")
    return k


def coefficients(body: ConvexBody, r: float, k1, k2) -> np.ndarray:
    """Vectorised ``hat chi_{C_r}(k)`` for integer arrays ``k1, k2`` (zero node gives the area)."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    P = np.hypot(body.a * k1, body.b * k2)
    ab = body.a * body.b
    out = np.empty(np.broadcast(k1, k2).shape)
    zero = P == 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = r * ab * special.j1(2.0 * np.pi * r * P) / P
    if np.any(zero):
        out = np.where(zero, np.pi * ab * r * r, out)
    return out


def _radial(beta, rho):
    """``int_0^rho s exp(-i beta s) ds``."""
    z = beta * rho
    if abs(z) < 1e-3:
        # series; the closed form cancels catastrophically here
        return rho * rho * (0.5 - 1j * z / 3.0 - z * z / 8.0 + 1j * z**3 / 30.0)
    return (np.exp(-1j * z) * (1.0 + 1j * z) - 1.0) / (beta * beta)


def _quadrature_coefficient(body, r, k, tol):
    a, b = r * body.a, r * body.b
    k1, k2 = k

    def rho(t):
        return 1.0 / math.sqrt((math.cos(t) / a) ** 2 + (math.sin(t) / b) ** 2)

    def part(t, which):
        beta = 2.0 * math.pi * (k1 * math.cos(t) + k2 * math.sin(t))
        val = _radial(beta, rho(t))
        return val.real if which == 0 else val.imag

    limit = 200 + 40 * int(abs(k1) + abs(k2))
    with warnings.catch_warnings():
        # failure is reported below through the achieved error estimate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re, err_re = integrate.quad(part, 0.0, 2.0 * math.pi, args=(0,), epsabs=tol * 1e-2,
                                    epsrel=0.0, limit=limit)
        im, err_im = integrate.quad(part, 0.0, 2.0 * math.pi, args=(1,), epsabs=tol * 1e-2,
                                    epsrel=0.0, limit=limit)
    err = max(err_re, err_im)
    if not err <= tol:
        raise QuadratureError(f"quadrature for k={k} did not reach {tol:g}", err)
    return complex(re, im)


def exact_coefficient(body: ConvexBody, r: float, k, method: str = "bessel",
                      tol: float = 1e-10) -> complex:
    """Fourier coefficient ``hat chi_{C_r}(k)``; real for symmetric bodies."""
    body.check_scale(r)
    k = _check_k(k)
    if method == "bessel":
        return complex(float(coefficients(body, r, k[0], k[1])), 0.0)
    if method == "quadrature":
        return _quadrature_coefficient(body, r, k, tol)
    raise ValueError(f"unknown method {method!r}")


def herz_amplitude(body: ConvexBody, r: float, k1, k2, phase_inside: bool = True):
    """``g(k, r) = K^{-1/2}(k/|k|) sin(2 pi (r P(k) - 1/8))``.

    With ``phase_inside=False`` the shift is applied outside the ``2 pi``:
    ``sin(2 pi r P(k) - 1/8)``.
    """
    k = np.stack(np.broadcast_arrays(np.asarray(k1, float), np.asarray(k2, float)), axis=-1)
    P = support(body, k)
    shift = 2.0 * np.pi * 0.125 if phase_inside else 0.125
    return inv_sqrt_curvature(body, k) * np.sin(2.0 * np.pi * r * P - shift)


def main_coefficient(body: ConvexBody, r: float, k1, k2, phase_inside: bool = True):
    """``d_k(r) = g(k, r) / (pi |k|^{3/2})``, vectorised."""
    g = herz_amplitude(body, r, k1, k2, phase_inside)
    norm = np.hypot(np.asarray(k1, float), np.asarray(k2, float))
    return g / (np.pi * norm**1.5)


def main_term(body: ConvexBody, r: float, k, with_exact: bool = False,
              phase_inside: bool = True) -> NodeTerm:
    k = _check_k(k)
    g = float(herz_amplitude(body, r, k[0], k[1], phase_inside))
    d = g / (math.pi * math.hypot(*k) ** 1.5)
    c = None
    if with_exact:
        c = exact_coefficient(body, r, k).real / math.sqrt(r)
    return NodeTerm(k, c, d, g)


@lru_cache(maxsize=16)
def _table(body: ConvexBody, rq: int, kmax: int) -> np.ndarray:
    r = rq * 1e-9
    k = np.arange(kmax + 1)
    t = coefficients(body, r, k[:, None], k[None, :])
    t.setflags(write=False)
    return t


def coefficient_table(body: ConvexBody, r: float, kmax: int) -> np.ndarray:
    """Cached ``hat chi_{C_r}(k1, k2)`` for ``0 <= k1, k2 <= kmax`` (even in each coordinate).

    Keyed by ``r`` quantised to 1e-9; read-only so concurrent readers are safe.
    """
    return _table(body, int(round(r * 1e9)), int(kmax))


def scaled_coefficient(body: ConvexBody, r: float, k1, k2):
    """``c_k(r) = hat chi_{C_r}(k) / r^{1/2}``."""
    return coefficients(body, r, k1, k2) / math.sqrt(r)


def fourier_rows(body: ConvexBody, r: float, kmax: int, phase_inside: bool = True):
    """Rows ``(k1, k2, c_k, d_k, g_k)`` for ``0 <= k1, k2 <= kmax``, ``k != 0``."""
    rows = []
    for k1 in range(kmax + 1):
        for k2 in range(kmax + 1):
            if k1 == 0 and k2 == 0:
                continue
            c = float(scaled_coefficient(body, r, k1, k2))
            g = float(herz_amplitude(body, r, k1, k2, phase_inside))
            d = g / (math.pi * math.hypot(k1, k2) ** 1.5)
            rows.append((k1, k2, c, d, g))
    return rows
