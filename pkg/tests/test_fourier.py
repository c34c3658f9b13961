import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edlab.convex_body import ConvexBody, DomainError, inv_sqrt_curvature, volume
from edlab.fourier import (QuadratureError, coefficient_table, coefficients, exact_coefficient,
                           fourier_rows, herz_amplitude, main_coefficient, main_term,
                           scaled_coefficient)

DISK = ConvexBody.disk()
ELL = ConvexBody.ellipse(2.0, 1.0)
nodes = st.tuples(st.integers(-40, 40), st.integers(-40, 40)).filter(lambda k: k != (0, 0))


def polar_grid_coefficient(body, r, k, n_ang=1000, n_rad=1000):
    """Dense polar quadrature (Gauss-Legendre in radius, trapezoid in angle)."""
    t = 2 * np.pi * np.arange(n_ang) / n_ang
    rho = 1.0 / np.sqrt((np.cos(t) / (r * body.a)) ** 2 + (np.sin(t) / (r * body.b)) ** 2)
    g, w = np.polynomial.legendre.leggauss(n_rad)
    s = 0.5 * (g + 1.0)[None, :] * rho[:, None]
    ws = 0.5 * w[None, :] * rho[:, None]
    phase = 2 * np.pi * s * (k[0] * np.cos(t) + k[1] * np.sin(t))[:, None]
    val = (np.exp(-1j * phase) * s * ws).sum() * (2 * np.pi / n_ang)
    return complex(val)


@pytest.mark.parametrize("body,r", [(DISK, 0.3), (ELL, 0.2), (ConvexBody.ellipse(1.0, 0.5), 0.35)])
@pytest.mark.parametrize("k", [(1, 0), (0, 3), (2, -5), (7, 4)])
def test_closed_form_matches_dense_quadrature(body, r, k):
    ref = polar_grid_coefficient(body, r, k)
    got = exact_coefficient(body, r, k)
    assert abs(got - ref) < 1e-10
    assert abs(ref.imag) < 1e-10


@pytest.mark.parametrize("k", [(1, 1), (3, -2), (0, 5)])
def test_adaptive_quadrature_route(k):
    for body, r in ((DISK, 0.3), (ELL, 0.2)):
        q = exact_coefficient(body, r, k, method="quadrature")
        assert abs(q.imag) < 1e-10
        assert abs(q - exact_coefficient(body, r, k)) < 1e-10


def test_quadrature_failure_reports_tolerance():
    with pytest.raises(QuadratureError) as err:
        exact_coefficient(DISK, 0.3, (3, 4), method="quadrature", tol=1e-300)
    assert err.value.achieved > 0


def test_zero_node_rejected_and_area_at_origin():
    with pytest.raises(DomainError):
        exact_coefficient(DISK, 0.3, (0, 0))
    assert coefficients(ELL, 0.2, 0, 0) == pytest.approx(volume(ELL, 0.2))


@given(nodes)
def test_coefficients_even_in_each_coordinate(k):
    for body in (DISK, ELL):
        c = coefficients(body, 0.2, k[0], k[1])
        assert coefficients(body, 0.2, -k[0], k[1]) == c
        assert coefficients(body, 0.2, k[0], -k[1]) == c
        assert coefficients(body, 0.2, -k[0], -k[1]) == c


def test_disk_main_term_closed_form():
    r = 0.3
    for k in [(1, 0), (3, 4), (10, -7)]:
        n = math.hypot(*k)
        t = main_term(DISK, r, k, with_exact=True)
        assert t.d_k == pytest.approx(math.sin(2 * math.pi * r * n - math.pi / 4) / (math.pi * n**1.5),
                                      abs=1e-15)
        assert t.g_k == pytest.approx(math.sin(2 * math.pi * r * n - math.pi / 4), abs=1e-15)
        assert t.c_k == pytest.approx(float(scaled_coefficient(DISK, r, *k)))


def test_main_term_remainder_order():
    # |c_k - d_k| |k|^{5/2} stays bounded along rays
    r = 0.27
    for body in (DISK, ELL):
        for direction in [(1, 0), (3, 1), (1, 1)]:
            m = np.arange(2, 400)
            k1, k2 = m * direction[0], m * direction[1]
            c = scaled_coefficient(body, r, k1, k2)
            d = main_coefficient(body, r, k1, k2)
            scaled = np.abs(c - d) * np.hypot(k1, k2) ** 2.5
            assert scaled[200:].max() <= 1.5 * scaled[:200].max()


@given(nodes)
def test_main_coefficient_bound_and_parity(k):
    for body in (DISK, ELL):
        d = main_coefficient(body, 0.2, k[0], k[1])
        cap = inv_sqrt_curvature(body, np.array([[1.0, 0.0], [0.0, 1.0]])).max()
        assert abs(d) <= cap / (math.pi * math.hypot(*k) ** 1.5) * (1 + 1e-12)
        assert main_coefficient(body, 0.2, -k[0], -k[1]) == d


def test_phase_flag_changes_shift():
    a = herz_amplitude(DISK, 0.3, 3, 4)
    b = herz_amplitude(DISK, 0.3, 3, 4, phase_inside=False)
    assert a == pytest.approx(math.sin(2 * math.pi * 1.5 - math.pi / 4))
    assert b == pytest.approx(math.sin(2 * math.pi * 1.5 - 0.125))


def test_reconstruction_improves_with_cutoff():
    body, r = ELL, 0.2
    x = np.arange(512) / 512
    x = x - np.floor(x + 0.5)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    target = ((X1 / (r * body.a)) ** 2 + (X2 / (r * body.b)) ** 2 <= 1.0) - volume(body, r)

    def partial(K):
        k = np.arange(K + 1)
        C = scaled_coefficient(body, r, k[:, None], k[None, :]) * math.sqrt(r)
        w = np.where(k == 0, 1.0, 2.0)
        C = C * w[:, None] * w[None, :]
        C[0, 0] = 0.0
        E = np.cos(2 * np.pi * np.outer(x, k))
        return E @ C @ E.T

    err = [np.sqrt(np.mean((target - partial(K)) ** 2)) for K in (16, 64)]
    assert err[1] < err[0]


def test_decay_slope():
    k = np.arange(129)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    n = np.hypot(K1, K2)
    m = (n >= 2) & (n <= 128)
    for body in (DISK, ELL):
        c = np.abs(scaled_coefficient(body, 0.2, K1[m], K2[m]))
        slope = np.polyfit(np.log(n[m]), np.log(c), 1)[0]
        assert slope <= -1.45


def test_table_cached_and_read_only():
    t1 = coefficient_table(DISK, 0.3, 16)
    t2 = coefficient_table(DISK, 0.3 + 1e-13, 16)
    assert t1 is t2
    assert not t1.flags.writeable
    assert t1[3, 4] == pytest.approx(coefficients(DISK, 0.3, 3, 4), rel=1e-12)


def test_fourier_rows_layout():
    rows = fourier_rows(DISK, 0.3, 2)
    assert len(rows) == 8
    k1, k2, c, d, g = rows[0]
    assert (k1, k2) == (0, 1)
    assert d == pytest.approx(g / math.pi)


def test_only_the_inside_phase_matches_the_exact_coefficient():
    inside, outside = [], []
    for t in (10, 40, 160):
        k = (3 * t, 4 * t)
        n = math.hypot(*k)
        c = float(scaled_coefficient(ELL, 0.3, *k))
        inside.append(abs(c - float(main_coefficient(ELL, 0.3, *k))) * n**2.5)
        outside.append(abs(c - float(main_coefficient(ELL, 0.3, *k, phase_inside=False))) * n**2.5)
    assert max(inside) < 0.1
    assert outside[-1] > 100 * max(inside)
