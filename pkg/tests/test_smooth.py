import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from edlab.convex_body import ConvexBody, DomainError
from edlab.ergodic import ActionConfig, axis_discrepancy
from edlab.smooth import (AxisSeries, A_series, B_series, ResonanceError, axis_sum_over_orbit,
                          cocycle_residual, limit_sample_d1, sample_finite_d1, sample_limit_d1)

ELL = ConvexBody.ellipse(1.0, 0.7)
DISK = ConvexBody.disk()
SER = AxisSeries(ELL, 0.3, 256)
unit = st.floats(0.0, 1.0, exclude_max=True)


def test_coefficients_live_on_axes_only():
    assert SER.a((0, 0)) == 0.0 and SER.a((3, 4)) == 0.0
    assert SER.a((5, 0)) == SER.a((-5, 0)) == float(SER.coef[0, 4])
    assert SER.a((0, 300)) == 0.0
    with pytest.raises(DomainError):
        AxisSeries(ELL, 0.3, -1)


def test_axis_series_is_real():
    x = np.random.default_rng(0).random((50, 2))
    c = A_series(SER, x, complex_form=True)
    assert np.max(np.abs(c.imag)) < 1e-10
    assert np.allclose(c.real, A_series(SER, x), atol=1e-10)


def test_axis_series_at_origin():
    assert float(A_series(SER, np.zeros(2))) == pytest.approx(2 * SER.coef.sum(), rel=1e-12)
    assert float(A_series(AxisSeries(ELL, 0.3, 0), np.array([0.2, 0.4]))) == 0.0


def test_coboundary_real_form_matches_complex_form():
    rng = np.random.default_rng(1)
    x, a = rng.random((20, 2)), rng.random((20, 2))
    c = B_series(SER, a, x, complex_form=False)
    z = np.array([B_series(SER, a[j], x[j], complex_form=True) for j in range(20)])
    assert np.max(np.abs(z.imag)) < 1e-8
    assert np.allclose(c, z.real, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(unit, unit, st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.integers(0, 50))
def test_cocycle_identity(x1, x2, a1, a2, n):
    k = np.arange(1, SER.kmax + 1)
    for a in (a1, a2):
        assume(np.min(np.abs(np.sin(np.pi * k * a))) > 1e-4)
    assert cocycle_residual(SER, (x1, x2), (a1, a2), n) < 1e-9


def test_limit_sample_antisymmetry_and_diagonal():
    rng = np.random.default_rng(2)
    x, a, b = rng.random((3, 30, 2))
    assert np.allclose(limit_sample_d1(SER, x, a, b), -limit_sample_d1(SER, b, a, x))
    assert np.all(limit_sample_d1(SER, x, a, x) == 0.0)


def test_resonance_names_the_node():
    with pytest.raises(ResonanceError, match=r"k=\(2, 0\)"):
        B_series(SER, np.array([0.5, 0.3]), np.array([0.1, 0.1]))
    with pytest.raises(ResonanceError) as info:
        B_series(SER, np.array([0.3141, 0.25]), np.array([0.1, 0.1]))
    assert info.value.k == (0, 4)


def test_telescoping_over_orbit():
    x, a, N = np.array([0.11, 0.83]), np.array([0.3183, 0.5772]), 40
    lhs = axis_sum_over_orbit(SER, x, a, N)
    rhs = float(B_series(SER, a, np.mod(x + N * a, 1.0)) - B_series(SER, a, x))
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_series_recovers_exact_axis_discrepancy():
    series = AxisSeries(ELL, 0.3, 20000)
    rng = np.random.default_rng(3)
    for _ in range(3):
        x, a = rng.random(2), rng.random(2)
        cfg = ActionConfig(0.3, tuple(x), tuple(a), 16)
        exact = axis_discrepancy(cfg, ELL) / 16
        series_value = float(B_series(series, a, np.mod(x + 16 * a, 1.0)) - B_series(series, a, x))
        assert series_value == pytest.approx(exact, abs=1e-3)


def test_coboundary_truncation_is_stable_in_l2():
    rng = np.random.default_rng(4)
    lo, hi = AxisSeries(DISK, 0.3, 1000), AxisSeries(DISK, 0.3, 2000)
    beta = rng.random((400, 2))
    rel = []
    for _ in range(60):
        a = rng.random(2)
        b1 = B_series(lo, a, beta)
        b2 = B_series(hi, a, beta)
        rel.append(np.sqrt(np.mean((b2 - b1) ** 2) / np.mean(b2**2)))
    rel = np.array(rel)
    assert np.median(rel) < 0.05
    assert np.quantile(rel, 0.9) < 0.10


def test_samplers_shape_and_determinism():
    a = sample_limit_d1(DISK, 0.3, 10, np.random.default_rng(5), kmax=128)
    b = sample_limit_d1(DISK, 0.3, 10, np.random.default_rng(5), kmax=128)
    assert a.shape == (10,) and np.array_equal(a, b)
    f = sample_finite_d1(DISK, 0.3, 32, 10, np.random.default_rng(5))
    assert f.shape == (10,) and np.all(np.isfinite(f))
