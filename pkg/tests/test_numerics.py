import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from staircase.errors import ConvergenceError, DomainError, PrecisionError, ShapeError
from staircase.numerics import (Grid, chunked_sum, dist_to_int, dist_to_int_of_product, fresnel_reference,
                                frac_of_product, oscillatory_quadrature, parallel_map, trapezoid, two_product)


@pytest.mark.parametrize("x, expected", [(3.25, 0.25), (-0.6, 0.4), (7.0, 0.0), (0.5, 0.5), (-2.5, 0.5)])
def test_dist_to_int_examples(x, expected):
    assert dist_to_int(x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("x", [math.inf, -math.inf, math.nan])
def test_dist_to_int_rejects_non_finite(x):
    with pytest.raises(DomainError):
        dist_to_int(x)


@given(st.floats(-1e6, 1e6), st.integers(-1000, 1000))
def test_dist_to_int_integer_shift(x, n):
    assert abs(dist_to_int(x + n) - dist_to_int(x)) <= 1e-12 * max(1.0, abs(x) / 1e4)


@given(st.floats(-1e12, 1e12, allow_nan=False))
def test_dist_to_int_negation_exact(x):
    assert dist_to_int(x) == dist_to_int(-x)
    assert 0.0 <= dist_to_int(x) <= 0.5


def test_dist_to_int_of_product_examples():
    with mpmath.workdps(40):
        oracle = 13 * 4 * mpmath.log(2)
        expected = float(abs(oracle - mpmath.nint(oracle)))
    assert dist_to_int_of_product(13, 4 * math.log(2)) == pytest.approx(expected, abs=1e-12)
    assert dist_to_int_of_product(13, 2.772588722239781) == pytest.approx(0.0436534, abs=1e-7)
    assert dist_to_int_of_product(1e6, 0.5) == 0.0
    assert dist_to_int_of_product(2, 0.25) == 0.5


def test_dist_to_int_of_product_matches_oracle_on_random_pairs():
    rng = np.random.default_rng(11)
    n = 10_000
    log_mag = rng.uniform(0, 14, n)
    split = rng.uniform(0, 1, n)
    a = 10 ** (log_mag * split) * rng.choice([-1, 1], n)
    b = 10 ** (log_mag * (1 - split)) * rng.uniform(0.1, 1, n)
    got = np.abs(frac_of_product(a, b))
    worst = 0.0
    with mpmath.workdps(50):
        for i in range(n):
            v = mpmath.mpf(float(a[i])) * mpmath.mpf(float(b[i]))
            ref = float(abs(v - mpmath.nint(v)))
            worst = max(worst, abs(ref - got[i]))
    assert worst <= 1e-9


def test_two_product_is_exact():
    with mpmath.workdps(60):
        for a, b in [(1e8 + 1 / 3, 7.123456789), (math.pi * 1e6, math.e * 1e5), (-3.3, 1e15 / 7)]:
            p, e = two_product(a, b)
            assert mpmath.mpf(p) + mpmath.mpf(e) == mpmath.mpf(a) * mpmath.mpf(b)


def test_naive_reduction_would_fail_where_compensated_does_not():
    a, b = 4097.0, 1024 * 16 * math.log(1024)
    with mpmath.workdps(50):
        v = mpmath.mpf(a) * mpmath.mpf(b) * 1e3
        ref = float(abs(v - mpmath.nint(v)))
    assert dist_to_int_of_product(a * 1e3, b) == pytest.approx(ref, abs=1e-9)


def test_dist_to_int_of_product_overflow():
    with pytest.raises(PrecisionError, match="e\\+"):
        dist_to_int_of_product(1e300, 1e300)
    with pytest.raises(DomainError):
        dist_to_int_of_product(math.nan, 1.0)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(1.0, 1.0, 5)
    with pytest.raises(DomainError):
        Grid(0.0, 1.0, 1)
    with pytest.raises(DomainError):
        Grid(0.0, math.inf, 5)


@given(st.integers(0, 2**32 - 1), st.integers(3, 400))
def test_grid_jitter_bounded_and_increasing(seed, count):
    g = Grid(-2.0, 5.0, count, jitter_seed=seed)
    x = g.nodes()
    plain = Grid(-2.0, 5.0, count).nodes()
    assert np.all(np.diff(x) > 0)
    assert x[0] == -2.0 and x[-1] == 5.0
    assert np.all(np.abs(x - plain) <= g.spacing / 4 + 1e-12)
    assert np.array_equal(x, g.nodes())


@pytest.mark.parametrize("start, end, count, fn, expected, tol", [
    (0.0, 1.0, 11, lambda t: np.ones_like(t), 1.0, 1e-15),
    (0.0, 2.0, 3, lambda t: t, 2.0, 1e-15),
    (0.0, 1.0, 1001, lambda t: t * t, 1 / 3, 1e-6),
])
def test_trapezoid_examples(start, end, count, fn, expected, tol):
    g = Grid(start, end, count)
    assert trapezoid(fn(g.nodes()), g) == pytest.approx(expected, abs=tol)


def test_trapezoid_exact_for_affine_on_jittered_grid():
    g = Grid(0.0, 3.0, 37, jitter_seed=5)
    assert trapezoid(2 * g.nodes() - 1, g) == pytest.approx(6.0, abs=1e-13)


def test_trapezoid_shape_error():
    with pytest.raises(ShapeError):
        trapezoid(np.ones(4), Grid(0.0, 1.0, 5))


def test_fresnel_reference():
    z = fresnel_reference(100)
    assert z.real == pytest.approx(0.1253314, abs=1e-6)
    assert z.imag == pytest.approx(0.1253314, abs=1e-6)
    assert fresnel_reference(math.pi) == pytest.approx(complex(math.sqrt(0.5), math.sqrt(0.5)), abs=1e-12)
    assert abs(fresnel_reference(40.0)) == pytest.approx(2 * abs(fresnel_reference(160.0)))
    with pytest.raises(DomainError):
        fresnel_reference(0.0)


def test_quadrature_against_fresnel():
    val = oscillatory_quadrature(lambda x: x * x, 100.0, (-1.0, 1.0), tol=1e-8)
    assert abs(val - fresnel_reference(100.0)) <= 0.01


def test_quadrature_constant_phase():
    assert oscillatory_quadrature(lambda x: 0.0 * x, 5.0, (0.0, 2.0), tol=1e-10) == pytest.approx(2.0, abs=1e-12)
    assert oscillatory_quadrature(lambda x: 0.0, 5.0, (0.0, 2.0), tol=1e-10) == pytest.approx(2.0, abs=1e-12)


def test_quadrature_against_closed_form_linear_phase():
    t = 37.0
    exact = (np.exp(1j * t * 3.0) - 1) / (1j * t)
    assert oscillatory_quadrature(lambda x: x, t, (0.0, 3.0), tol=1e-12) == pytest.approx(exact, abs=1e-11)


def test_quadrature_oi2_two_term_asymptotic():
    a, c, b, t = 1.0, 2.0, 3.0, 1e3
    val = oscillatory_quadrature(lambda x: a + c * x * x, t, (0.0, b), tol=1e-12)
    lead = (np.exp(0.25j * math.pi) * math.sqrt(math.pi) * np.exp(1j * a * t) / (2 * math.sqrt(c * t))
            - 1j / (2 * b * c * t) * np.exp(1j * (a + c * b * b) * t))
    assert abs(val - lead) <= 1 / (b**3 * (c * t) ** 2)


def test_quadrature_errors():
    with pytest.raises(DomainError):
        oscillatory_quadrature(lambda x: x, 1.0, (1.0, 0.0), tol=1e-8)
    with pytest.raises(DomainError):
        oscillatory_quadrature(lambda x: x, 1.0, (0.0, 1.0), tol=0.0)
    with pytest.raises(ConvergenceError) as info:
        oscillatory_quadrature(lambda x: x * x, 1e6, (-1.0, 1.0), tol=1e-12, max_panels=64)
    assert info.value.current is not None


def test_chunked_sum_matches_fsum():
    rng = np.random.default_rng(0)
    v = rng.normal(size=600_000)
    assert chunked_sum(v) == pytest.approx(math.fsum(v), abs=1e-9)


def test_parallel_map_preserves_order():
    items = list(range(50))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert parallel_map(lambda x: -x, items, threads=0) == [-x for x in items]
