import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from staircase.errors import CapacityError, ParameterError, PrecisionError
from staircase.numerics import dist_to_int_of_product
from staircase.resonance import (OmegaTable, ResonanceQuery, expected_gap, search, theorem_window,
                                 verify_resonance)
from staircase.stationary_phase import omega_reduced
from staircase.verify import resonance_oracle


def mp_dist(q, eps, k):
    with mpmath.workdps(50):
        v = (q + 1) * mpmath.mpf(round(1 / eps)) * k * mpmath.log(k)
        return float(abs(v - mpmath.nint(v)))


def test_verify_example():
    ok, d, k = verify_resonance(12, 0.5, 2, 2, 0.05)
    assert ok and k == 2
    assert d == pytest.approx(mp_dist(12, 0.5, 2), abs=1e-13)
    assert d == pytest.approx(0.04365, abs=1e-5)


@pytest.mark.parametrize("eps", [0.5, 0.25, 1 / 9])
@pytest.mark.parametrize("q", [2, 77, 10**6, 123456789])
def test_k_one_is_always_resonant(eps, q):
    ok, d, k = verify_resonance(q, eps, 1, 1, 1e-12)
    assert ok and d == 0.0 and k == 1


@given(st.integers(2, 10**7), st.integers(1, 40))
def test_half_delta_always_ok(q, k_hi):
    ok, d, _ = verify_resonance(q, 0.25, 1, k_hi, 0.5)
    assert ok and 0 <= d <= 0.5


@given(st.integers(2, 10**9), st.integers(2, 8), st.integers(1, 500))
def test_distance_matches_oracle_and_product_route(q, inv, k):
    eps = 1.0 / inv
    table = OmegaTable(eps, k, k)
    d = float(table.distances([q])[0, 0])
    assert abs(d - mp_dist(q, eps, k)) <= 1e-9
    # The single-double route inherits the rounding of Omega itself, scaled by q + 1.
    om = omega_reduced(eps, k)
    tol = (q + 1) * abs(om) * 2.3e-16 + 1e-12
    assert abs(d - dist_to_int_of_product(q + 1, om)) <= tol


@given(st.integers(2, 10**8), st.lists(st.integers(-10**6, 10**6), min_size=5, max_size=5))
def test_integer_offsets_do_not_change_distances(q, offsets):
    table = OmegaTable(0.25, 3, 7)
    base = table.distances([q])
    shifted = table.shifted(offsets).distances([q])
    assert np.max(np.abs(base - shifted)) <= 1e-9


def test_search_example_includes_12():
    hits = search(ResonanceQuery(0.5, 0.05, 2, 2, 2, 100))
    qs = [h.q for h in hits]
    assert 12 in qs
    assert qs == resonance_oracle(0.5, 2, 2, 100, 0.05)


def test_search_equals_filter_of_verify():
    query = ResonanceQuery(0.25, 0.1, 4, 6, 2, 3000)
    hits = search(query)
    brute = []
    for q in range(2, 3001):
        ok, d, k = verify_resonance(q, 0.25, 4, 6, 0.1)
        if ok:
            brute.append((q, d, k))
    assert [(h.q, h.max_dist, h.argmax_k) for h in hits] == brute
    assert all(h.max_dist <= query.delta for h in hits)


def test_search_cross_checked_against_arbitrary_precision():
    hits = search(ResonanceQuery(1 / 3, 0.08, 2, 3, 2, 5000))
    oracle = []
    with mpmath.workdps(50):
        om = [3 * k * mpmath.log(k) for k in (2, 3)]
        for q in range(2, 5001):
            if all(abs((q + 1) * o - mpmath.nint((q + 1) * o)) <= 0.08 for o in om):
                oracle.append(q)
    assert [h.q for h in hits] == oracle


def test_search_deterministic_under_threads_and_chunks(monkeypatch):
    query = ResonanceQuery(0.5, 0.02, 2, 3, 2, 300000)
    a = search(query)
    b = search(query, threads=4)
    import staircase.resonance as r
    monkeypatch.setattr(r, "Q_CHUNK", 777)
    c = search(query, threads=3)
    assert a == b == c
    assert [h.q for h in a] == sorted(h.q for h in a)


def test_enlarging_range_keeps_hits():
    small = search(ResonanceQuery(0.5, 0.05, 2, 3, 2, 2000))
    big = search(ResonanceQuery(0.5, 0.05, 2, 3, 2, 20000))
    assert set(h.q for h in small) <= set(h.q for h in big)


def test_empty_result_is_legal():
    assert search(ResonanceQuery(0.25, 1e-6, 3, 8, 2, 1000)) == []


def test_capacity_error():
    with pytest.raises(CapacityError, match="smaller window or a larger delta"):
        search(ResonanceQuery(0.25, 0.1, 10, 30, 2, 100))
    assert search(ResonanceQuery(0.25, 0.49, 10, 30, 2, 100), max_window=21) is not None


@pytest.mark.parametrize("bad", [
    dict(eps=0.3), dict(delta=0.0), dict(delta=0.5), dict(k_lo=0), dict(k_lo=5, k_hi=4),
    dict(q_lo=10, q_hi=9), dict(q_hi=2**53),
])
def test_query_validation(bad):
    kw = dict(eps=0.25, delta=0.1, k_lo=1, k_hi=3, q_lo=2, q_hi=10)
    kw.update(bad)
    with pytest.raises(ParameterError):
        ResonanceQuery(**kw)


def test_precision_error_names_q():
    with pytest.raises(PrecisionError, match=str(2**53)):
        verify_resonance(2**53, 0.5, 2, 3, 0.1)


def test_expected_gap():
    assert expected_gap(1, 0.05) == pytest.approx(10.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert expected_gap(3, 0.05) == pytest.approx(1000.0)
    with pytest.warns(RuntimeWarning, match="gap"):
        assert expected_gap(12, 0.05) == pytest.approx(1e12)
    with pytest.raises(ParameterError):
        expected_gap(0, 0.1)


def test_theorem_window():
    lo, hi = theorem_window(16.0, 0.0 + 1e-12, 0.25)
    assert lo == 64 and hi == math.floor(64 * math.exp(0.25))
    lo, hi = theorem_window(10.0, 0.1, 0.5)
    assert lo == math.ceil(10**0.9 / 0.5) and hi == math.floor(10**1.1 * math.exp(0.5) / 0.5)
