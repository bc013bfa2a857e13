import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from staircase.errors import ParameterError
from staircase.numerics import Grid
from staircase.trig_sum import (FrequencySum, StaircaseParams, eval_direct, eval_many, eval_profile, omega,
                                omega_prime, snap_eps)


def mp_sum(q, eps, t, m=1.0, omega0=0.0, dps=40):
    with mpmath.workdps(dps):
        eps_mp = mpmath.mpf(1) / round(1 / eps)
        total = mpmath.mpc(0)
        for y in range(q):
            w = mpmath.mpf(omega0) + mpmath.mpf(m) * q / eps_mp**2 * mpmath.exp(eps_mp * y / q)
            total += mpmath.expjpi(2 * mpmath.mpf(t) * w)
        return complex(total / mpmath.sqrt(q))


param_strategy = st.builds(
    StaircaseParams,
    q=st.integers(2, 3000),
    eps=st.integers(1, 16).map(lambda n: 1.0 / n),
    m=st.floats(0.1, 20.0),
    omega0=st.floats(-1e4, 1e4),
)


def test_omega_examples():
    p = StaircaseParams(4, 1.0)
    assert omega(p, 0) == 4.0
    assert omega(p, 4) == pytest.approx(4 * math.e, rel=1e-15)
    assert omega(p, 4) == pytest.approx(10.87312731, abs=1e-8)


def test_omega_prime_matches_finite_difference():
    p = StaircaseParams(100, 0.25, 3.0, 7.0)
    y, h = 50.0, 1e-4
    fd = (omega(p, y + h) - omega(p, y - h)) / (2 * h)
    assert fd == pytest.approx(omega_prime(p, y), rel=1e-6)
    assert omega_prime(p, 0.0) >= 1 / p.eps * p.m


@given(param_strategy)
def test_omega_increasing_convex(p):
    y = np.linspace(0, p.q, 50)
    w = omega(p, y)
    assert np.all(np.diff(w) > 0)
    assert np.all(np.diff(w, 2) > -1e-9 * np.abs(w[2:]))


@pytest.mark.parametrize("bad", [
    dict(q=1, eps=0.5), dict(q=2.5, eps=0.5), dict(q=True, eps=0.5), dict(q=4, eps=0.3),
    dict(q=4, eps=0.0), dict(q=4, eps=1.5), dict(q=4, eps=0.5, m=0.0), dict(q=4, eps=0.5, m=-1.0),
    dict(q=4, eps=0.5, omega0=math.inf),
])
def test_params_validation_names_key(bad):
    with pytest.raises(ParameterError) as info:
        StaircaseParams(**bad)
    assert info.value.key in bad


def test_eps_snapped_exactly():
    p = StaircaseParams(10, 0.25 + 1e-11)
    assert p.eps == 0.25 and p.inv_eps == 4
    assert snap_eps(1 / 7 + 1e-12) == 1.0 / 7


@pytest.mark.parametrize("q, eps", [(2, 0.5), (17, 0.25), (1000, 1 / 8)])
def test_t_zero_gives_sqrt_q(q, eps):
    assert eval_direct(StaircaseParams(q, eps, 2.0, 3.5), 0.0) == pytest.approx(math.sqrt(q), abs=1e-12)


@pytest.mark.parametrize("q, eps, t, m, omega0", [
    (4, 1.0, 0.5, 1.0, 0.0),
    (50, 0.25, 3.7, 1.0, 0.0),
    (257, 0.125, 11.3, 2.5, 123.456),
    (4096, 0.25, 15.9, 1.0, 0.0),
])
def test_eval_direct_matches_high_precision(q, eps, t, m, omega0):
    p = StaircaseParams(q, eps, m, omega0)
    assert abs(eval_direct(p, t) - mp_sum(q, eps, t, m, omega0)) <= 1e-9


def test_frequency_sum_reduces_huge_phases_exactly():
    # t * f reaches ~1e12, so a plain float product would lose the fractional part.
    rng = np.random.default_rng(3)
    freqs = np.sort(rng.uniform(1e9, 4e9, 2000))
    t = 157.3
    got = FrequencySum(freqs)(t)
    with mpmath.workdps(50):
        total = mpmath.mpc(0)
        for f in freqs:
            total += mpmath.expjpi(2 * mpmath.mpf(t) * mpmath.mpf(float(f)))
        ref = complex(total / mpmath.sqrt(len(freqs)))
    assert abs(got - ref) <= 1e-9
    naive = np.exp(2j * np.pi * (t * freqs)).sum() / math.sqrt(len(freqs))
    assert abs(naive - ref) > 1e-7


@given(param_strategy, st.floats(-50, 50))
def test_modulus_bound_and_conjugate_symmetry(p, t):
    v = eval_direct(p.with_m(p.m), t)
    assert abs(v) <= math.sqrt(p.q) + 1e-9
    p0 = StaircaseParams(p.q, p.eps, p.m)
    assert abs(eval_direct(p0, -t) - eval_direct(p0, t).conjugate()) <= 1e-12


@given(param_strategy, st.floats(0.01, 30))
def test_omega0_leaves_modulus(p, t):
    p0 = StaircaseParams(p.q, p.eps, p.m)
    assert abs(abs(eval_direct(p, t)) - abs(eval_direct(p0, t))) <= 1e-9


@given(st.integers(2, 2000), st.integers(1, 10), st.floats(0.1, 8), st.floats(0.05, 5))
def test_m_rescaling_identity(q, inv, m, tau):
    eps = 1.0 / inv
    lhs = eval_direct(StaircaseParams(q, eps, m), tau)
    rhs = eval_direct(StaircaseParams(q, eps, 1.0), m * tau)
    assert abs(lhs - rhs) <= 1e-9
    # Second route: scale the frequencies rather than the time.
    base = StaircaseParams(q, eps)
    alt = FrequencySum(m * omega(base, np.arange(q)))(tau)
    assert abs(lhs - alt) <= 1e-9 * max(1.0, m * tau * omega(base, q) * 1e-6)


def test_profile_contains_sqrt_q_at_zero():
    p = StaircaseParams(64, 0.25)
    prof = eval_profile(p, Grid(-1.0, 1.0, 3))
    assert prof.values[1] == pytest.approx(8.0, abs=1e-12)
    assert len(prof.values) == 3


def test_profile_deterministic_and_thread_independent():
    p = StaircaseParams(513, 0.125, 1.7, 3.0)
    g = Grid(1.0, 9.0, 101, jitter_seed=42)
    a = eval_profile(p, g).values
    b = eval_profile(p, g).values
    c = eval_profile(p, g, threads=4).values
    assert a.tobytes() == b.tobytes() == c.tobytes()
    assert np.max(np.abs(a)) <= math.sqrt(513) + 1e-9


def test_eval_many_matches_eval_direct():
    p = StaircaseParams(300, 0.25, 2.0)
    ts = np.linspace(0.5, 4, 9)
    many = eval_many(p, ts, threads=3)
    assert np.array_equal(many, np.array([eval_direct(p, t) for t in ts]))
