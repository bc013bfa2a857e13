"""Brute-force evaluation of exponential staircase trigonometric sums.

    S(t) = q^{-1/2} sum_{y=0}^{q-1} exp(2 pi i t omega(y)),
    omega(y) = omega0 + m (q / eps^2) exp(eps y / q).

Phases are reduced modulo one with an exact two-word product before any
trigonometric call, so arguments t*omega(y) far beyond 2**53 keep their
fractional part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .numerics import Grid, chunked_sum, frac_of_product, parallel_map, split

EPS_TOLERANCE = 1e-9


def snap_eps(eps: float, key: str = "eps") -> float:
    """Validate that 1/eps is an integer (to 1e-9) and return exactly 1/round(1/eps).

    eps = 1 is admitted since 1/eps = 1 is an integer; tower schedules reject it separately.
    """
    try:
        eps = float(eps)
    except (TypeError, ValueError):
        raise ParameterError(key, f"must be a real number, got {eps!r}") from None
    if not 0.0 < eps <= 1.0:
        raise ParameterError(key, f"must lie in (0, 1], got {eps!r}")
    n = round(1.0 / eps)
    if abs(1.0 / eps - n) > EPS_TOLERANCE:
        raise ParameterError(key, f"1/eps = {1.0 / eps!r} is not an integer")
    return 1.0 / n


@dataclass(frozen=True)
class StaircaseParams:
    q: int
    eps: float
    m: float = 1.0
    omega0: float = 0.0

    def __post_init__(self):
        if isinstance(self.q, bool) or int(self.q) != self.q or self.q < 2:
            raise ParameterError("q", f"must be an integer >= 2, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "eps", snap_eps(self.eps))
        if not (math.isfinite(self.m) and self.m > 0):
            raise ParameterError("m", f"must be positive, got {self.m!r}")
        object.__setattr__(self, "m", float(self.m))
        if not math.isfinite(self.omega0):
            raise ParameterError("omega0", "must be finite")
        object.__setattr__(self, "omega0", float(self.omega0))

    @property
    def inv_eps(self) -> int:
        return round(1.0 / self.eps)

    def with_m(self, m: float) -> "StaircaseParams":
        return StaircaseParams(self.q, self.eps, m, self.omega0)


@dataclass
class SumProfile:
    params: StaircaseParams
    grid: Grid
    t: np.ndarray
    values: np.ndarray = field(repr=False)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)


def omega(params: StaircaseParams, y):
    """Frequency function omega0 + m (q/eps^2) exp(eps y / q)."""
    q, eps = params.q, params.eps
    return params.omega0 + params.m * (q / eps**2) * np.exp(eps * np.asarray(y, dtype=float) / q)


def omega_prime(params: StaircaseParams, y):
    return (params.m / params.eps) * np.exp(params.eps * np.asarray(y, dtype=float) / params.q)


def _base_frequencies(params: StaircaseParams) -> np.ndarray:
    q, eps = params.q, params.eps
    return (q / eps**2) * np.exp(eps * np.arange(q, dtype=float) / q)


class FrequencySum:
    """Normalized sum q^{-1/2} sum_j exp(2 pi i t f_j) over a fixed frequency array."""

    def __init__(self, freqs):
        self.freqs = np.ascontiguousarray(freqs, dtype=float)
        self._hi, self._lo = split(self.freqs)
        self._norm = 1.0 / math.sqrt(self.freqs.shape[0])

    def __call__(self, t: float) -> complex:
        t = float(t)
        f = self.freqs
        p = t * f
        th, tl = split(t)
        e = ((th * self._hi - p) + th * self._lo + tl * self._hi) + tl * self._lo
        r = (p - np.rint(p)) + (e - np.rint(e))
        ang = 2.0 * math.pi * r
        return complex(chunked_sum(np.cos(ang)), chunked_sum(np.sin(ang))) * self._norm

    def many(self, ts, threads: int = 1) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return np.array(parallel_map(self, ts, threads), dtype=complex)


def _offset_phase(t: float, omega0: float) -> complex:
    if omega0 == 0.0:
        return 1.0
    r = float(frac_of_product(float(t), omega0))
    return complex(math.cos(2 * math.pi * r), math.sin(2 * math.pi * r))


class _DirectEvaluator:
    def __init__(self, params: StaircaseParams):
        self.params = params
        self.core = FrequencySum(_base_frequencies(params))

    def __call__(self, t: float) -> complex:
        t = float(t)
        # m is folded into t first, so S_m(tau) and S_1(m tau) share the same arithmetic.
        value = self.core(self.params.m * t)
        return value * _offset_phase(t, self.params.omega0)


def eval_direct(params: StaircaseParams, t: float) -> complex:
    return _DirectEvaluator(params)(t)


def eval_many(params: StaircaseParams, ts, threads: int = 1) -> np.ndarray:
    ev = _DirectEvaluator(params)
    return np.array(parallel_map(ev, np.asarray(ts, dtype=float), threads), dtype=complex)


def eval_profile(params: StaircaseParams, grid: Grid, threads: int = 1) -> SumProfile:
    t = grid.nodes()
    return SumProfile(params, grid, t, eval_many(params, t, threads))
