"""Exhaustive search for resonant q.

q is resonant for (eps, delta, window) when ||(q+1) Omega(k)||_Z <= delta for
every k in the window, Omega(k) = k ln k / eps. The Omega values are held as
double-double pairs so the per-q reduction stays accurate for q up to 2**53.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import CapacityError, ParameterError, PrecisionError
from .numerics import parallel_map, two_product, two_sum
from .trig_sum import snap_eps

DEFAULT_MAX_WINDOW = 12
FEASIBLE_GAP = 1e9
Q_CHUNK = 1 << 16
_Q_LIMIT = 2**53 - 1


@dataclass(frozen=True)
class ResonanceQuery:
    eps: float
    delta: float
    k_lo: int
    k_hi: int
    q_lo: int
    q_hi: int

    def __post_init__(self):
        object.__setattr__(self, "eps", snap_eps(self.eps))
        if not 0 < self.delta < 0.5:
            raise ParameterError("delta", f"must lie in (0, 1/2), got {self.delta!r}")
        for key in ("k_lo", "k_hi", "q_lo", "q_hi"):
            v = getattr(self, key)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ParameterError(key, f"must be a positive integer, got {v!r}")
            object.__setattr__(self, key, int(v))
        if self.k_hi < self.k_lo:
            raise ParameterError("k_hi", f"window [{self.k_lo}, {self.k_hi}] is empty")
        if self.q_hi < self.q_lo:
            raise ParameterError("q_hi", f"range [{self.q_lo}, {self.q_hi}] is empty")
        if self.q_hi >= _Q_LIMIT:
            raise ParameterError("q_hi", "must stay below 2**53 - 1")

    @property
    def window_size(self) -> int:
        return self.k_hi - self.k_lo + 1


@dataclass(frozen=True)
class ResonanceHit:
    q: int
    max_dist: float
    argmax_k: int


class OmegaTable:
    """Omega(k) = k ln k / eps for a window of k, as (hi, lo) double-double pairs."""

    def __init__(self, eps: float, k_lo: int, k_hi: int, hi=None, lo=None):
        self.eps = snap_eps(eps)
        self.k = np.arange(int(k_lo), int(k_hi) + 1, dtype=np.int64)
        if hi is None:
            hi, lo = _omega_dd(round(1 / self.eps), int(k_lo), int(k_hi))
        self.hi = np.asarray(hi, dtype=float)
        self.lo = np.asarray(lo, dtype=float)

    def shifted(self, offsets) -> "OmegaTable":
        """Same table with integers added to each Omega (for mod-1 consistency checks)."""
        off = np.broadcast_to(np.asarray(offsets, dtype=float), self.hi.shape)
        s, e = two_sum(self.hi, off)
        hi, lo = two_sum(s, e + self.lo)
        return OmegaTable(self.eps, int(self.k[0]), int(self.k[-1]), hi, lo)

    def distances(self, qs) -> np.ndarray:
        """||(q+1) Omega(k)||_Z for every q in ``qs`` (rows) and k in the window (columns)."""
        Q = (np.asarray(qs, dtype=np.int64) + 1).astype(float)[:, None]
        p, e = two_product(Q, self.hi[None, :])
        r = (p - np.rint(p)) + (e - np.rint(e)) + Q * self.lo[None, :]
        return np.abs(r - np.rint(r))


@lru_cache(maxsize=64)
def _omega_dd(inv_eps: int, k_lo: int, k_hi: int):
    hi = np.empty(k_hi - k_lo + 1)
    lo = np.empty_like(hi)
    with mpmath.workdps(40):
        for i, k in enumerate(range(k_lo, k_hi + 1)):
            v = inv_eps * k * mpmath.log(k)
            hi[i] = float(v)
            lo[i] = float(v - mpmath.mpf(hi[i]))
    return hi, lo


def _check_q(q: int, k: int):
    if q + 1 > _Q_LIMIT:
        raise PrecisionError(f"q = {q} (k = {k}): q + 1 exceeds exact double range")


def verify_resonance(q: int, eps: float, k_lo: int, k_hi: int, delta: float):
    """(ok, max_dist, argmax_k) for one q; ties resolve to the smallest k."""
    q = int(q)
    if k_hi < k_lo or k_lo < 1:
        raise ParameterError("k_lo", f"invalid window [{k_lo}, {k_hi}]")
    _check_q(q, k_lo)
    table = OmegaTable(eps, k_lo, k_hi)
    return _verdict(table, q, delta)


def _verdict(table: OmegaTable, q: int, delta: float):
    d = table.distances([q])[0]
    j = int(np.argmax(d))
    return bool(d[j] <= delta), float(d[j]), int(table.k[j])


def expected_gap(window_size: int, delta: float) -> float:
    """Typical spacing between resonant q for a generic torus shift: (2 delta)^-window."""
    if window_size < 1:
        raise ParameterError("window_size", f"must be >= 1, got {window_size}")
    if not 0 < delta < 0.5:
        raise ParameterError("delta", f"must lie in (0, 1/2), got {delta}")
    gap = (2.0 * delta) ** (-window_size)
    if gap > FEASIBLE_GAP:
        warnings.warn(f"expected gap between resonant q is {gap:.3g}; a desk scan is unlikely to find one",
                      RuntimeWarning, stacklevel=2)
    return gap


def _scan_chunk(args):
    table, lo, hi, delta = args
    qs = np.arange(lo, hi + 1, dtype=np.int64)
    d = table.distances(qs)
    mx = d.max(axis=1)
    rows = np.flatnonzero(mx <= delta)
    am = np.argmax(d[rows], axis=1)
    return [ResonanceHit(int(qs[r]), float(mx[r]), int(table.k[a])) for r, a in zip(rows, am)]


def search(query: ResonanceQuery, max_window: int = DEFAULT_MAX_WINDOW, threads: int = 1):
    """All resonant q in [q_lo, q_hi], ascending. Identical to filtering verify_resonance."""
    if query.window_size > max_window:
        raise CapacityError(
            f"k window of {query.window_size} values exceeds the cap of {max_window}; "
            f"the expected gap (2 delta)^-|K| grows too fast. Use a smaller window or a larger delta.")
    table = OmegaTable(query.eps, query.k_lo, query.k_hi)
    jobs = [(table, lo, min(lo + Q_CHUNK - 1, query.q_hi), query.delta)
            for lo in range(query.q_lo, query.q_hi + 1, Q_CHUNK)]
    hits = []
    for part in parallel_map(_scan_chunk, jobs, threads):
        hits.extend(part)
    return hits


def theorem_window(m: float, alpha: float, eps: float):
    """Integer k window [m^(1-alpha)/eps, m^(1+alpha) e^eps / eps] of the main theorem."""
    eps = snap_eps(eps)
    lo = max(1, math.ceil(m ** (1 - alpha) / eps))
    hi = math.floor(m ** (1 + alpha) * math.exp(eps) / eps)
    return lo, hi
