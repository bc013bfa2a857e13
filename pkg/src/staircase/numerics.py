"""Low-level numerics: mod-1 reduction in extended precision, grids, quadrature."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, DomainError, PrecisionError, ShapeError

# Veltkamp splitting constant for binary64: 2**27 + 1.
_SPLITTER = 134217729.0
# Above this magnitude the splitter product overflows.
_SPLIT_LIMIT = 2.0**996

SUM_CHUNK = 1 << 18
# Per-unit-width panel agreement that counts as round-off for a unimodular integrand.
_ROUNDOFF = 16 * np.finfo(float).eps


@dataclass(frozen=True)
class Grid:
    start: float
    end: float
    count: int
    jitter_seed: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise DomainError("grid bounds must be finite")
        if not self.start < self.end:
            raise DomainError(f"grid start {self.start} must be < end {self.end}")
        if int(self.count) != self.count or self.count < 2:
            raise DomainError(f"grid count must be an integer >= 2, got {self.count}")

    @property
    def spacing(self) -> float:
        return (self.end - self.start) / (self.count - 1)

    def nodes(self) -> np.ndarray:
        """Node positions; interior nodes are jittered by at most a quarter spacing.

        The end points stay fixed so the grid spans exactly [start, end].
        """
        x = np.linspace(self.start, self.end, int(self.count))
        if self.jitter_seed is not None and self.count > 2:
            rng = np.random.default_rng(self.jitter_seed)
            h = self.spacing
            x[1:-1] += rng.uniform(-0.25 * h, 0.25 * h, size=int(self.count) - 2)
        return x


def dist_to_int(x: float) -> float:
    """Distance from ``x`` to the nearest integer."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"dist_to_int of non-finite value {x!r}")
    return abs(x - round(x))


def split(a):
    """Veltkamp split of ``a`` into 26-bit high and low halves."""
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_product(a, b):
    """Return ``(p, e)`` with ``p = fl(a*b)`` and ``p + e == a*b`` exactly.

    Works elementwise on numpy arrays.
    """
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _magnitude(a, b) -> str:
    with np.errstate(divide="ignore"):
        la = np.log10(np.max(np.abs(np.asarray(a, dtype=float))))
        lb = np.log10(np.max(np.abs(np.asarray(b, dtype=float))))
    return f"1e+{la + lb:.1f}"


def frac_of_product(a, b):
    """Signed fractional part of ``a*b`` in [-1/2, 1/2], from the exact two-word product.

    The high and low words are each reduced modulo one before being combined, so
    the result keeps full double accuracy even when ``a*b`` is far beyond 2**53.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        p, e = two_product(a, b)
    if not np.all(np.isfinite(p)) or not np.all(np.isfinite(e)):
        raise PrecisionError(f"extended product overflow, |a*b| ~ {_magnitude(a, b)}")
    r = (p - np.rint(p)) + (e - np.rint(e))
    return r - np.rint(r)


def dist_to_int_of_product(a: float, b: float) -> float:
    """``dist_to_int(a*b)`` evaluated with a compensated product."""
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("dist_to_int_of_product needs finite factors")
    if abs(a) > _SPLIT_LIMIT or abs(b) > _SPLIT_LIMIT or not math.isfinite(a * b):
        raise PrecisionError(f"extended product overflow, |a*b| ~ {_magnitude(a, b)}")
    return float(abs(frac_of_product(a, b)))


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def trapezoid(values, grid: Grid) -> float:
    values = np.asarray(values)
    if values.shape != (grid.count,):
        raise ShapeError(f"{values.shape[0] if values.ndim else 0} values for a grid of {grid.count} nodes")
    return np.sum(trapezoid_weights(grid.nodes()) * values)


def chunked_sum(values: np.ndarray):
    """Pairwise sum with a fixed chunk layout (numpy's own sum is pairwise within a chunk)."""
    n = values.shape[0]
    if n <= SUM_CHUNK:
        return values.sum()
    partial = np.array([values[i:i + SUM_CHUNK].sum() for i in range(0, n, SUM_CHUNK)])
    return partial.sum()


def parallel_map(fn, items, threads: int = 1):
    """Apply ``fn`` to every item; output order always follows input order."""
    items = list(items)
    if threads == 0:
        threads = min(32, len(items)) or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fresnel_reference(k: float) -> complex:
    """Leading term sqrt(pi/k) e^{i pi/4} of the integral of e^{ikx^2} over [-1, 1]."""
    if not k > 0:
        raise DomainError(f"fresnel_reference needs k > 0, got {k}")
    return complex(math.sqrt(math.pi / k) * np.exp(0.25j * math.pi))


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def oscillatory_quadrature(freq: Callable[[np.ndarray], np.ndarray], t: float, limits, tol: float = 1e-10,
                           max_panels: int = 1 << 20, order: int = 15) -> complex:
    """Integrate exp(i t freq(x)) over ``limits`` by adaptive bisection.

    Every active panel is compared against the sum of its two halves with a
    fixed ``order``-point Gauss-Legendre rule; a panel is accepted once the two
    differ by less than its share of ``tol``. ``freq`` must accept an array.
    """
    lo, hi = map(float, limits)
    if not lo < hi:
        raise DomainError(f"quadrature limits must be ordered, got {limits}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    xg, wg = _gauss_legendre(order)
    total_width = hi - lo

    def rule(a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[:, None] + half[:, None] * xg[None, :]
        phase = t * np.broadcast_to(np.asarray(freq(x), dtype=float), x.shape)
        vals = np.exp(1j * phase)
        return half * (vals @ wg), np.abs(phase).max(axis=1)

    # Start from a few panels so a lucky single-panel match cannot end refinement.
    edges = np.linspace(lo, hi, 9)
    a = edges[:-1]
    b = edges[1:]
    coarse, _ = rule(a, b)
    accepted = 0j
    previous = None
    while True:
        m = 0.5 * (a + b)
        left, mag_l = rule(a, m)
        right, mag_r = rule(m, b)
        fine = left + right
        # Phase rounding grows with |t freq|; differences below it are noise.
        floor = _ROUNDOFF * (1.0 + np.maximum(mag_l, mag_r))
        current = accepted + complex(np.sum(fine))
        ok = np.abs(fine - coarse) < np.maximum(tol / total_width, floor) * (b - a)
        accepted += complex(np.sum(fine[ok]))
        bad = ~ok
        if not bad.any():
            return accepted
        n_next = 2 * int(bad.sum())
        if n_next > max_panels:
            raise ConvergenceError(f"oscillatory_quadrature needs more than {max_panels} panels",
                                   previous, current)
        previous = current
        a = np.concatenate([a[bad], m[bad]])
        b = np.concatenate([m[bad], b[bad]])
        coarse = np.concatenate([left[bad], right[bad]])
