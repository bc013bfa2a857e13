"""Exponential-staircase rank-one flows and their partial Riesz products.

Stage n cuts a tower of height h_n into q_n columns and stacks column y at
offset omega_n(y) = m_n (q_n / eps_n^2) (e^{eps_n y / q_n} - 1), so the spacer
above column y is omega_n(y+1) - omega_n(y) - h_n. Spectral densities use the
transform convention f^(t) = int f(x) e^{2 pi i t x} dx, under which lifting a
function through stage n multiplies its transform by sqrt(q_n) P_n(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConsistencyError, DomainError, ParameterError, ScheduleError
from .numerics import Grid, frac_of_product, trapezoid_weights
from .resonance import theorem_window, verify_resonance
from .trig_sum import FrequencySum, StaircaseParams, eval_many, snap_eps

SPACER_TOL = 1e-9
SNAP_NOTE_THRESHOLD = 0.01
TAIL_FRACTION = 1e-4


@dataclass
class TowerStage:
    index: int
    q: int
    m: float
    eps: float
    h: float
    spacers: np.ndarray = field(repr=False)

    def omega(self, y):
        y = np.asarray(y, dtype=float)
        return self.m * (self.q / self.eps**2) * np.expm1(self.eps * y / self.q)

    def frequencies(self) -> np.ndarray:
        return self.omega(np.arange(self.q))

    @property
    def next_height(self) -> float:
        return float(self.m * (self.q / self.eps**2) * math.expm1(self.eps))

    @property
    def params(self) -> StaircaseParams:
        # omega0 = 0: the -1 inside omega_n only shifts the phase of P_n.
        return StaircaseParams(self.q, self.eps, self.m)

    @property
    def measure_increment(self) -> float:
        return math.log(self.next_height / (self.q * self.h))


@dataclass
class TowerSpec:
    stages: List[TowerStage]
    n0: int = 0
    notes: List[str] = field(default_factory=list)

    def stage(self, n: int) -> TowerStage:
        i = n - self.n0
        if not 0 <= i < len(self.stages):
            raise ScheduleError(n, f"no such stage (schedule covers {self.n0}..{self.n0 + len(self.stages) - 1})")
        return self.stages[i]

    def __len__(self):
        return len(self.stages)


def _make_stage(index, q, m, eps, h) -> TowerStage:
    if isinstance(q, bool) or int(q) != q or q < 2:
        raise ScheduleError(index, f"q must be an integer >= 2, got {q!r}")
    q = int(q)
    y = np.arange(q, dtype=float)
    step = m * (q / eps**2) * np.exp(eps * y / q) * math.expm1(eps / q)
    spacers = step - h
    if spacers.min() < -SPACER_TOL * max(1.0, h):
        raise ScheduleError(index, f"negative spacer {spacers.min()!r}")
    return TowerStage(index, q, float(m), float(eps), float(h), np.maximum(spacers, 0.0))


def build_schedule(n0: int, stages_in, eps_0: float, count: Optional[int] = None) -> TowerSpec:
    """Build a schedule from (q_n, m_n) pairs; later eps_n follow from the derived heights.

    eps_{n+1} = m_{n+1} / h_{n+1} is snapped to a reciprocal integer by moving
    m_{n+1} to the nearer of the two admissible values; h_{n+1} is never changed.
    """
    stages_in = list(stages_in)
    if count is None:
        count = len(stages_in)
    if count < 1 or count > len(stages_in):
        raise ScheduleError(n0, f"count {count} must lie in [1, {len(stages_in)}]")
    try:
        eps = snap_eps(eps_0, "eps_0")
    except ParameterError as exc:
        raise ScheduleError(n0, str(exc)) from None
    if eps >= 1.0:
        raise ScheduleError(n0, "eps_0 must be < 1")
    notes = []
    stages = []
    q, m = stages_in[0]
    if not m > 0:
        raise ScheduleError(n0, f"m must be positive, got {m!r}")
    stages.append(_make_stage(n0, q, float(m), eps, m / eps))
    for i in range(1, count):
        n = n0 + i
        q, m_target = stages_in[i]
        if not m_target > 0:
            raise ScheduleError(n, f"m must be positive, got {m_target!r}")
        h = stages[-1].next_height
        ratio = h / m_target
        cands = [c for c in {math.floor(ratio), math.ceil(ratio)} if c >= 2]
        if not cands:
            raise ScheduleError(n, f"m = {m_target!r} is incompatible with height {h!r} (eps would be >= 1)")
        inv = min(cands, key=lambda c: (abs(h / c - m_target), c))
        eps_n = 1.0 / inv
        m_n = h / inv
        rel = abs(m_n - m_target) / m_target
        if rel > SNAP_NOTE_THRESHOLD:
            notes.append(f"stage {n}: m adjusted from {m_target!r} to {m_n!r} ({100 * rel:.2f}%) to make 1/eps an integer")
        stages.append(_make_stage(n, q, m_n, eps_n, h))
    return TowerSpec(stages, n0, notes)


def check_finite_measure(spec: TowerSpec):
    """(log_product, converging_trend, increments) for prod h_{n+1} / (q_n h_n)."""
    if len(spec) < 2:
        raise ScheduleError(spec.n0, "finite-measure check needs at least 2 stages")
    inc = np.array([s.measure_increment for s in spec.stages])
    trend = bool(np.all(np.diff(inc) < 0) and np.all(inc[1:] / inc[:-1] < 1))
    return float(inc.sum()), trend, inc


def check_theorem_hypotheses(spec: TowerSpec, alpha: float):
    """Per-stage verdicts for the main theorem's clauses; the summability clause has stage None.

    Summability of m_n^-(1/4 - alpha) cannot be decided from finitely many
    stages; it is judged by whether the terms strictly decrease.
    """
    if not 0 < alpha < 0.25:
        raise DomainError(f"alpha must lie in (0, 1/4), got {alpha}")
    out = []
    for s in spec.stages:
        lhs = s.h ** (1 + alpha)
        out.append((s.index, "h^(1+alpha) <= q", lhs <= s.q, f"h^(1+alpha) = {lhs!r}, q = {s.q}"))
        rhs = s.h ** (0.5 - alpha)
        out.append((s.index, "m <= h^(1/2-alpha)", s.m <= rhs, f"m = {s.m!r}, h^(1/2-alpha) = {rhs!r}"))
        k_lo, k_hi = theorem_window(s.m, alpha, s.eps)
        if k_hi < k_lo:
            out.append((s.index, "resonance", True, f"empty window [{k_lo}, {k_hi}]"))
        else:
            ok, dist, k = verify_resonance(s.q, s.eps, k_lo, k_hi, s.eps)
            out.append((s.index, "resonance", ok,
                        f"window [{k_lo}, {k_hi}], max ||(q+1) Omega(k)|| = {dist!r} at k = {k}, tol = {s.eps!r}"))
    terms = np.array([s.m ** -(0.25 - alpha) for s in spec.stages])
    decreasing = bool(len(terms) > 1 and np.all(np.diff(terms) < 0))
    out.append((None, "sum m^-(1/4-alpha) < inf", decreasing,
                f"partial sum = {float(terms.sum())!r}, terms strictly decreasing = {decreasing}"))
    return out


@dataclass
class PiecewiseConstant:
    """Finite sum of weighted interval indicators, intervals sorted and disjoint."""

    intervals: np.ndarray  # shape (n, 2)
    values: np.ndarray

    def __post_init__(self):
        self.intervals = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        self.values = np.broadcast_to(np.asarray(self.values, dtype=float), (self.intervals.shape[0],)).copy()
        if np.any(self.intervals[:, 1] <= self.intervals[:, 0]):
            raise DomainError("every interval must have a < b")
        order = np.argsort(self.intervals[:, 0], kind="stable")
        self.intervals = self.intervals[order]
        self.values = self.values[order]

    @classmethod
    def indicator(cls, a: float, b: float) -> "PiecewiseConstant":
        return cls([[a, b]], [1.0])

    @property
    def support(self):
        return float(self.intervals[0, 0]), float(self.intervals[-1, 1])

    @property
    def measure(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    @property
    def l2_sq(self) -> float:
        return float(np.sum(self.values**2 * (self.intervals[:, 1] - self.intervals[:, 0])))

    @property
    def variation_weight(self) -> float:
        return float(np.sum(np.abs(self.values)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for (a, b), v in zip(self.intervals, self.values):
            out[(x >= a) & (x < b)] += v
        return out

    def transform(self, t) -> np.ndarray:
        """Closed-form f^(t) = sum_j v_j e^{pi i t (a_j+b_j)} (b_j-a_j) sinc((b_j-a_j) t)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a = self.intervals[:, 0]
        b = self.intervals[:, 1]
        out = np.zeros(t.shape, dtype=complex)
        for j in range(a.shape[0]):
            ph = frac_of_product(t, 0.5 * (a[j] + b[j]))
            w = b[j] - a[j]
            out += self.values[j] * w * np.sinc(w * t) * np.exp(2j * math.pi * ph)
        return out


def lift(spec: TowerSpec, stage_from: int, f: PiecewiseConstant) -> PiecewiseConstant:
    """f_(n+1)(x) = sum_y f_(n)(x - omega_n(y)) on [0, h_{n+1}]."""
    s = spec.stage(stage_from)
    lo, hi = f.support
    tol = SPACER_TOL * max(1.0, s.h)
    if lo < -tol or hi > s.h + tol:
        raise DomainError(f"function support [{lo}, {hi}] is not inside [0, h] = [0, {s.h}]")
    offs = s.frequencies()
    iv = (f.intervals[None, :, :] + offs[:, None, None]).reshape(-1, 2)
    vals = np.tile(f.values, s.q)
    order = np.argsort(iv[:, 0], kind="stable")
    iv = iv[order]
    gaps = iv[1:, 0] - iv[:-1, 1]
    if gaps.size and gaps.min() < -tol:
        j = int(np.argmin(gaps))
        raise ConsistencyError(f"lifted intervals overlap at x = {iv[j + 1, 0]!r}")
    return PiecewiseConstant(iv, vals[order])


def lift_indicator(spec: TowerSpec, stage_from: int, level_interval) -> PiecewiseConstant:
    a, b = map(float, level_interval)
    return lift(spec, stage_from, PiecewiseConstant.indicator(a, b))


def stage_sum(stage: TowerStage, t) -> np.ndarray:
    """P_n(t) = q_n^{-1/2} sum_y e^{2 pi i t omega_n(y)} with the exact stage offsets."""
    fs = FrequencySum(stage.frequencies())
    return fs.many(np.atleast_1d(t))


def default_spectral_span(base: PiecewiseConstant) -> float:
    """B with the mass of |f^|^2 outside [-B, B] below TAIL_FRACTION of ||f||^2.

    Uses |f^(t)| <= V / (pi |t|), V = sum |v_j|, whose tail integral is 2 V^2 / (pi^2 B).
    """
    v = base.variation_weight
    return 2.0 * v * v / (math.pi**2 * TAIL_FRACTION * base.l2_sq)


@dataclass
class DensityEstimate:
    grid: Grid
    t: np.ndarray
    base_density: np.ndarray
    factors_applied: int
    values: np.ndarray
    factors: List[np.ndarray] = field(default_factory=list, repr=False)
    metadata: dict = field(default_factory=dict)


def riesz_partial(spec: TowerSpec, base: PiecewiseConstant, grid: Grid, N: int, threads: int = 1) -> DensityEstimate:
    """Pi_N(t) = |f^(t)|^2 prod_{n=n0}^{n0+N-1} |P_n(t)|^2 on the grid nodes."""
    if not 0 <= N <= len(spec):
        raise ScheduleError(spec.n0 + N, f"N = {N} exceeds the {len(spec)} available stages")
    first = spec.stages[0]
    lo, hi = base.support
    tol = SPACER_TOL * max(1.0, first.h)
    if lo < -tol or hi > first.h + tol:
        raise DomainError(f"base support [{lo}, {hi}] is not inside [0, h_n0] = [0, {first.h}]")
    t = grid.nodes()
    base_density = np.abs(base.transform(t)) ** 2
    values = base_density.copy()
    factors = []
    warnings_ = []
    for s in spec.stages[:N]:
        q_n = np.abs(eval_many(s.params, t, threads)) ** 2
        factors.append(q_n)
        values = values * q_n
        flat_lo, flat_hi = 1.0 / s.m, 1.0 / (s.m * s.eps)
        if t[0] < flat_lo or t[-1] > flat_hi:
            warnings_.append(f"stage {s.index}: grid [{t[0]!r}, {t[-1]!r}] extends beyond the flat range "
                             f"[{flat_lo!r}, {flat_hi!r}] of |P_n|^2")
    meta = {
        "transform_convention": "f^(t) = int f(x) exp(2 pi i t x) dx",
        "l2_norm_sq": base.l2_sq,
        "base_mass_on_grid": float(np.sum(trapezoid_weights(t) * base_density)),
        "default_span": default_spectral_span(base),
        "warnings": warnings_,
    }
    return DensityEstimate(grid, t, base_density, N, values, factors, meta)


def correlation_estimate(density: DensityEstimate, t_probe: float):
    """(R(t_probe), span, symmetric): trapezoid of e^{2 pi i t_probe x} Pi_N(x) over the grid."""
    x = density.t
    w = trapezoid_weights(x)
    ph = frac_of_product(x, float(t_probe))
    val = complex(np.sum(w * density.values * np.exp(2j * math.pi * ph)))
    symmetric = bool(np.allclose(x, -x[::-1], rtol=0, atol=1e-12 * max(1.0, abs(x[-1]))))
    return val, (float(x[0]), float(x[-1])), symmetric


@dataclass
class PiecewiseLinear:
    """Continuous test function given by knots; zero outside the first and last knot."""

    knots: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        if self.knots.shape != self.heights.shape or self.knots.size < 2:
            raise DomainError("knots and heights need the same length >= 2")
        if np.any(np.diff(self.knots) <= 0):
            raise DomainError("knots must be strictly increasing")

    @classmethod
    def hat(cls, a: float, b: float, height: float = 1.0) -> "PiecewiseLinear":
        return cls([a, 0.5 * (a + b), b], [0.0, height, 0.0])

    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.heights)))

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.knots, self.heights, left=0.0, right=0.0)


def HatFunction(a: float, b: float, height: float = 1.0) -> PiecewiseLinear:
    return PiecewiseLinear.hat(a, b, height)


@dataclass
class WeakConvergenceReport:
    N_list: List[int]
    values: List[float]
    diffs: List[float]
    bounds: List[float]
    decreasing: bool


def weak_convergence_diagnostic(spec: TowerSpec, base: PiecewiseConstant, grid: Grid, N_list, test_fn: PiecewiseLinear,
                                threads: int = 1) -> WeakConvergenceReport:
    """<Pi_N, psi> for each N, with successive differences and their a priori bounds.

    The bound for consecutive N is ||psi||_inf * max_supp Pi_{N-1} * int_supp |Q_N - 1|,
    which holds because Pi_N - Pi_{N-1} = Pi_{N-1} (Q_N - 1).
    """
    N_list = [int(n) for n in N_list]
    a, b = test_fn.support
    t = grid.nodes()
    if not a > 0:
        raise DomainError(f"test function support must stay away from 0, got [{a}, {b}]")
    if a < t[0] or b > t[-1]:
        raise DomainError(f"test function support [{a}, {b}] is not inside the grid")
    n_max = max(N_list) if N_list else 0
    est = riesz_partial(spec, base, grid, n_max, threads)
    w = trapezoid_weights(t)
    psi = test_fn(t)
    supp = (t >= a) & (t <= b)
    pis = [est.base_density]
    for q_n in est.factors:
        pis.append(pis[-1] * q_n)
    inner = [float(np.sum(w * psi * p)) for p in pis]
    values = [inner[n] for n in N_list]
    diffs = [abs(values[i + 1] - values[i]) for i in range(len(values) - 1)]
    bounds = []
    for i in range(len(N_list) - 1):
        n1, n2 = N_list[i], N_list[i + 1]
        if n2 == n1 + 1 and n1 >= 0:
            dev = float(np.sum((w * np.abs(est.factors[n1] - 1.0))[supp]))
            bounds.append(test_fn.sup_norm * float(pis[n1][supp].max()) * dev)
        else:
            bounds.append(math.nan)
    decreasing = bool(len(diffs) > 1 and all(diffs[i + 1] < diffs[i] for i in range(len(diffs) - 1)))
    return WeakConvergenceReport(N_list, values, diffs, bounds, decreasing)


def mass_bound_check(est: DensityEstimate, interval):
    """Per stage: (mass_N, mass_{N-1} + max Pi_{N-1} * int |Q_N - 1|) over ``interval``."""
    a, b = map(float, interval)
    t = est.t
    sel = (t >= a) & (t <= b)
    w = trapezoid_weights(t[sel])
    prev = est.base_density[sel]
    out = []
    for q_n in est.factors:
        cur = prev * q_n[sel]
        bound = float(np.sum(w * prev)) + float(prev.max()) * float(np.sum(w * np.abs(q_n[sel] - 1.0)))
        out.append((float(np.sum(w * cur)), bound))
        prev = cur
    return out
