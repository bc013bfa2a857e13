"""Two-stage stationary-phase reduction of the staircase sum.

First stage: S(t) is replaced by a weighted sum over the stationary points
y_k = (q/eps) ln(eps k / t) for integers K0 < k < K1, K0 = t/eps, K1 = K0 e^eps.
Second stage: for resonant q the reduced sum has a single stationary point k*
and collapses to one unimodular term.

Big-O constants in every error budget are taken as 1. The time variable used
throughout is t_eff = m * t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError
from .numerics import dist_to_int, frac_of_product, two_product
from .trig_sum import StaircaseParams, snap_eps

EXCEPTIONAL_TOL = 1e-9
# Unit-modulus phase e^{i pi/4} produced by each stationary point of a convex phase.
EIGHTH = 0.125


@dataclass
class PhaseSet:
    t: float
    t_eff: float
    K0: float
    K1: float
    k: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    phase_frac: np.ndarray

    def __len__(self):
        return int(self.k.shape[0])

    @property
    def entries(self):
        return list(zip(self.k.tolist(), self.y.tolist(), self.gamma.tolist(), self.phase_frac.tolist()))


@dataclass
class ErrorBudget:
    term_delta: float
    term_eps: float
    term_log: float
    term_tower_boundary: float
    term_reduced_boundary: float

    @property
    def total(self) -> float:
        return (self.term_delta + self.term_eps + self.term_log
                + self.term_tower_boundary + self.term_reduced_boundary)

    def as_dict(self):
        return {
            "term_delta": self.term_delta,
            "term_eps": self.term_eps,
            "term_log": self.term_log,
            "term_tower_boundary": self.term_tower_boundary,
            "term_reduced_boundary": self.term_reduced_boundary,
            "total": self.total,
        }


class FirstReduction(NamedTuple):
    approx: complex
    budget: float
    phases: PhaseSet
    flags: frozenset


class SecondReduction(NamedTuple):
    approx: complex
    kstar: Optional[float]
    ell: Optional[int]
    amplitude: float
    phase_frac: float
    budget: float


def _inv_norm(x: float) -> float:
    d = dist_to_int(x)
    return math.inf if d == 0.0 else 1.0 / d


def nu(eps: float, t: float) -> float:
    """Tower-boundary weight 1/||t/eps|| + 1/||(t/eps) e^eps||."""
    K0 = t / eps
    return _inv_norm(K0) + _inv_norm(K0 * math.exp(eps))


def is_exceptional(params: StaircaseParams, t: float, tol: float = EXCEPTIONAL_TOL) -> bool:
    """True when f'(0) = t_eff/eps or f'(q) = (t_eff/eps) e^eps is within ``tol`` of an integer."""
    K0 = params.m * t / params.eps
    return dist_to_int(K0) < tol or dist_to_int(K0 * math.exp(params.eps)) < tol


def stationary_points(params: StaircaseParams, t: float) -> PhaseSet:
    t_eff = params.m * float(t)
    if not t_eff > 0:
        raise DomainError(f"stationary points need m*t > 0, got {t_eff}")
    eps, q = params.eps, params.q
    K0 = t_eff / eps
    K1 = K0 * math.exp(eps)
    k = np.arange(math.floor(K0) + 1, math.ceil(K1), dtype=np.int64)
    k = k[(k > K0) & (k < K1)]
    kf = k.astype(float)
    y = (q / eps) * np.log(kf / K0)
    gamma = np.exp(-0.5 * eps * y / q)
    phase = np.mod(frac_of_product(-kf, y), 1.0)
    # np.mod can return exactly 1.0 for tiny negative inputs.
    phase = np.where(phase >= 1.0, 0.0, phase)
    return PhaseSet(float(t), t_eff, K0, K1, k, y, gamma, phase)


def first_reduction(params: StaircaseParams, t: float) -> FirstReduction:
    """Weighted sum over stationary phases approximating ``eval_direct(params, t)``.

    Returns the approximation, the error magnitude (log and tower-boundary terms)
    and flags: ``empty``, ``exceptional``, ``beyond_cube_root`` (t_eff > q^{1/3}).
    """
    ps = stationary_points(params, t)
    t_eff = ps.t_eff
    if t_eff < 1:
        raise DomainError(f"first reduction needs m*t >= 1, got {t_eff}")
    q = params.q
    flags = set()
    if len(ps) == 0:
        flags.add("empty")
    if is_exceptional(params, t):
        flags.add("exceptional")
    if t_eff > q ** (1.0 / 3.0):
        flags.add("beyond_cube_root")
    budget = (max(1.0 / t_eff, math.log(t_eff)) + min(math.sqrt(q / t_eff), nu(params.eps, t_eff))) / math.sqrt(q)
    if not len(ps):
        return FirstReduction(0j, budget, ps, frozenset(flags))
    ang = 2 * math.pi * ps.phase_frac
    total = complex(np.sum(ps.gamma * np.cos(ang)), np.sum(ps.gamma * np.sin(ang))) / math.sqrt(t_eff)
    # f(y_k) = q k / eps is an integer, so only the +1/8 and omega0 phases remain.
    shift = EIGHTH + (float(frac_of_product(float(t), params.omega0)) if params.omega0 else 0.0)
    return FirstReduction(total * np.exp(2j * math.pi * shift), budget, ps, frozenset(flags))


def omega_reduced(eps: float, k):
    """Reduced frequency k ln k / eps."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 1):
        raise DomainError("omega_reduced needs k >= 1")
    val = k_arr * np.log(k_arr.astype(float)) / eps
    return float(val) if val.ndim == 0 else val


def omega_reduced_prime(eps: float, k):
    return (1.0 + np.log(k)) / eps


def reduced_frequency_offset(eps: float, q: int, t: float) -> float:
    """x_{eps,q}(t) = q (ln t - ln eps) / eps."""
    return q * math.log(t / eps) / eps


def _boundary_frac(eps: float, q: int, t: float):
    """Integer and signed fractional parts of (q+1) ln(t/eps) / eps.

    This is x_{eps,q}(t) + Omega'(K0(t)) modulo the integer 1/eps.
    """
    hi, lo = two_product(float(q + 1), math.log(t / eps) / eps)
    n = int(np.rint(hi))
    r = (hi - n) + lo
    n2 = round(r)
    return n + n2, r - n2


def reduced_boundary_term(eps: float, q: int, t: float) -> float:
    _, r = _boundary_frac(eps, q, t)
    d = abs(r)
    inv = math.inf if d == 0.0 else 1.0 / d
    return min(math.sqrt(t), inv) / math.sqrt(t)


def second_reduction(eps: float, q: int, t: float) -> SecondReduction:
    """Single-stationary-point approximation of S(t) for resonant q (omega0 = 0, m folded into t).

    Solves x + Omega'(k*) = l with k* in (K0, K1); the window in l-space has
    length exactly one so at most one solution exists. The returned term has
    modulus one: the weights gamma(y_k) and the prefactor (t Omega''(k*))^{-1/2}
    cancel exactly at k*.
    """
    eps = snap_eps(eps)
    t = float(t)
    if t < 1:
        raise DomainError(f"second reduction needs t >= 1, got {t}")
    n_int, r = _boundary_frac(eps, q, t)
    boundary = reduced_boundary_term(eps, q, t)
    if r == 0.0:
        return SecondReduction(0j, None, None, 0.0, 0.0, eps + 1.0)
    frac = r if r > 0 else 1.0 + r
    inv_eps = round(1.0 / eps)
    ell = n_int + inv_eps + (1 if r > 0 else 0)
    kstar = (t / eps) * math.exp(eps * (1.0 - frac))
    amplitude = math.sqrt(eps * kstar / t)
    phase = (2 * EIGHTH - float(frac_of_product(kstar, float(inv_eps)))) % 1.0
    approx = complex(np.exp(2j * math.pi * phase))
    return SecondReduction(approx, kstar, ell, amplitude, phase, eps + boundary)


def reduced_sum(eps: float, t: float, x: float) -> complex:
    """Brute-force t^{-1/2} sum_{K0<k<K1} exp(2 pi i (x k + Omega(k)))."""
    K0 = t / eps
    K1 = K0 * math.exp(eps)
    k = np.arange(math.floor(K0) + 1, math.ceil(K1), dtype=float)
    k = k[(k > K0) & (k < K1)]
    if not k.size:
        return 0j
    ph = frac_of_product(k, float(x)) + frac_of_product(k, np.log(k) / eps)
    return complex(np.sum(np.exp(2j * math.pi * ph))) / math.sqrt(t)


def error_budget(params: StaircaseParams, t: float, delta: float = 0.0) -> ErrorBudget:
    t_eff = params.m * float(t)
    if t_eff < 1:
        raise DomainError(f"error budget needs m*t >= 1, got {t_eff}")
    if delta < 0:
        raise DomainError("delta must be >= 0")
    q, eps = params.q, params.eps
    sq = math.sqrt(t_eff)
    return ErrorBudget(
        term_delta=delta * sq,
        term_eps=eps * sq,
        term_log=max(1.0, math.log(t_eff)) / math.sqrt(q),
        term_tower_boundary=min(math.sqrt(q / t_eff), nu(eps, t_eff)) / math.sqrt(q),
        term_reduced_boundary=reduced_boundary_term(eps, q, t_eff),
    )
