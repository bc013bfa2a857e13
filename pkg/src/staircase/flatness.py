"""Flatness norms of sampled staircase sums and their predicted decay."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, ResolutionError
from .numerics import trapezoid_weights
from .stationary_phase import is_exceptional
from .trig_sum import StaircaseParams, SumProfile

MIN_NODES = 16


@dataclass
class FlatnessReport:
    interval: tuple
    n_nodes: int
    excluded_nodes: int
    l1_abs_minus_1: float
    l1_sq_minus_1: float
    l2_abs_minus_1: float
    sup_abs_minus_1: float
    predicted_l1: float
    ratio: float

    def as_dict(self):
        d = asdict(self)
        d["interval"] = list(self.interval)
        return d


def predicted_bound(params: StaircaseParams, interval) -> float:
    """(tau2 - tau1) ln(m tau2) / sqrt(m tau1) with unit constant."""
    tau1, tau2 = map(float, interval)
    if not 0 < tau1 <= tau2:
        raise DomainError(f"need 0 < tau1 <= tau2, got {interval}")
    m = params.m
    if m * tau1 < 1:
        raise DomainError(f"m*tau1 = {m * tau1} < 1")
    return (tau2 - tau1) * math.log(m * tau2) / math.sqrt(m * tau1)


def flatness_report(profile: SumProfile, interval) -> FlatnessReport:
    """L1, L2 and sup deviations of |S| and |S|^2 from 1 over ``interval``.

    Exceptional nodes get zero weight and the surviving weights are rescaled
    so they still integrate constants exactly over the interval.
    """
    a, b = map(float, interval)
    t = np.asarray(profile.t, dtype=float)
    if not a < b:
        raise DomainError(f"interval must be ordered, got {interval}")
    if a < t[0] - 1e-12 or b > t[-1] + 1e-12:
        raise DomainError(f"interval {interval} is outside the grid span [{t[0]}, {t[-1]}]")
    inside = (t >= a) & (t <= b)
    params = profile.params
    exc = np.array([is_exceptional(params, float(x)) for x in t]) & inside
    keep = inside & ~exc
    n_keep = int(keep.sum())
    if n_keep < MIN_NODES:
        raise ResolutionError(f"only {n_keep} usable nodes in {interval}; need {MIN_NODES}")
    w = trapezoid_weights(t[keep])
    w *= (b - a) / w.sum()
    mod = np.abs(np.asarray(profile.values)[keep])
    dev = np.abs(mod - 1.0)
    dev_sq = np.abs(mod * mod - 1.0)
    l1 = float(np.sum(w * dev))
    l1sq = float(np.sum(w * dev_sq))
    l2 = float(math.sqrt(np.sum(w * dev * dev)))
    sup = float(dev.max())
    try:
        pred = predicted_bound(params, (a, b))
    except DomainError:
        pred = math.nan
    if pred > 0:
        ratio = l1sq / pred
    elif pred == 0:
        ratio = 0.0 if l1sq == 0 else math.inf
    else:
        ratio = math.nan
    return FlatnessReport((a, b), int(inside.sum()), int(exc.sum()), l1, l1sq, l2, sup, pred, ratio)


def hypothesis_check(params: StaircaseParams, interval, delta: float):
    """Evaluate the flatness lemma's hypotheses with t_i = m tau_i; never raises."""
    out = []
    try:
        tau1, tau2 = map(float, interval)
        m, eps, q = params.m, params.eps, params.q
        t1, t2 = m * tau1, m * tau2
        q_over_ln = q / math.log(q)
        out.append(("t1 >= 1", t1 >= 1, f"t1 = {t1!r}"))
        out.append(("t2 - t1 >= eps", t2 - t1 >= eps, f"t2 - t1 = {t2 - t1!r}, eps = {eps!r}"))
        out.append(("t2 <= 1/eps", t2 <= 1 / eps, f"t2 = {t2!r}, 1/eps = {1 / eps!r}"))
        out.append(("1/eps <= q/ln q", 1 / eps <= q_over_ln, f"1/eps = {1 / eps!r}, q/ln q = {q_over_ln!r}"))
        out.append(("delta <= eps", float(delta) <= eps, f"delta = {float(delta)!r}, eps = {eps!r}"))
    except Exception as exc:  # reported, not raised
        out.append(("evaluable", False, str(exc)))
    return out
