"""Acceptance criteria as callable checks.

Each check returns a CriterionResult with measured values; the CLI ``verify``
subcommand and the acceptance test module both run these.
"""

from __future__ import annotations

import functools
import inspect
import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .flatness import flatness_report, predicted_bound
from .numerics import Grid, fresnel_reference, oscillatory_quadrature
from .rank_one import (HatFunction, PiecewiseConstant, build_schedule, check_finite_measure,
                       check_theorem_hypotheses, lift, stage_sum, weak_convergence_diagnostic)
from .resonance import OmegaTable, ResonanceQuery, search, theorem_window
from .stationary_phase import first_reduction, omega_reduced_prime, stationary_points
from .trig_sum import FrequencySum, StaircaseParams, eval_direct, eval_profile, _base_frequencies

# Calibration constant for first_reduction budgets, frozen after one calibration run.
FROZEN_C = 1.0
C_CAP = 5.0
DESK_ALPHA = 0.01


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    runtime: float = field(default=0.0, compare=False)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}"

    def as_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed, "measured": self.measured}


def _timed(fn):
    @functools.wraps(fn)
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        return res
    return run


@_timed
def criterion_1(seed: int = 0, threads: int = 1):
    """First-reduction oracle agreement on jittered grids in [2, q^(1/3)]."""
    t0 = time.perf_counter()
    measured = {"frozen_C": FROZEN_C}
    worst = 0.0
    for q in (4096, 65536):
        p = StaircaseParams(q, 0.25)
        ts = Grid(2.0, q ** (1 / 3), 2000, jitter_seed=seed).nodes()
        direct = FrequencySum(_base_frequencies(p)).many(ts, threads)
        ratios = np.empty(ts.size)
        for i, t in enumerate(ts):
            fr = first_reduction(p, t)
            ratios[i] = abs(fr.approx - direct[i]) / fr.budget
        measured[f"q{q}_calibrated_C"] = float(ratios.max())
        worst = max(worst, float(ratios.max()))
    runtime = time.perf_counter() - t0
    measured["calibrated_C"] = worst
    measured["runtime_ok"] = runtime <= 60
    ok = worst <= FROZEN_C <= C_CAP and runtime <= 60
    return CriterionResult(1, "first reduction agrees with direct sum within C*budget", ok, measured)


@_timed
def criterion_2(seed: int = 0, draws: int = 120):
    """Exact identities over randomized parameter draws."""
    rng = np.random.default_rng(seed)
    fy = omega_win = mod_inv = resc = 0.0
    for _ in range(draws):
        q = int(rng.integers(16, 2000))
        inv = int(rng.integers(2, 9))
        eps = 1.0 / inv
        m = float(rng.uniform(0.5, 4.0))
        tau = float(rng.uniform(1.0, 3.0)) / m
        p = StaircaseParams(q, eps, m)
        ps = stationary_points(p, tau)
        if len(ps):
            lhs = tau * (m / eps) * np.exp(eps * ps.y / q)
            fy = max(fy, float(np.max(np.abs(lhs - ps.k) / ps.k)))
        omega_win = max(omega_win, abs(float(omega_reduced_prime(eps, ps.K1) - omega_reduced_prime(eps, ps.K0)) - 1.0))
        w0 = float(rng.uniform(-1e3, 1e3))
        s0 = eval_direct(p, tau)
        s1 = eval_direct(StaircaseParams(q, eps, m, w0), tau)
        mod_inv = max(mod_inv, abs(abs(s0) - abs(s1)))
        # Independent route: scale the frequencies instead of the time.
        scaled = FrequencySum(m * _base_frequencies(p))(tau)
        resc = max(resc, abs(scaled - eval_direct(StaircaseParams(q, eps, 1.0), m * tau)))
    measured = {"draws": draws, "stationary_identity_rel": fy, "window_identity_abs": omega_win,
                "omega0_modulus_abs": mod_inv, "m_rescaling_abs": resc}
    ok = fy <= 1e-9 and omega_win <= 1e-12 and mod_inv <= 1e-9 and resc <= 1e-9
    return CriterionResult(2, "exact identities", ok, measured)


def oi2_leading(a: float, c: float, b: float, t: float) -> complex:
    a0 = np.exp(0.25j * math.pi * np.sign(c)) * math.sqrt(math.pi)
    return complex(a0 * np.exp(1j * a * t) / (2 * math.sqrt(abs(c) * t))
                   - 1j / (2 * b * c * t) * np.exp(1j * (a + c * b * b) * t))


@_timed
def criterion_3():
    """Fresnel remainder constant and the two-term quadratic-phase asymptotic."""
    diffs = {}
    for k in (1e2, 1e3, 1e4):
        val = oscillatory_quadrature(lambda x: x * x, k, (-1.0, 1.0), tol=1e-12)
        diffs[k] = abs(val - fresnel_reference(k))
    C = diffs[1e2] * 1e2
    ratios = {k: diffs[k] * k / C for k in (1e3, 1e4)}
    oi1_ok = all(0.5 <= r <= 2.0 for r in ratios.values())
    a, c, b = 1.0, 2.0, 3.0
    resid = []
    for t in (1e2, 1e3, 1e4):
        val = oscillatory_quadrature(lambda x: a + c * x * x, t, (0.0, b), tol=1e-13)
        resid.append(abs(val - oi2_leading(a, c, b, t)))
    oi2_ok = resid[0] > resid[1] > resid[2]
    measured = {"fresnel_C": C, "fresnel_ratio_k1e3": ratios[1e3], "fresnel_ratio_k1e4": ratios[1e4],
                "oi2_residuals": resid}
    return CriterionResult(3, "oscillatory integral asymptotics", oi1_ok and oi2_ok, measured)


def resonance_oracle(eps: float, k: int, q_lo: int, q_hi: int, delta: float, dps: int = 50):
    """All q with ||(q+1) k ln k / eps|| <= delta, evaluated in mpmath."""
    with mpmath.workdps(dps):
        om = mpmath.mpf(round(1 / eps)) * k * mpmath.log(k)
        out = []
        for q in range(q_lo, q_hi + 1):
            v = (q + 1) * om
            if abs(v - mpmath.nint(v)) <= delta:
                out.append(q)
    return out


@_timed
def criterion_4(threads: int = 1):
    t0 = time.perf_counter()
    hits = search(ResonanceQuery(0.5, 0.05, 2, 2, 2, 100000), threads=threads)
    runtime = time.perf_counter() - t0
    got = [h.q for h in hits]
    oracle = resonance_oracle(0.5, 2, 2, 100000, 0.05)
    ok = got == oracle and 12 in got and runtime <= 10
    measured = {"hits": len(got), "oracle_hits": len(oracle), "contains_12": 12 in got,
                "scan_seconds_ok": runtime <= 10}
    return CriterionResult(4, "resonance search matches arbitrary-precision oracle", ok, measured)


def best_resonant_q(eps: float, k_lo: int, k_hi: int, q_lo: int, q_hi: int, chunk: int = 512):
    """The q in range minimizing max_k ||(q+1) Omega(k)||, with that distance."""
    table = OmegaTable(eps, k_lo, k_hi)
    best_q, best_d = q_lo, math.inf
    for lo in range(q_lo, q_hi + 1, chunk):
        qs = np.arange(lo, min(lo + chunk - 1, q_hi) + 1)
        mx = table.distances(qs).max(axis=1)
        j = int(np.argmin(mx))
        if mx[j] < best_d:
            best_q, best_d = int(qs[j]), float(mx[j])
    return best_q, best_d


@_timed
def criterion_5(seed: int = 0, threads: int = 1, q_lo: int = 4096, q_span: int = 1 << 13, nodes: int = 1500):
    """Flatness trend over m in {16, 64, 256} on [1, 2] with eps = 1/4.

    Resonance has to hold for every k that occurs for tau in [1, 2], i.e.
    k in [m/eps, 2 m e^eps / eps]. The strict search is run first; if it finds
    nothing the most resonant q in the scanned range is used instead.
    """
    t0 = time.perf_counter()
    eps = 0.25
    interval = (1.0, 2.0)
    rows = []
    for m in (16, 64, 256):
        k_lo = math.ceil(interval[0] * m / eps)
        k_hi = math.floor(interval[1] * m * math.exp(eps) / eps)
        q_hi = q_lo + q_span - 1
        hits = search(ResonanceQuery(eps, eps, k_lo, k_hi, q_lo, q_hi), max_window=k_hi - k_lo + 1, threads=threads)
        if hits:
            q, dist, strict = hits[0].q, hits[0].max_dist, True
        else:
            (q, dist), strict = best_resonant_q(eps, k_lo, k_hi, q_lo, q_hi), False
        p = StaircaseParams(q, eps, float(m))
        prof = eval_profile(p, Grid(interval[0], interval[1], nodes, jitter_seed=seed), threads)
        rep = flatness_report(prof, interval)
        rows.append({"m": m, "q": q, "window": [k_lo, k_hi], "strictly_resonant": strict, "max_dist": dist,
                     "l1_sq_minus_1": rep.l1_sq_minus_1, "predicted_l1": predicted_bound(p, interval),
                     "ratio": rep.ratio})
    runtime = time.perf_counter() - t0
    l1 = [r["l1_sq_minus_1"] for r in rows]
    decreasing = l1[0] > l1[1] > l1[2]
    within3 = all(1 / 3 <= r["ratio"] <= 3 for r in rows)
    ok = decreasing and within3 and runtime <= 300
    measured = {"rows": rows, "strictly_decreasing": decreasing, "within_factor_3": within3,
                "runtime_ok": runtime <= 300}
    return CriterionResult(5, "L1 flatness decreases in m and tracks the predicted bound", ok, measured)


def desk_schedules(seed: int = 0, count: int = 3):
    """Random small schedules (3 stages each) for factorization checks."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        eps0 = 1.0 / int(rng.integers(2, 5))
        stages = [(int(rng.integers(2, 9)), float(rng.uniform(0.3, 1.5)))]
        for _ in range(2):
            stages.append((int(rng.integers(2, 9)), float(rng.uniform(0.5, 2.0))))
        try:
            out.append(build_schedule(0, stages, eps0))
        except Exception:
            stages = [(s[0], s[1] * 0.25) for s in stages]
            out.append(build_schedule(0, stages, eps0))
    return out


@_timed
def criterion_6(seed: int = 0):
    worst = 0.0
    tt = Grid(-4.0, 4.0, 512).nodes()
    for spec in desk_schedules(seed):
        first = spec.stages[0]
        f = PiecewiseConstant.indicator(0.1 * first.h, 0.6 * first.h)
        for n in range(len(spec)):
            s = spec.stages[n]
            lifted = lift(spec, s.index, f)
            rhs = f.transform(tt) * math.sqrt(s.q) * stage_sum(s, tt)
            worst = max(worst, float(np.max(np.abs(lifted.transform(tt) - rhs))))
            f = lifted
    return CriterionResult(6, "Riesz factorization of lifted transforms", worst <= 1e-9, {"max_abs_error": worst})


@_timed
def criterion_7(seed: int = 0):
    specs = desk_schedules(seed) + [
        build_schedule(0, [(8, 1.0)] + [(4, 1.0)] * 3, 0.5),
        build_schedule(1, [(16, 2.0), (64, 3.0), (256, 4.0)], 0.25),
    ]
    ratio_err = spacer_bad = inc_err = 0.0
    for spec in specs:
        for s in spec.stages:
            ratio = s.next_height / (s.q * s.h)
            ratio_err = max(ratio_err, abs(ratio - math.expm1(s.eps) / s.eps) / ratio)
            if s.eps <= 0.5:
                hi = s.m * (1 + 2 * s.eps)
                spacer_bad = max(spacer_bad, float(-s.spacers.min()), float(s.spacers.max() - hi))
        _, _, inc = check_finite_measure(spec)
        closed = np.array([math.log(math.expm1(s.eps) / s.eps) for s in spec.stages])
        inc_err = max(inc_err, float(np.max(np.abs(inc - closed))))
    ok = ratio_err <= 1e-9 and spacer_bad <= 0 and inc_err <= 1e-9
    return CriterionResult(7, "schedule arithmetic", ok,
                           {"height_ratio_rel": ratio_err, "spacer_violation": spacer_bad, "increment_abs": inc_err})


def desk_flow(alpha: float = DESK_ALPHA):
    """Three-stage schedule whose last stage uses the first resonant q above h^(1+alpha)."""
    plan = [(2, 0.5), (3, 1.3), (2, 2.5)]
    spec = build_schedule(0, plan, 0.5)
    last = spec.stages[-1]
    k_lo, k_hi = theorem_window(last.m, alpha, last.eps)
    q0 = math.ceil(last.h ** (1 + alpha))
    hits = search(ResonanceQuery(last.eps, last.eps, k_lo, k_hi, q0, q0 + 100000))
    plan[-1] = (hits[0].q, plan[-1][1])
    return build_schedule(0, plan, 0.5)


@_timed
def criterion_8(threads: int = 1):
    spec = desk_flow()
    verdicts = check_theorem_hypotheses(spec, DESK_ALPHA)
    hyp_ok = all(v[2] for v in verdicts)
    base = PiecewiseConstant.indicator(0.0, 0.5 * spec.stages[0].h)
    rep = weak_convergence_diagnostic(spec, base, Grid(0.9, 2.1, 20001), [0, 1, 2, 3], HatFunction(1.0, 2.0), threads)
    ok = hyp_ok and rep.decreasing
    measured = {"q": [s.q for s in spec.stages], "hypotheses_pass": hyp_ok, "values": rep.values,
                "diffs": rep.diffs, "bounds": rep.bounds, "decreasing": rep.decreasing}
    return CriterionResult(8, "weak-convergence differences decrease", ok, measured)


def _cli_configs():
    return {
        "profile": {"q": 257, "eps": 0.25, "m": 1.0, "t_start": 1.0, "t_end": 4.0, "count": 64,
                    "jitter": True, "interval": [1.0, 4.0]},
        "reduce": {"q": 4096, "eps": 0.25, "t_start": 2.0, "t_end": 12.0, "count": 32, "jitter": True},
        "flatness": {"q": 257, "eps": 0.25, "m": 2.0, "t_start": 1.0, "t_end": 2.0, "count": 64,
                     "jitter": True, "interval": [1.0, 2.0], "delta": 0.1},
        "search-q": {"eps": 0.5, "delta": 0.05, "k_lo": 2, "k_hi": 2, "q_lo": 2, "q_hi": 300000},
        "flow": {"eps_0": 0.5, "stages": [[2, 0.5], [3, 1.3], [17, 2.5]], "alpha": 0.01,
                 "grid": {"start": 0.9, "end": 2.1, "count": 801}, "N": [0, 1, 2, 3],
                 "base": [[0.0, 0.5]], "psi": [1.0, 2.0]},
    }


def _tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = fh.read()
    return out


@_timed
def criterion_9(seed: int = 0):
    """Every data-producing subcommand is byte-identical across reruns and thread counts."""
    results = {}
    with tempfile.TemporaryDirectory() as tmp:
        for cmd, cfg in _cli_configs().items():
            cfg_path = os.path.join(tmp, f"{cmd}.json")
            with open(cfg_path, "w") as fh:
                json.dump(cfg, fh)
            trees = []
            for run, threads in enumerate((1, 1, 4)):
                out = os.path.join(tmp, f"{cmd}-{run}")
                proc = subprocess.run([sys.executable, "-m", "staircase", cmd, "--config", cfg_path, "--out", out,
                                       "--threads", str(threads), "--seed", str(seed)],
                                      capture_output=True, text=True)
                if proc.returncode != 0:
                    trees.append(("error", proc.returncode, proc.stderr[-400:]))
                else:
                    trees.append(_tree_bytes(out))
            results[cmd] = bool(trees[0] and isinstance(trees[0], dict) and trees[0] == trees[1] == trees[2])
        cfg_path = os.path.join(tmp, "verify.json")
        with open(cfg_path, "w") as fh:
            json.dump({"criteria": [2, 7]}, fh)
        trees = []
        for run, threads in enumerate((1, 4)):
            out = os.path.join(tmp, f"verify-{run}")
            subprocess.run([sys.executable, "-m", "staircase", "verify", "--config", cfg_path, "--out", out,
                            "--threads", str(threads), "--seed", str(seed)], capture_output=True, text=True)
            tree = _tree_bytes(out)
            tree.pop("timings.json", None)
            trees.append(tree)
        results["verify"] = bool(trees[0]) and trees[0] == trees[1]
    return CriterionResult(9, "CLI output is byte-deterministic", all(results.values()), results)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_criteria(numbers=None, seed: int = 0, threads: int = 1):
    numbers = sorted(numbers or CRITERIA)
    out = []
    for n in numbers:
        fn = CRITERIA[n]
        kwargs = {}
        params = inspect.signature(fn).parameters
        if "seed" in params:
            kwargs["seed"] = seed
        if "threads" in params:
            kwargs["threads"] = threads
        out.append(fn(**kwargs))
    return out
