"""Command-line experiment runner.

Every subcommand reads one JSON config and writes CSV/JSON files into --out.
Floats are written with repr (shortest round-trip), JSON keys are sorted, and
rows follow input order, so reruns produce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .errors import CapacityError, ConfigError, DomainError, ParameterError, PrecisionError, ScheduleError, StaircaseError
from .flatness import flatness_report, hypothesis_check
from .numerics import Grid
from .rank_one import (HatFunction, PiecewiseConstant, build_schedule, check_finite_measure, check_theorem_hypotheses,
                       riesz_partial, weak_convergence_diagnostic)
from .resonance import DEFAULT_MAX_WINDOW, FEASIBLE_GAP, ResonanceQuery, expected_gap, search, theorem_window
from .stationary_phase import error_budget, first_reduction, is_exceptional, second_reduction
from .trig_sum import StaircaseParams, eval_many, eval_profile

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_CAPACITY, EXIT_VERIFY = 0, 1, 2, 3, 4


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


class Output:
    def __init__(self, root: str, fmt: str = "csv"):
        self.root = root
        self.fmt = fmt
        self.files = []

    def _write(self, name: str, text: str):
        path = os.path.join(self.root, name)
        try:
            os.makedirs(self.root, exist_ok=True)
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        self.files.append(path)

    def table(self, stem: str, header, rows):
        if self.fmt == "json":
            recs = [dict(zip(header, r)) for r in rows]
            self.json(f"{stem}.json", recs)
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])
        self._write(f"{stem}.csv", buf.getvalue())

    def json(self, name: str, obj):
        self._write(name, json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def _get(cfg, key, default=None, required=False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(key, "missing required key")
    return default


def _params(cfg) -> StaircaseParams:
    return StaircaseParams(_get(cfg, "q", required=True), _get(cfg, "eps", required=True),
                           _get(cfg, "m", 1.0), _get(cfg, "omega0", 0.0))


def _grid(cfg, seed) -> Grid:
    try:
        return Grid(float(_get(cfg, "t_start", required=True)), float(_get(cfg, "t_end", required=True)),
                    int(_get(cfg, "count", required=True)), seed if _get(cfg, "jitter", False) else None)
    except DomainError as exc:
        raise ConfigError("t_start/t_end/count", str(exc)) from None


def _budget_or_nan(params, t, delta):
    if params.m * t < 1:
        return math.nan
    return error_budget(params, t, delta).total


def _flatness_doc(params, profile, interval, delta):
    rep = flatness_report(profile, interval)
    hyp = hypothesis_check(params, interval, delta)
    return {"params": {"q": params.q, "eps": params.eps, "m": params.m, "omega0": params.omega0},
            "report": rep.as_dict(),
            "hypotheses": [{"name": n, "satisfied": ok, "detail": d} for n, ok, d in hyp]}


def cmd_profile(cfg, out: Output, args):
    params = _params(cfg)
    grid = _grid(cfg, args.seed)
    delta = float(_get(cfg, "delta", 0.0))
    prof = eval_profile(params, grid, args.threads)
    rows = []
    for t, v in zip(prof.t, prof.values):
        a = abs(v)
        rows.append([float(t), v.real, v.imag, a, a * a, _budget_or_nan(params, float(t), delta),
                     is_exceptional(params, float(t))])
    out.table("profile", ["t", "re", "im", "abs", "abs2", "budget_total", "exceptional_flag"], rows)
    interval = _get(cfg, "interval", [grid.start, grid.end])
    out.json("flatness.json", _flatness_doc(params, prof, interval, delta))


def cmd_reduce(cfg, out: Output, args):
    params = _params(cfg)
    grid = _grid(cfg, args.seed)
    ts = grid.nodes()
    direct = eval_many(params, ts, args.threads)
    rows = []
    worst = 0.0
    for t, d in zip(ts, direct):
        t = float(t)
        if params.m * t < 1:
            raise ConfigError("t_start", f"m*t must be >= 1 for the reductions, got {params.m * t!r}")
        fr = first_reduction(params, t)
        sr = second_reduction(params.eps, params.q, params.m * t)
        err = abs(fr.approx - d)
        worst = max(worst, err / fr.budget)
        rows.append([t, d.real, d.imag, fr.approx.real, fr.approx.imag, err, fr.budget, len(fr.phases),
                     sr.approx.real, sr.approx.imag, sr.kstar, sr.ell, sr.budget, ";".join(sorted(fr.flags))])
    out.table("reduce", ["t", "direct_re", "direct_im", "first_re", "first_im", "first_abs_err", "first_budget",
                         "n_phases", "second_re", "second_im", "kstar", "ell", "second_budget", "flags"], rows)
    out.json("reduce_summary.json", {"nodes": len(rows), "max_err_over_budget": worst})


def cmd_flatness(cfg, out: Output, args):
    params = _params(cfg)
    grid = _grid(cfg, args.seed)
    prof = eval_profile(params, grid, args.threads)
    interval = _get(cfg, "interval", [grid.start, grid.end])
    out.json("flatness.json", _flatness_doc(params, prof, interval, float(_get(cfg, "delta", 0.0))))


def cmd_search(cfg, out: Output, args):
    eps = _get(cfg, "eps", required=True)
    if "k_lo" in cfg or "k_hi" in cfg:
        k_lo, k_hi = _get(cfg, "k_lo", required=True), _get(cfg, "k_hi", required=True)
    else:
        k_lo, k_hi = theorem_window(float(_get(cfg, "m", required=True)), float(_get(cfg, "alpha", required=True)), eps)
    query = ResonanceQuery(eps, float(_get(cfg, "delta", required=True)), k_lo, k_hi,
                           _get(cfg, "q_lo", required=True), _get(cfg, "q_hi", required=True))
    max_window = int(_get(cfg, "max_window", DEFAULT_MAX_WINDOW))
    hits = search(query, max_window=max_window, threads=args.threads)
    gap = expected_gap(query.window_size, query.delta)
    out.table("search", ["q", "max_dist", "argmax_k"], [[h.q, h.max_dist, h.argmax_k] for h in hits])
    out.json("search_summary.json", {
        "query": {"eps": query.eps, "delta": query.delta, "k_lo": query.k_lo, "k_hi": query.k_hi,
                  "q_lo": query.q_lo, "q_hi": query.q_hi},
        "expected_gap": gap,
        "feasible": gap <= FEASIBLE_GAP,
        "hits": len(hits),
    })


def cmd_flow(cfg, out: Output, args):
    stages = _get(cfg, "stages", required=True)
    try:
        stages = [(int(q), float(m)) for q, m in stages]
    except (TypeError, ValueError):
        raise ConfigError("stages", "expected a list of [q, m] pairs") from None
    spec = build_schedule(int(_get(cfg, "n0", 0)), stages, _get(cfg, "eps_0", required=True), _get(cfg, "count"))
    alpha = float(_get(cfg, "alpha", 0.01))
    rows = [[s.index, s.q, s.m, s.eps, s.h, float(s.spacers.min()), float(s.spacers.max()), s.measure_increment]
            for s in spec.stages]
    out.table("schedule", ["n", "q_n", "m_n", "eps_n", "h_n", "min_spacer", "max_spacer", "measure_increment"], rows)

    g = _get(cfg, "grid", required=True)
    try:
        grid = Grid(float(g["start"]), float(g["end"]), int(g["count"]), args.seed if g.get("jitter") else None)
    except (KeyError, TypeError, DomainError) as exc:
        raise ConfigError("grid", str(exc)) from None
    n_list = [int(n) for n in _get(cfg, "N", [len(spec)])]
    base_iv = _get(cfg, "base", [[0.0, spec.stages[0].h]])
    base = PiecewiseConstant(base_iv, _get(cfg, "base_values", 1.0))
    est = riesz_partial(spec, base, grid, max(n_list), args.threads)
    pis = [est.base_density]
    for qn in est.factors:
        pis.append(pis[-1] * qn)
    header = ["x", "base"] + [f"Pi_{n}" for n in n_list]
    dens_rows = [[float(x), est.base_density[j]] + [pis[n][j] for n in n_list] for j, x in enumerate(est.t)]
    out.table("density", header, dens_rows)

    log_p, trend, inc = (None, None, [])
    if len(spec) >= 2:
        log_p, trend, inc = check_finite_measure(spec)
    diag = {
        "notes": spec.notes,
        "hypotheses": [{"stage": st, "clause": c, "satisfied": ok, "detail": d}
                       for st, c, ok, d in check_theorem_hypotheses(spec, alpha)],
        "finite_measure": {"log_product": log_p, "converging_trend": trend, "increments": inc},
        "density_metadata": est.metadata,
    }
    psi = _get(cfg, "psi")
    if psi is not None:
        rep = weak_convergence_diagnostic(spec, base, grid, n_list, HatFunction(float(psi[0]), float(psi[1])),
                                          args.threads)
        diag["weak_convergence"] = {"N": rep.N_list, "values": rep.values, "diffs": rep.diffs,
                                    "bounds": rep.bounds, "decreasing": rep.decreasing}
    out.json("diagnostics.json", diag)


def cmd_verify(cfg, out: Output, args):
    from .verify import CRITERIA, run_criteria
    numbers = [int(n) for n in _get(cfg, "criteria", sorted(CRITERIA))]
    bad = [n for n in numbers if n not in CRITERIA]
    if bad:
        raise ConfigError("criteria", f"unknown criteria {bad}")
    results = run_criteria(numbers, seed=args.seed, threads=args.threads)
    for r in results:
        print(f"{r.line()}  ({r.runtime:.2f} s)")
    # Runtimes vary run to run, so they live in a separate file from the report.
    out.json("report.json", {"all_passed": all(r.passed for r in results), "criteria": [r.as_dict() for r in results]})
    out.json("timings.json", {str(r.number): r.runtime for r in results})
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "profile": cmd_profile,
    "reduce": cmd_reduce,
    "flatness": cmd_flatness,
    "search-q": cmd_search,
    "flow": cmd_flow,
    "verify": cmd_verify,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="staircase", description="Exponential staircase sums and rank-one flows.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file (optional for verify)")
    ap.add_argument("--out", help="output directory (default: config output_path or ./out)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
    ap.add_argument("--seed", type=int, default=None, help="grid jitter and sampling seed")
    return ap


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config is None and args.command != "verify":
            raise ConfigError("--config", f"{args.command} needs a config file")
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = int(cfg.get("seed", 0))
        fmt = cfg.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError("format", f"must be csv or json, got {fmt!r}")
        out = Output(args.out or cfg.get("output_path", "out"), fmt)
        code = COMMANDS[args.command](cfg, out, args)
        return EXIT_OK if code is None else code
    except (CapacityError, PrecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, ParameterError, ScheduleError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StaircaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
