"""Experiment configuration, runners and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import svg
from .chen import chen_truncated_signature, cross_check
from .curves import (PRESETS, Curve, make_preset, read_polyline_csv,
                     reparameterize_to_axial_linear, sample_polyline)
from .inversion import (recover_derivative_at, recover_length, recover_profile,
                        reconstruct_trace)
from .kernel import check_fast_decay
from .norms import (al1_sequence, as_sequence, bv_distance, c1_distance, discontinuity_demo,
                    format_log_value, modcont_experiment)
from .rational import make_scheme, meets_rate_condition
from .table import QuadConfig, build_table, kernel_integrals, read_table

KINDS = ("table", "invert", "trace", "length", "rate", "norms", "discont", "modcont",
         "fastdecay", "crosscheck")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class NumericalFailure(RuntimeError):
    """A computation finished but failed its own accuracy contract."""


@dataclass
class ExperimentConfig:
    kind: str
    preset: str | None = None
    params: dict = field(default_factory=dict)
    table: str | None = None
    table_b: str | None = None
    against: str | None = None  # second preset for norm comparisons
    polyline: str | None = None
    axis: int = 1
    N: int | None = None
    nmax: int | None = None
    n: int | None = None
    x: float = 0.5
    j: int | None = None
    scheme: str = "naive"
    eps0: float = 0.1
    alpha: float | None = None
    slack: float = 0.15
    out: str | None = None
    plot: str | None = None
    seed: int = 0
    m: list = field(default_factory=lambda: [1, 2, 4, 8, 16])
    eps: list = field(default_factory=lambda: [0.5, 0.2, 0.1, 0.05])
    lambdas: list = field(default_factory=lambda: [0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5])
    freq: int = 1
    K: float = 10.0
    c1bar: float = 1.0
    c2bar: float = 1.0
    vertices: int = 10_000
    tol: float = 1e-6
    norm: str = "as"
    raw: bool = False
    grid: int = 10_001
    n_values: list = field(default_factory=lambda: [1000, 10_000])

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown command {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not 0.0 < self.eps0 < 0.5:
            raise ConfigError(f"eps0 must lie in (0, 1/2), got {self.eps0}")
        for name in (self.preset, self.against):
            if name is not None and name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
        if self.norm not in ("as", "al1"):
            raise ConfigError(f"norm must be 'as' or 'al1', got {self.norm!r}")

    @classmethod
    def from_sources(cls, kind: str, file_cfg: dict | None, flags: dict) -> "ExperimentConfig":
        """Merge a JSON config with command-line flags; flags win."""
        known = {f.name for f in fields(cls)}
        merged: dict = {}
        for src in (file_cfg or {}, {k: v for k, v in flags.items() if v is not None}):
            for k, v in src.items():
                if k not in known:
                    raise ConfigError(f"unknown config key {k!r}")
                if k == "params":
                    merged.setdefault("params", {}).update(v)
                else:
                    merged[k] = v
        merged["kind"] = kind
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> list[str]:
        """Config lines for CSV headers; output destinations are left out."""
        d = asdict(self)
        return [f"{k}={json.dumps(d[k], sort_keys=True)}" for k in sorted(d) if k not in ("out", "plot")]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    header: list
    rows: list
    summary: dict = field(default_factory=dict)
    wall_time: float = 0.0  # kept out of the CSV so reruns are byte-identical
    plots: dict = field(default_factory=dict)  # kind -> (series, title, xlabel, ylabel, logx, logy)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.config.echo():
            buf.write(f"# {line}\n")
        for k in sorted(self.summary):
            buf.write(f"# summary {k}={_fmt_value(self.summary[k])}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_fmt_value(v) for v in r])
        return buf.getvalue()

    def summary_text(self) -> str:
        return "\n".join(f"{k}: {_fmt_value(self.summary[k])}" for k in sorted(self.summary))


def _fmt_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def emit_svg_plot(report: ExperimentReport, kind: str, path) -> None:
    if not report.rows:
        raise svg.PlotError("empty report")
    if kind not in report.plots:
        raise svg.PlotError(f"report offers no {kind!r} plot; available: {sorted(report.plots)}")
    series, title, xl, yl, lx, ly = report.plots[kind]
    with open(path, "w") as fh:
        fh.write(svg.render_svg(series, title, xl, yl, lx, ly))


# ------------------------------------------------------------- helpers


def resolve_curve(cfg: ExperimentConfig) -> Curve:
    if cfg.polyline:
        try:
            return reparameterize_to_axial_linear(read_polyline_csv(cfg.polyline), cfg.axis)
        except OSError as exc:
            raise ConfigError(f"cannot read polyline {cfg.polyline}: {exc}") from exc
    if cfg.preset is None:
        raise ConfigError("a curve is required: give --preset or --polyline")
    return make_preset(cfg.preset, cfg.params)


def load_table(path):
    try:
        return read_table(path)
    except OSError as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc


def _default_j(d: int, i: int) -> int:
    return 1 if i != 1 else 2


def fit_loglog_tail(qs, errs):
    """Least-squares slope and intercept of log err against log q on the upper half of the q-range.

    Returns (slope, intercept, degenerate); degenerate when fewer than two
    usable points remain or every error is at rounding level.
    """
    qs = np.asarray(qs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    tail = qs >= 0.5 * qs.max()
    use = tail & (errs > 1e-13)
    if np.count_nonzero(use) < 2 or np.all(errs[tail] <= 1e-13):
        return math.nan, math.nan, True
    slope, icpt = np.polyfit(np.log(qs[use]), np.log(errs[use]), 1)
    return float(slope), float(icpt), False


# ------------------------------------------------------------- runners


def run_table(cfg: ExperimentConfig) -> tuple[ExperimentReport, object]:
    curve = resolve_curve(cfg)
    N = cfg.N or 64
    table = build_table(curve, N)
    rows = [[j, n, float(np.abs(table.level(j, n)).max())] for j in table.components for n in range(N + 1)]
    rep = ExperimentReport(cfg, ["j", "n", "max_abs_cell"], rows,
                           {"N": N, "quad_error": table.quad_error, "cells": len(table.components) * (N + 1) * (N + 2) // 2})
    return rep, table


def run_invert(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.table:
        table = load_table(cfg.table)
    else:
        table = build_table(resolve_curve(cfg), cfg.N or cfg.nmax or 64)
    j = cfg.j or _default_j(table.d, table.axial_index)
    seq = recover_derivative_at(table, j, cfg.x, cfg.scheme, cfg.nmax)
    oracle = None
    if cfg.preset:
        oracle = float(make_preset(cfg.preset, cfg.params).component(j, cfg.x)[0])
    header = ["n", "p", "q", "estimate"] + (["err_vs_oracle"] if oracle is not None else [])
    rows = [[n, p, q, e] + ([abs(e - oracle)] if oracle is not None else []) for n, p, q, e in seq.rows]
    summary = {"final": seq.final, "stagnation": seq.stagnation, "truncated": seq.truncated}
    if oracle is not None:
        summary["oracle"] = oracle
    return ExperimentReport(cfg, header, rows, summary)


def run_trace(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.table:
        table = load_table(cfg.table)
    else:
        table = build_table(resolve_curve(cfg), cfg.N or cfg.n or 64)
    n = cfg.n or table.N
    prof = recover_profile(table, n)
    poly = reconstruct_trace(prof)
    header = ["s"] + [f"x{m}" for m in range(1, table.d + 1)] + [f"dx{j}" for j in prof.components]
    rows = [[float(s)] + [float(v) for v in poly.vertices[r]] + [float(v) for v in prof.values[:, r]]
            for r, s in enumerate(prof.s)]
    rep = ExperimentReport(cfg, header, rows, {"n": n})
    series = [svg.Series(f"recovered x{j}'", prof.s, prof.component(j)) for j in prof.components]
    if cfg.preset and not cfg.table:
        truth = make_preset(cfg.preset, cfg.params)
        dense = np.linspace(0.0, 1.0, 401)
        for j in prof.components:
            series.append(svg.Series(f"true x{j}'", dense, truth.component(j, dense), dashed=True))
        err = max(float(np.abs(prof.component(j) - truth.component(j, prof.s)).max()) for j in prof.components)
        rep.summary["sup_error"] = err
    rep.plots["profile"] = (series, f"derivative profile at n = {n}", "s", "derivative", False, False)
    return rep


def run_length(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.table:
        table = load_table(cfg.table)
    else:
        table = build_table(resolve_curve(cfg), cfg.N or cfg.n or 64)
    n_top = cfg.n or table.N
    rows = [[n, recover_length(table, n)] for n in range(1, n_top + 1)]
    return ExperimentReport(cfg, ["n", "length"], rows, {"final": rows[-1][1]})


def run_rate_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Recovery error of y'(x) against q, with a tail log-log slope fit."""
    curve = resolve_curve(cfg)
    n_max = cfg.nmax or 400
    j = cfg.j or _default_j(curve.d, curve.axial_index)
    alpha = cfg.alpha if cfg.alpha is not None else (curve.holder[0] if curve.holder else None)
    if alpha is None:
        raise ConfigError("rate experiment needs a Holder exponent (--alpha or preset metadata)")
    scheme = make_scheme(cfg.scheme, cfg.x, n_max)
    if not meets_rate_condition(scheme.pairs, cfg.x):
        raise ConfigError(f"scheme {scheme.kind} violates |p/q - x| < q^(-1/2) with increasing q")
    ks = np.array([p for p, q in scheme.pairs], dtype=float)
    ls = np.array([q - p for p, q in scheme.pairs], dtype=float)
    vals, _, _ = kernel_integrals(ks, ls, lambda s: curve.derivative(s)[[j - 1]], QuadConfig(), curve.breakpoints)
    truth = float(curve.component(j, cfg.x)[0])
    errs = np.abs(vals[:, 0] - truth)
    qs = np.array([q for _, q in scheme.pairs], dtype=float)
    slope, icpt, degenerate = fit_loglog_tail(qs, errs)
    threshold = -(0.5 - cfg.eps0) * alpha + cfg.slack
    rows = [[n, p, q, float(v), float(e)] for n, ((p, q), v, e) in
            enumerate(zip(scheme.pairs, vals[:, 0], errs), start=1)]
    summary = {"slope": slope, "threshold": threshold, "degenerate": degenerate,
               "passes": (not degenerate) and slope <= threshold, "truth": truth, "alpha": alpha}
    rep = ExperimentReport(cfg, ["n", "p", "q", "estimate", "error"], rows, summary)
    keep = errs > 0
    series = [svg.Series("error", qs[keep], errs[keep], markers=True)]
    if not degenerate:
        series.append(svg.Series(f"fit slope {slope:.3f}", qs[keep], svg.fitted_line(qs[keep], slope, icpt)))
        series.append(svg.Series(f"proven slope {-(0.5 - cfg.eps0) * alpha:.3f}", qs[keep],
                                 svg.reference_slope_line(qs[keep], errs[keep], -(0.5 - cfg.eps0) * alpha),
                                 dashed=True))
    rep.plots["loglog"] = (series, "recovery error against q", "q", "error", True, True)
    return rep


def run_norms(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.table:
        ta = load_table(cfg.table)
        tb = load_table(cfg.table_b) if cfg.table_b else None
        ref = None
    else:
        a = resolve_curve(cfg)
        N = cfg.N or 128
        ta = build_table(a, N)
        tb = None
        ref = None
        if cfg.against:
            b = make_preset(cfg.against, {"d": a.d} if cfg.against == "zero" else {})
            tb = build_table(b, N)
            ref = c1_distance(a, b) if cfg.norm == "as" else bv_distance(a, b)
    fn = as_sequence if cfg.norm == "as" else al1_sequence
    seq = fn(ta, tb, cfg.N if cfg.table and cfg.N else None, reference=ref)
    rows = [[n, v, seq.reference if seq.reference is not None else "", seq.rel_err(v) if ref is not None else ""]
            for n, v in seq.rows]
    return ExperimentReport(cfg, ["n", "value", "reference", "rel_err"], rows,
                            {"final": seq.final, "trend": seq.trend})


def run_discont(cfg: ExperimentConfig) -> ExperimentReport:
    N = cfg.N or 10
    rep = discontinuity_demo(cfg.m, N)
    rows = [[m, up, dbv] for m, _, up, dbv, _ in rep.rows]
    ups = [r[1] for r in rows]
    summary = {"strictly_decreasing": all(b < a for a, b in zip(ups, ups[1:])),
               "max_dbv_dev": max(abs(r[2] - 1.0) for r in rows)}
    out = ExperimentReport(cfg, ["m", "proj_upper", "d_bv"], rows, summary)
    out.plots["loglog"] = ([svg.Series("proj upper bound", [r[0] for r in rows], ups, markers=True),
                            svg.Series("d_BV", [r[0] for r in rows], [r[2] for r in rows], dashed=True)],
                           "signature distance vs BV distance", "m", "value", True, True)
    return out


def run_modcont(cfg: ExperimentConfig) -> ExperimentReport:
    curve = resolve_curve(cfg) if (cfg.preset or cfg.polyline) else make_preset("linear", {"slope": 0.0})
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    rep = modcont_experiment(curve, cfg.eps, cfg.lambdas, cfg.freq, cfg.eps0, alpha, cfg.K,
                             cfg.c1bar, cfg.c2bar, sig_level=cfg.N or 6, vertices=min(cfg.vertices, 4000))
    rows = [[r["epsilon"], format_log_value(r["log_delta_theorem"]), r["delta_empirical"], r["dc1"]]
            for r in rep.rows]
    out = ExperimentReport(cfg, ["epsilon", "delta_theorem", "delta_empirical", "dc1"], rows,
                           {"implication_holds": rep.implication_holds, "skipped": len(rep.skipped)})
    eps = np.array([r["epsilon"] for r in rep.rows])
    front = [r["delta_empirical"] for r in rep.rows]
    # an all-zero frontier (every perturbation skipped) cannot go on a log axis
    logy = any(v > 0 for v in front)
    out.plots["frontier"] = ([svg.Series("empirical frontier", eps, front, markers=True)],
                             "largest proj bound with d_C1 < eps", "epsilon", "delta", True, logy)
    return out


def run_fastdecay(cfg: ExperimentConfig) -> ExperimentReport:
    rep = check_fast_decay(cfg.n_values, cfg.eps0, cfg.grid)
    rows = [[r.n, cfg.eps0, f"{r.worst_ratio:.6e}", r.violations] for r in rep.rows]
    return ExperimentReport(cfg, ["n", "epsilon0", "worst_ratio", "violations"], rows,
                            {"total_violations": rep.total_violations,
                             "empirical_n0": rep.empirical_n0})


def run_crosscheck(cfg: ExperimentConfig) -> ExperimentReport:
    curve = resolve_curve(cfg)
    level = cfg.N or 8
    table = build_table(curve, level)
    sig = chen_truncated_signature(sample_polyline(curve, cfg.vertices), level + 1)
    rep = cross_check(table, sig, level)
    j, k, l = rep.worst
    out = ExperimentReport(cfg, ["max_level", "max_rel_err", "worst_j", "worst_k", "worst_l", "cells"],
                           [[rep.max_level, rep.max_rel_err, j, k, l, rep.cells]],
                           {"within_tol": rep.max_rel_err <= cfg.tol})
    if rep.max_rel_err > cfg.tol:
        raise NumericalFailure(f"cross-check deviation {rep.max_rel_err:.3e} at (j={j}, k={k}, l={l}) "
                               f"exceeds {cfg.tol:g}", out)
    return out


RUNNERS = {
    "invert": run_invert,
    "trace": run_trace,
    "length": run_length,
    "rate": run_rate_experiment,
    "norms": run_norms,
    "discont": run_discont,
    "modcont": run_modcont,
    "fastdecay": run_fastdecay,
    "crosscheck": run_crosscheck,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    if cfg.kind == "table":
        rep, _ = run_table(cfg)
    else:
        rep = RUNNERS[cfg.kind](cfg)
    rep.wall_time = time.perf_counter() - t0
    return rep
