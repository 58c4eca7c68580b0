"""Scaled axial signature coefficients computed by quadrature.

For an axial-linear curve with ``x_i(s) = C0 s`` the coefficient of
``e_i^{k} e_j e_i^{l}`` is ``C0^{k+l} int m_{k,l}(s) x_j'(s) ds``.  The
table stores the scaled value

    S_hat^{(j;i)}_{k,l} = (k+l+1)! S^{(j;i)}_{k,l} / C0^{k+l}
                        = int_0^1 rho_{k,l}(s) x_j'(s) ds,

which is bounded by ``||x_j'||_inf`` and never overflows.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .curves import Curve
from .kernel import KernelIndex, log_rho_array

log = logging.getLogger(__name__)


class TableError(ValueError):
    pass


class QuadratureError(RuntimeError):
    """Two panel refinements disagreed beyond tolerance."""

    def __init__(self, msg, coarse=None, fine=None, where=None):
        super().__init__(msg)
        self.coarse = coarse
        self.fine = fine
        self.where = where


@dataclass(frozen=True)
class QuadConfig:
    points: int = 20  # Gauss-Legendre nodes per panel
    panels: int = 8  # uniform panels across the effective support
    rtol: float = 1e-10
    log_cutoff: float = 45.0  # support = {log rho >= log rho(mode) - log_cutoff}
    grading_levels: int = 12  # geometric panels toward each kink
    grading_ratio: float = 0.25
    max_graded: int = 4  # curves with more breakpoints get plain splitting
    check: bool = True  # recompute with 2*panels and compare

    def __post_init__(self):
        if self.points < 2 or self.panels < 1:
            raise TableError("QuadConfig needs points >= 2 and panels >= 1")
        if not self.rtol > 0:
            raise TableError("QuadConfig tolerance must be positive")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SIG_THREADS", "1")))
    except ValueError:
        return 1


# ------------------------------------------------------------ quadrature


def _support(k: np.ndarray, l: np.ndarray, cutoff: float, iters: int = 60):
    """Interval where log rho_{k,l} is within ``cutoff`` of its maximum."""
    n = k + l
    mode = np.where(n > 0, k / np.maximum(n, 1), 0.5)
    thr = log_rho_array(k, l, mode) - cutoff

    def side(a0, b0):
        # a0: candidate end of the support, b0: the mode (inside)
        a, b = a0.copy(), b0.copy()
        inside = log_rho_array(k, l, a) >= thr
        for _ in range(iters):
            m = 0.5 * (a + b)
            ok = log_rho_array(k, l, m) >= thr
            b = np.where(ok, m, b)
            a = np.where(ok, a, m)
        return np.where(inside, a0, b)

    lo = side(np.zeros_like(mode), mode)
    hi = side(np.ones_like(mode), mode)
    return lo, hi, mode


def _breaks(lo, hi, mode, panels, curve_bps, cfg: QuadConfig):
    u = np.linspace(0.0, 1.0, panels + 1)
    pts = [lo[:, None] + (hi - lo)[:, None] * u[None, :], mode[:, None]]
    if curve_bps:
        bps = np.asarray(curve_bps, dtype=float)
        pts.append(np.broadcast_to(bps, (lo.size, bps.size)))
        if len(curve_bps) <= cfg.max_graded:
            h = (hi - lo) / cfg.panels
            r = cfg.grading_ratio ** np.arange(cfg.grading_levels)
            off = h[:, None] * r[None, :]
            for b in curve_bps:
                pts.append(b - off)
                pts.append(b + off)
    allp = np.concatenate(pts, axis=1)
    allp = np.clip(allp, lo[:, None], hi[:, None])
    return np.sort(allp, axis=1)


def _integrate(k, l, func, panels, curve_bps, cfg, gl, support):
    lo, hi, mode = support
    br = _breaks(lo, hi, mode, panels, curve_bps, cfg)
    a, b = br[:, :-1], br[:, 1:]
    half = 0.5 * (b - a)
    x, w = gl
    nodes = (0.5 * (a + b))[:, :, None] + half[:, :, None] * x[None, None, :]
    weights = half[:, :, None] * w[None, None, :]
    lr = log_rho_array(k[:, None, None], l[:, None, None], nodes)
    kern = np.exp(lr) * weights  # zero-width panels carry zero weight
    fvals = func(nodes.ravel())
    fvals = np.asarray(fvals, dtype=float).reshape(-1, *nodes.shape)
    vals = np.einsum("cmpq,mpq->mc", fvals, kern)
    return vals, float(np.abs(fvals).max()) if fvals.size else 0.0


def kernel_integrals(k, l, func: Callable[[np.ndarray], np.ndarray],
                     cfg: QuadConfig = QuadConfig(), breakpoints=(),
                     max_nodes: int = 2_000_000):
    """``int_0^1 rho_{k,l}(s) f_c(s) ds`` for every (k, l) pair and every row c of f.

    ``func`` maps a 1-D array of nodes to a ``(ncomp, nodes)`` array.
    Panels cover the region where rho is within ``exp(-log_cutoff)`` of
    its peak, split uniformly, at the mode, and at ``breakpoints`` (with
    geometric grading toward them).  Returns ``(values, err, fmax)`` where
    ``values`` has shape ``(ncells, ncomp)``, ``err`` is the largest
    coarse/fine disagreement and ``fmax`` the largest ``|f|`` seen at a node.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    l = np.atleast_1d(np.asarray(l, dtype=float))
    if k.shape != l.shape:
        raise TableError("k and l must have the same shape")
    gl = leggauss(cfg.points)
    nb = cfg.panels * (2 if cfg.check else 1) + 2 + len(breakpoints) * (1 + 2 * cfg.grading_levels)
    chunk = max(1, max_nodes // (nb * cfg.points))
    out = []
    err = 0.0
    fmax = 0.0
    for c0 in range(0, k.size, chunk):
        kc, lc = k[c0:c0 + chunk], l[c0:c0 + chunk]
        sup = _support(kc, lc, cfg.log_cutoff)
        coarse, fm = _integrate(kc, lc, func, cfg.panels, breakpoints, cfg, gl, sup)
        fmax = max(fmax, fm)
        if cfg.check:
            fine, fm = _integrate(kc, lc, func, 2 * cfg.panels, breakpoints, cfg, gl, sup)
            fmax = max(fmax, fm)
            diff = np.abs(fine - coarse)
            scale = np.maximum(1.0, np.abs(fine))
            bad = diff > cfg.rtol * scale
            if np.any(bad):
                m, c = np.unravel_index(np.argmax(np.where(bad, diff / scale, 0.0)), diff.shape)
                raise QuadratureError(
                    f"quadrature did not converge for (k, l) = ({int(kc[m])}, {int(lc[m])}): "
                    f"coarse {float(coarse[m, c])!r}, fine {float(fine[m, c])!r}",
                    coarse=float(coarse[m, c]), fine=float(fine[m, c]),
                    where=(int(c), int(kc[m]), int(lc[m])))
            err = max(err, float(diff.max()) if diff.size else 0.0)
            coarse = fine
        out.append(coarse)
    return np.concatenate(out, axis=0), err, fmax


def _component_func(curve: Curve, comps):
    rows = [j - 1 for j in comps]
    return lambda s: curve.derivative(s)[rows]


def scaled_coefficient(curve: Curve, j: int, idx: KernelIndex, cfg: QuadConfig = QuadConfig()) -> float:
    """``(k+l+1)! S^{(j;i)}_{k,l} / C0^{k+l}``, i.e. ``int rho_{k,l} x_j'``."""
    if j == curve.axial_index:
        raise TableError("axial cells are analytic (equal to C0); quadrature applies to j != i only")
    if not 1 <= j <= curve.d:
        raise TableError(f"component {j} not in 1..{curve.d}")
    vals, _, _ = kernel_integrals([idx.k], [idx.l], _component_func(curve, [j]), cfg, curve.breakpoints)
    return float(vals[0, 0])


# ----------------------------------------------------------------- table


@dataclass
class CoeffTable:
    """Scaled coefficients ``S_hat^{(j;i)}_{k,l}`` for all j != i and k + l <= N.

    ``values[r, k, l]`` holds component ``components[r]``; entries with
    k + l > N are NaN.
    """

    d: int
    axial_index: int
    C0: float
    N: int
    values: np.ndarray
    quad_error: float = 0.0
    sup_bounds: dict = field(default_factory=dict)  # component -> bound on |x_j'|
    name: str = ""

    def __post_init__(self):
        if not self.C0 > 0 or not math.isfinite(self.C0):
            raise TableError(f"C0 must be positive and finite, got {self.C0}")
        if self.values.shape != (self.d - 1, self.N + 1, self.N + 1):
            raise TableError(f"values shape {self.values.shape} does not match d={self.d}, N={self.N}")

    @property
    def components(self) -> list[int]:
        return [j for j in range(1, self.d + 1) if j != self.axial_index]

    def _row(self, j: int) -> int:
        if j == self.axial_index or not 1 <= j <= self.d:
            raise TableError(f"component {j} is not a non-axial component of this table")
        return j - 1 if j < self.axial_index else j - 2

    def cell(self, j: int, k: int, l: int) -> float:
        if k < 0 or l < 0 or k + l > self.N:
            raise TableError(f"cell ({k}, {l}) outside truncation N={self.N}")
        if j == self.axial_index:
            return self.C0
        return float(self.values[self._row(j), k, l])

    def level(self, j: int, n: int) -> np.ndarray:
        """S_hat^{(j;i)}_{k, n-k} for k = 0..n."""
        if not 0 <= n <= self.N:
            raise TableError(f"level {n} outside truncation N={self.N}")
        k = np.arange(n + 1)
        if j == self.axial_index:
            return np.full(n + 1, self.C0)
        return self.values[self._row(j), k, n - k]

    def level_vectors(self, n: int) -> np.ndarray:
        """(d-1, n+1) array of all non-axial cells at level n."""
        if not 0 <= n <= self.N:
            raise TableError(f"level {n} outside truncation N={self.N}")
        k = np.arange(n + 1)
        return self.values[:, k, n - k]

    def compatible(self, other: "CoeffTable") -> bool:
        return (self.d, self.axial_index, self.N) == (other.d, other.axial_index, other.N)


def _triangle(N: int):
    n = np.repeat(np.arange(N + 1), np.arange(1, N + 2))
    k = np.concatenate([np.arange(m + 1) for m in range(N + 1)])
    return k, n - k


def build_table(curve: Curve, N: int, cfg: QuadConfig = QuadConfig(), workers: int | None = None) -> CoeffTable:
    """Fill every cell with k + l <= N for every non-axial component."""
    if N < 1:
        raise TableError(f"truncation N must be >= 1, got {N}")
    comps = curve.other_components
    k, l = _triangle(N)
    func = _component_func(curve, comps)
    workers = workers or worker_count()
    # contiguous batches keep the result order independent of scheduling
    nbatch = max(1, workers * 4) if workers > 1 else 1
    bounds = np.linspace(0, k.size, nbatch + 1).astype(int)

    def run(b):
        lo, hi = bounds[b], bounds[b + 1]
        try:
            return kernel_integrals(k[lo:hi], l[lo:hi], func, cfg, curve.breakpoints)
        except QuadratureError as exc:
            c, kk, ll = exc.where
            raise QuadratureError(f"cell (j={comps[c]}, k={kk}, l={ll}): {exc}",
                                  exc.coarse, exc.fine, (comps[c], kk, ll)) from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(nbatch)))
    else:
        parts = [run(b) for b in range(nbatch)]
    vals = np.concatenate([p[0] for p in parts], axis=0)
    err = max(p[1] for p in parts)
    values = np.full((len(comps), N + 1, N + 1), np.nan)
    values[:, k, l] = vals.T
    grid = np.linspace(0.0, 1.0, 10_001)
    g = np.abs(curve.derivative(grid))
    fmax = max(p[2] for p in parts)
    # node maxima are pooled over components, so this can overshoot but never undershoot
    sup = {j: float(max(g[j - 1].max(), fmax)) for j in comps}
    return CoeffTable(curve.d, curve.axial_index, float(curve.axial_speed), N, values,
                      quad_error=err, sup_bounds=sup, name=curve.name)


def combine_tables(weights, tables) -> CoeffTable:
    """Cell-wise linear combination of tables of curves with C0 = 1."""
    ref = tables[0]
    for t in tables:
        if not t.compatible(ref) or t.C0 != 1.0:
            raise TableError("combining tables needs equal (d, i, N) and C0 = 1")
    vals = sum(float(w) * t.values for w, t in zip(weights, tables))
    return CoeffTable(ref.d, ref.axial_index, 1.0, ref.N, vals,
                      quad_error=sum(abs(float(w)) * t.quad_error for w, t in zip(weights, tables)))


# ------------------------------------------------------------------- I/O


def _raw_from_scaled(v: float, n: int, c0: float) -> tuple[int, float]:
    if v == 0.0:
        return 0, 0.0
    return (1 if v > 0 else -1), math.log(abs(v)) - float(gammaln(n + 2.0)) + n * math.log(c0)


def _scaled_from_raw(sign: int, loga: float, n: int, c0: float) -> float:
    if sign == 0:
        return 0.0
    return sign * math.exp(float(gammaln(n + 2.0)) + loga - n * math.log(c0))


def table_to_dict(table: CoeffTable, raw: bool = False) -> dict:
    cells = []
    for j in table.components:
        r = table._row(j)
        for n in range(table.N + 1):
            for k in range(n + 1):
                v = float(table.values[r, k, n - k])
                if raw:
                    sign, loga = _raw_from_scaled(v, n, table.C0)
                    cells.append({"j": j, "k": k, "l": n - k, "sign": sign, "loga": loga})
                else:
                    cells.append({"j": j, "k": k, "l": n - k, "v": v})
    return {"d": table.d, "i": table.axial_index, "C0": table.C0, "N": table.N,
            "scaled": not raw, "cells": cells,
            "meta": {"name": table.name, "quad_error": table.quad_error,
                     "sup_bounds": {str(j): b for j, b in table.sup_bounds.items()}}}


def emit_table(table: CoeffTable, path, raw: bool = False) -> None:
    with open(path, "w") as fh:
        json.dump(table_to_dict(table, raw=raw), fh, separators=(",", ":"))
        fh.write("\n")


def table_from_dict(doc: dict) -> CoeffTable:
    try:
        d, i, c0, N = int(doc["d"]), int(doc["i"]), float(doc["C0"]), int(doc["N"])
        scaled = bool(doc.get("scaled", True))
        cells = doc["cells"]
    except (KeyError, TypeError, ValueError) as exc:
        raise TableError(f"table schema violation: {exc}") from exc
    if not (c0 > 0 and math.isfinite(c0)):
        raise TableError(f"C0 must be positive and finite, got {c0}")
    if d < 2 or not 1 <= i <= d or N < 0:
        raise TableError(f"bad header d={d}, i={i}, N={N}")
    comps = [j for j in range(1, d + 1) if j != i]
    values = np.full((d - 1, N + 1, N + 1), np.nan)
    for cell in cells:
        try:
            j, k, l = int(cell["j"]), int(cell["k"]), int(cell["l"])
            if scaled:
                v = float(cell["v"])
            else:
                sign, loga = int(cell["sign"]), float(cell["loga"])
                if sign not in (-1, 0, 1):
                    raise ValueError(f"sign must be -1, 0 or 1, got {sign}")
                if not math.isfinite(loga):
                    raise ValueError("non-finite loga")
                v = _scaled_from_raw(sign, loga, k + l, c0)
        except (KeyError, TypeError, ValueError) as exc:
            raise TableError(f"bad cell {cell!r}: {exc}") from exc
        if j not in comps or k < 0 or l < 0 or k + l > N:
            raise TableError(f"cell (j={j}, k={k}, l={l}) outside the table shape")
        if not math.isfinite(v):
            raise TableError(f"non-finite entry at (j={j}, k={k}, l={l})")
        values[comps.index(j), k, l] = v
    kk, ll = _triangle(N)
    if np.isnan(values[:, kk, ll]).any():
        raise TableError("table file is missing cells")
    meta = doc.get("meta") or {}
    sup = {int(j): float(b) for j, b in (meta.get("sup_bounds") or {}).items()}
    return CoeffTable(d, i, c0, N, values, quad_error=float(meta.get("quad_error", 0.0)),
                      sup_bounds=sup, name=str(meta.get("name", "")))


def ingest_raw_table(path) -> CoeffTable:
    """Read a table file (scaled or raw sign/log variant) into scaled storage."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TableError(f"{path}: not valid JSON: {exc}") from exc
    return table_from_dict(doc)


read_table = ingest_raw_table


def table_to_csv(table: CoeffTable, raw: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "k", "l", "sign", "loga"] if raw else ["j", "k", "l", "v"])
    for cell in table_to_dict(table, raw=raw)["cells"]:
        if raw:
            w.writerow([cell["j"], cell["k"], cell["l"], cell["sign"], repr(cell["loga"])])
        else:
            w.writerow([cell["j"], cell["k"], cell["l"], repr(cell["v"])])
    return buf.getvalue()
