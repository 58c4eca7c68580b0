"""Recover derivatives, ratios, length and traces from a coefficient table.

Because the table stores S_hat = (q+1)! S / C0^q, the recovery limit
``y'(x) = lim (q_n+1)! S_{p_n, q_n-p_n} / C0^{q_n}`` reads cells directly:
the n-th estimate is just ``S_hat_{p_n, q_n - p_n}``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .curves import Polyline
from .rational import RationalScheme, make_scheme
from .table import CoeffTable, TableError


class InversionError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass
class RecoverySequence:
    x: float
    kind: str
    j: int
    rows: list = field(default_factory=list)  # (n, p, q, estimate)
    truncated: bool = False
    dropped: int = 0  # pairs discarded because q exceeded the table

    @property
    def estimates(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])

    @property
    def final(self) -> float:
        if not self.rows:
            raise InversionError("empty recovery sequence")
        return self.rows[-1][3]

    @property
    def stagnation(self) -> float:
        """max |difference| between consecutive estimates among the last three."""
        e = self.estimates[-3:]
        return float(np.abs(np.diff(e)).max()) if e.size > 1 else math.nan

    def to_csv(self, oracle: float | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p", "q", "estimate"] + (["err_vs_oracle"] if oracle is not None else []))
        for n, p, q, e in self.rows:
            row = [n, p, q, f"{e:.17g}"]
            if oracle is not None:
                row.append(f"{abs(e - oracle):.6e}")
            w.writerow(row)
        return buf.getvalue()


def _resolve_scheme(table: CoeffTable, x: float, scheme, n_max) -> RationalScheme:
    if isinstance(scheme, RationalScheme):
        return scheme
    return make_scheme(str(scheme), x, n_max if n_max is not None else table.N)


def _sequence(table, j, x, scheme, n_max, divide_by):
    sch = _resolve_scheme(table, x, scheme, n_max)
    if not 1 <= j <= table.d:
        raise InversionError(f"component {j} not in 1..{table.d}")
    seq = RecoverySequence(sch.x, sch.kind, j)
    limit = table.N if n_max is None else min(n_max, table.N)
    for n, (p, q) in enumerate(sch.pairs, start=1):
        if q > limit:
            seq.dropped += 1
            continue
        seq.rows.append((n, p, q, table.cell(j, p, q - p) / divide_by))
    if seq.dropped:
        seq.truncated = True
        warnings.warn(f"{seq.dropped} pair(s) of the {sch.kind} scheme need q > {limit}; "
                      f"sequence truncated", TruncationWarning, stacklevel=3)
    if not seq.rows:
        raise InversionError(f"no pair of the {sch.kind} scheme fits within truncation {limit}")
    return seq


def recover_derivative_at(table: CoeffTable, j: int, x: float, scheme="naive",
                          n_max: int | None = None) -> RecoverySequence:
    """Estimates of x_j'(x) in the axial-linear parameterization.

    Each estimate is the cell S_hat_{p, q-p}, which already equals
    (q+1)! S_{p, q-p} / C0^q.
    """
    return _sequence(table, j, x, scheme, n_max, 1.0)


def recover_ratio(table: CoeffTable, j: int, x: float, scheme="naive",
                  n_max: int | None = None) -> RecoverySequence:
    """Estimates of x_j'/x_i' at the point where x_i has covered a fraction x of its range.

    This is (q+1)! S / C0^{q+1}, one more factor of C0 than the
    derivative recovery, and does not depend on the parameterization.
    """
    return _sequence(table, j, x, scheme, n_max, table.C0)


@dataclass
class Profile:
    s: np.ndarray  # k / n
    values: np.ndarray  # (len(components), n + 1)
    components: list[int]
    axial_index: int
    d: int
    C0: float

    def component(self, j: int) -> np.ndarray:
        return self.values[self.components.index(j)]


def recover_profile(table: CoeffTable, n: int, j: int | None = None) -> Profile:
    """Level-n cross-section {(k/n, S_hat_{k, n-k})}, k = 0..n; all components when j is None."""
    if n < 1:
        raise InversionError(f"n must be >= 1, got {n}")
    if n > table.N:
        raise InversionError(f"n = {n} exceeds table truncation {table.N}")
    comps = table.components if j is None else [j]
    vals = np.array([table.level(c, n) for c in comps])
    return Profile(np.arange(n + 1) / n, vals, comps, table.axial_index, table.d, table.C0)


def recover_length(table: CoeffTable, n: int) -> float:
    """sum_{k=1}^{n} sqrt(C0^2 + sum_{j != i} S_hat_{k, n-k}^2) / (n + 1).

    This is n! / C0^n times the sum of Euclidean norms of the raw
    coefficient vectors (axial entry included); the k = 0 term is left
    out, which biases the value low by about |gamma'(0)| / n.
    """
    if n < 1:
        raise InversionError(f"n must be >= 1, got {n}")
    try:
        v = table.level_vectors(n)[:, 1:]
    except TableError as exc:
        raise InversionError(str(exc)) from exc
    norms = np.sqrt(table.C0 ** 2 + np.sum(v * v, axis=0))
    return float(norms.sum() / (n + 1))


def reconstruct_trace(profile: Profile, C0: float | None = None) -> Polyline:
    """Integrate a recovered derivative profile from the origin (trapezoid rule)."""
    c0 = profile.C0 if C0 is None else C0
    s = profile.s
    verts = np.zeros((s.size, profile.d))
    verts[:, profile.axial_index - 1] = c0 * s
    for r, j in enumerate(profile.components):
        verts[:, j - 1] = cumulative_trapezoid(profile.values[r], s, initial=0.0)
    return Polyline(verts, s)
