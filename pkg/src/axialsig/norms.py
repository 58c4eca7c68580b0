"""Finite-level surrogates of the asymptotic supremum and L^1 seminorms.

For a pair of tables of curves with x_i(s) = s, the differences of the
axial coefficients at level n+1 determine

    AS_n  = (n+1)! max_k ||S_{k,n-k}(A) - S_{k,n-k}(B)||
    AL1_n = n! sum_{k=1}^{n} ||S_{k,n-k}(A) - S_{k,n-k}(B)||

(Euclidean norm over j != i).  Both are evaluated on scaled cells, so the
factorials cancel and nothing overflows.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .chen import TruncatedSignature, chen_truncated_signature
from .curves import Curve, Polyline, make_preset, sample_polyline, sup_norm_and_holder
from .table import CoeffTable, QuadConfig, build_table


class NormError(ValueError):
    pass


def _difference(table_a: CoeffTable, table_b: CoeffTable | None):
    if table_b is None:
        return table_a.values, table_a.C0
    if not table_a.compatible(table_b):
        raise NormError("tables must share dimension, axial index and truncation")
    if table_a.C0 != 1.0 or table_b.C0 != 1.0:
        raise NormError("differences are only defined for curves with C0 = 1 "
                        f"(got {table_a.C0} and {table_b.C0})")
    return table_a.values - table_b.values, 1.0


def seminorm_kl_log(table_a: CoeffTable, table_b: CoeffTable | None, k: int, l: int) -> float:
    """log of the Euclidean norm of the raw coefficient (difference) vector; -inf for zero."""
    vals, c0 = _difference(table_a, table_b)
    n = k + l
    if k < 0 or l < 0 or n > table_a.N:
        raise NormError(f"cell ({k}, {l}) outside truncation N={table_a.N}")
    scaled = float(np.linalg.norm(vals[:, k, l]))
    if scaled == 0.0:
        return -math.inf
    return math.log(scaled) + n * math.log(c0) - float(gammaln(n + 2.0))


def seminorm_kl(table_a: CoeffTable, table_b: CoeffTable | None, k: int, l: int) -> float:
    """||S_{k,l}(A) - S_{k,l}(B)|| in raw units (underflows to 0.0 past double range)."""
    lg = seminorm_kl_log(table_a, table_b, k, l)
    return math.exp(lg) if lg > -745.0 else 0.0


def _tail_slope(ns, vals) -> float:
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    h = ns.size // 2
    if ns.size - h < 2:
        return math.nan
    return float(np.polyfit(ns[h:], vals[h:], 1)[0])


@dataclass
class NormSequence:
    kind: str  # "AS" or "AL1"
    rows: list = field(default_factory=list)  # (n, value)
    reference: float | None = None
    argmax: list = field(default_factory=list)  # AS only: smallest maximizing k per n

    @property
    def ns(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def final(self) -> float:
        return self.rows[-1][1]

    @property
    def trend(self) -> float:
        """Least-squares slope of value_n against n over the tail half."""
        return _tail_slope(self.ns, self.values)

    def rel_err(self, value: float) -> float:
        if self.reference is None:
            return math.nan
        ref = self.reference
        return abs(value - ref) / abs(ref) if ref != 0 else abs(value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value", "reference", "rel_err"])
        ref = "" if self.reference is None else f"{self.reference:.12g}"
        for n, v in self.rows:
            e = self.rel_err(v)
            w.writerow([n, f"{v:.12g}", ref, "" if math.isnan(e) else f"{e:.6e}"])
        return buf.getvalue()


def _level_norms(vals, n):
    k = np.arange(n + 1)
    return np.linalg.norm(vals[:, k, n - k], axis=0)


def as_sequence(table_a: CoeffTable, table_b: CoeffTable | None = None, N: int | None = None,
                reference: float | None = None) -> NormSequence:
    """value_n = C0^n max_k ||S_hat_{k,n-k}||, n = 1..N; ties go to the smallest k."""
    vals, c0 = _difference(table_a, table_b)
    N = table_a.N if N is None else N
    if not 1 <= N <= table_a.N:
        raise NormError(f"N = {N} outside 1..{table_a.N}")
    seq = NormSequence("AS", reference=reference)
    for n in range(1, N + 1):
        norms = _level_norms(vals, n)
        k = int(np.argmax(norms))  # first occurrence
        seq.rows.append((n, float(norms[k]) * c0 ** n))
        seq.argmax.append(k)
    return seq


def al1_sequence(table_a: CoeffTable, table_b: CoeffTable | None = None, N: int | None = None,
                 reference: float | None = None) -> NormSequence:
    """value_n = C0^n / (n+1) sum_{k=1}^{n} ||S_hat_{k,n-k}||, n = 1..N."""
    vals, c0 = _difference(table_a, table_b)
    N = table_a.N if N is None else N
    if not 1 <= N <= table_a.N:
        raise NormError(f"N = {N} outside 1..{table_a.N}")
    seq = NormSequence("AL1", reference=reference)
    for n in range(1, N + 1):
        norms = _level_norms(vals, n)
        seq.rows.append((n, float(norms[1:].sum()) * c0 ** n / (n + 1)))
    return seq


def proj_bounds(sig_a: TruncatedSignature, sig_b: TruncatedSignature) -> tuple[float, float]:
    """(max |coefficient difference|, sum |coefficient difference|) over all words.

    The first is at most the projective norm of the truncated difference
    and the second at least it, since every basis tensor has norm one.
    """
    if (sig_a.d, sig_a.N) != (sig_b.d, sig_b.N):
        raise NormError(f"shape mismatch: (d, N) = {(sig_a.d, sig_a.N)} vs {(sig_b.d, sig_b.N)}")
    diff = np.abs(np.concatenate(sig_a.levels) - np.concatenate(sig_b.levels))
    return float(diff.max()), float(diff.sum())


# ------------------------------------------------------ curve distances

_GL8 = leggauss(8)


def c1_distance(a: Curve, b: Curve, grid: int = 100_001) -> float:
    """max over a dense grid of ||a'(s) - b'(s)||."""
    s = np.linspace(0.0, 1.0, grid)
    return float(np.linalg.norm(a.derivative(s) - b.derivative(s), axis=0).max())


def bv_distance(a: Curve, b: Curve, panels: int = 2000) -> float:
    """int_0^1 ||a'(s) - b'(s)|| ds by composite 8-point Gauss-Legendre."""
    edges = np.union1d(np.linspace(0.0, 1.0, panels + 1), np.array(a.breakpoints + b.breakpoints))
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x, w = _GL8
    nodes = ((0.5 * (lo + hi))[:, None] + half[:, None] * x[None, :]).ravel()
    f = np.linalg.norm(a.derivative(nodes) - b.derivative(nodes), axis=0).reshape(lo.size, -1)
    return float(np.sum(f * w[None, :] * half[:, None]))


# -------------------------------------------------------------- checks


@dataclass
class IsometryReport:
    as_seq: NormSequence
    al1_seq: NormSequence
    d_c1: float
    d_bv: float

    @property
    def as_final(self) -> float:
        return self.as_seq.final

    @property
    def al1_final(self) -> float:
        return self.al1_seq.final

    @property
    def as_rel_dev(self) -> float:
        return self.as_seq.rel_err(self.as_final)

    @property
    def al1_rel_dev(self) -> float:
        return self.al1_seq.rel_err(self.al1_final)


def isometry_check(curve_a: Curve, curve_b: Curve, N: int, cfg: QuadConfig = QuadConfig(),
                   tables: tuple[CoeffTable, CoeffTable] | None = None) -> IsometryReport:
    """Compare AS / AL1 sequences of the table difference with d_C1 and d_BV."""
    for c in (curve_a, curve_b):
        if c.axial_speed != 1.0:
            raise NormError(f"curve {c.name!r} has C0 = {c.axial_speed}; the check needs C0 = 1")
    if (curve_a.d, curve_a.axial_index) != (curve_b.d, curve_b.axial_index):
        raise NormError("curves must share dimension and axial index")
    ta, tb = tables if tables is not None else (build_table(curve_a, N, cfg), build_table(curve_b, N, cfg))
    d_c1 = c1_distance(curve_a, curve_b)
    d_bv = bv_distance(curve_a, curve_b)
    return IsometryReport(as_sequence(ta, tb, N, reference=d_c1),
                          al1_sequence(ta, tb, N, reference=d_bv), d_c1, d_bv)


@dataclass
class DiscontinuityReport:
    N: int
    rows: list = field(default_factory=list)  # (m, proj_lower, proj_upper, d_bv, level1_diff)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "proj_upper", "d_bv"])
        for m, _, up, dbv, _ in self.rows:
            w.writerow([m, f"{up:.12g}", f"{dbv:.12g}"])
        return buf.getvalue()


def discontinuity_demo(m_range, N: int = 10, vertices_per_turn: int = 256) -> DiscontinuityReport:
    """Helices (t, cos(2 pi m t)/(2 pi m), sin(2 pi m t)/(2 pi m)) against (t, 0, 0).

    The helices are sampled from the origin, so they differ from the formula
    by a translation, which leaves the signature unchanged.  The truncated
    signatures approach each other as m grows while the BV distance stays at 1.
    """
    ms = [int(m) for m in m_range]
    if not ms:
        raise NormError("m_range is empty")
    if N > 12:
        raise NormError("the demo keeps N <= 12 (dense d = 3 tensors)")
    straight = make_preset("zero", {"d": 3})
    base = chen_truncated_signature(Polyline.from_vertices([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), N)
    rep = DiscontinuityReport(N)
    for m in ms:
        helix = make_preset("helix", {"n": m})
        sig = chen_truncated_signature(sample_polyline(helix, vertices_per_turn * m + 1), N)
        lo, up = proj_bounds(sig, base)
        lvl1 = float(np.abs(sig.levels[1] - base.levels[1]).max())
        rep.rows.append((m, lo, up, bv_distance(helix, straight), lvl1))
    return rep


def modcont_delta_log(eps: float, eps0: float, alpha: float, d: int, c0: float = 1.0,
                      c1bar: float = 1.0, c2bar: float = 1.0) -> tuple[int, float]:
    """Smallest admissible level n and log of delta(eps) from the modulus-of-continuity bound.

    n is the least integer with n > c1bar * eps^{1 / ((-1/2 + eps0) alpha)}, and
    delta = (c2bar / sqrt(d)) c0^n / (n+1)! eps.
    """
    if not 0 < eps0 < 0.5 or not 0 < alpha <= 1 or not eps > 0:
        raise NormError("need eps > 0, eps0 in (0, 1/2), alpha in (0, 1]")
    n = math.floor(c1bar * eps ** (1.0 / ((-0.5 + eps0) * alpha))) + 1
    n = max(n, 1)
    logd = math.log(c2bar / math.sqrt(d)) + n * math.log(c0) - float(gammaln(n + 2.0)) + math.log(eps)
    return n, logd


def format_log_value(lg: float) -> str:
    """Scientific notation for exp(lg), valid far outside double range."""
    if lg == -math.inf:
        return "0"
    t = lg / math.log(10.0)
    e = math.floor(t)
    mant = 10.0 ** (t - e)
    if mant >= 9.9995:
        mant, e = 1.0, e + 1
    return f"{mant:.3f}e{e:+d}"


@dataclass
class ModcontReport:
    rows: list = field(default_factory=list)  # dicts
    skipped: list = field(default_factory=list)  # (lambda, reason)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "delta_theorem", "delta_empirical", "dc1"])
        for r in self.rows:
            w.writerow([f"{r['epsilon']:.6g}", format_log_value(r["log_delta_theorem"]),
                        f"{r['delta_empirical']:.6e}", f"{r['dc1']:.6e}"])
        return buf.getvalue()

    @property
    def implication_holds(self) -> bool:
        return all(r["dc1"] < r["epsilon"] or r["dc1"] == 0.0 for r in self.rows)


def perturbed_curve(base: Curve, lam: float, freq: int, j: int = 2) -> Curve:
    """base + lam * e_j sin(2 pi freq s) / (2 pi freq); derivative shifts by lam cos(2 pi freq s)."""
    def deriv(s):
        out = base.derivative(s)
        out[j - 1] = out[j - 1] + lam * np.cos(2 * np.pi * freq * s)
        return out

    return Curve(base.d, base.axial_index, base.axial_speed, deriv,
                 name=f"{base.name}+{lam:g}*wave{freq}", breakpoints=base.breakpoints)


def modcont_experiment(curve: Curve, eps_grid, lambdas, freq: int = 1, eps0: float = 0.1,
                       alpha: float = 1.0, K: float = 10.0, c1bar: float = 1.0, c2bar: float = 1.0,
                       sig_level: int = 6, vertices: int = 2000) -> ModcontReport:
    """Chart which perturbation sizes pass the theorem's delta test and how close they stay in C^1.

    For each lambda the perturbed curve is checked against the K-ball
    (grid sup norm and alpha-Holder seminorm of the derivative), its
    truncated signature is compared with the base curve through the
    l^1 upper bound of the projective norm, and its C^1 distance is
    measured.  For each eps the row records delta(eps), the largest
    upper bound among perturbations with d_C1 < eps (empirical
    frontier), and the largest d_C1 among perturbations whose bound
    falls below delta(eps).
    """
    base_sig = chen_truncated_signature(sample_polyline(curve, vertices), sig_level)
    rep = ModcontReport()
    samples = []
    for lam in lambdas:
        lam = float(lam)
        pc = perturbed_curve(curve, lam, freq)
        sup, hol = sup_norm_and_holder(pc, alpha)
        if sup > K or hol > K:
            rep.skipped.append((lam, f"outside K-ball: sup {sup:.4g}, holder {hol:.4g}, K {K:g}"))
            continue
        if lam == 0.0:
            samples.append((0.0, 0.0))
            continue
        sig = chen_truncated_signature(sample_polyline(pc, vertices), sig_level)
        _, up = proj_bounds(sig, base_sig)
        samples.append((up, c1_distance(pc, curve)))
    for eps in eps_grid:
        n, logd = modcont_delta_log(float(eps), eps0, alpha, curve.d, curve.axial_speed, c1bar, c2bar)
        inside = [up for up, dc in samples if dc < eps]
        passing = [dc for up, dc in samples if up == 0.0 or math.log(up) < logd]
        rep.rows.append({"epsilon": float(eps), "n": n, "log_delta_theorem": logd,
                         "delta_empirical": max(inside) if inside else 0.0,
                         "dc1": max(passing) if passing else 0.0})
    return rep
