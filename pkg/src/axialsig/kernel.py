"""Beta kernels rho_{k,l}(s) = (k+l+1)!/(k! l!) s^k (1-s)^l, in log space.

``(n+1)!/(k! l!)`` overflows a double near n = 170, so everything here
works with log-densities built from ``gammaln``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelIndex:
    k: int
    l: int

    def __post_init__(self):
        if self.k < 0 or self.l < 0:
            raise KernelError(f"kernel indices must be nonnegative, got ({self.k}, {self.l})")

    @property
    def n(self) -> int:
        return self.k + self.l


def log_norm_const(k, l):
    """log((k+l+1)! / (k! l!)), broadcasting over arrays."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    return gammaln(k + l + 2.0) - gammaln(k + 1.0) - gammaln(l + 1.0)


def log_rho_array(k, l, s):
    """Vectorised log rho_{k,l}(s); 0*log 0 = 0, -inf where a positive power meets 0."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    s = np.asarray(s, dtype=float)
    return log_norm_const(k, l) + xlogy(k, s) + xlog1py(l, -s)


def log_rho(idx: KernelIndex, s: float) -> float:
    if not 0.0 <= s <= 1.0:
        raise KernelError(f"s must lie in [0, 1], got {s}")
    return float(log_rho_array(idx.k, idx.l, s))


def rho(idx: KernelIndex, s: float) -> float:
    return math.exp(log_rho(idx, s))


def rho_mode(idx: KernelIndex) -> float:
    """Location k/n of the unique maximum of rho_{k,l}."""
    if idx.n == 0:
        raise KernelError("rho_{0,0} is uniform and has no unique mode")
    return idx.k / idx.n


def beta_std(k, l):
    """Standard deviation of Be(k+1, l+1)."""
    a = np.asarray(k, dtype=float) + 1.0
    b = np.asarray(l, dtype=float) + 1.0
    return np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))


def fast_decay_envelope(n: int, eps0: float) -> float:
    """3 n^{3/2} exp(-n^{2 eps0} / 18)."""
    _check_eps0(eps0)
    if n < 1:
        raise KernelError(f"n must be >= 1, got {n}")
    return math.exp(log_fast_decay_envelope(n, eps0))


def log_fast_decay_envelope(n, eps0: float):
    n = np.asarray(n, dtype=float)
    return math.log(3.0) + 1.5 * np.log(n) - n ** (2.0 * eps0) / 18.0


def _check_eps0(eps0):
    if not 0.0 < eps0 < 0.5:
        raise KernelError(f"eps0 must lie in (0, 1/2), got {eps0}")


@dataclass
class DecayRow:
    n: int
    eps0: float
    worst_log_ratio: float  # max over the excluded region of log(rho / envelope)
    violations: int
    worst_k: int = -1

    @property
    def worst_ratio(self) -> float:
        return math.exp(self.worst_log_ratio) if self.worst_log_ratio > -745 else 0.0


@dataclass
class DecayReport:
    eps0: float
    s_grid: int
    rows: list[DecayRow] = field(default_factory=list)

    @property
    def empirical_n0(self) -> int | None:
        """Smallest tested n from which no later tested n shows a violation."""
        n0 = None
        for row in reversed(self.rows):
            if row.violations:
                break
            n0 = row.n
        return n0

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "epsilon0", "worst_ratio", "violations"])
        for r in self.rows:
            w.writerow([r.n, f"{r.eps0:g}", f"{r.worst_ratio:.6e}", r.violations])
        return buf.getvalue()


def _decay_row(n: int, eps0: float, s: np.ndarray, log_s, log_1ms, chunk: int) -> DecayRow:
    radius = n ** (-0.5 + eps0)
    log_env = float(log_fast_decay_envelope(n, eps0))
    worst = -np.inf
    worst_k = -1
    violations = 0
    for k0 in range(0, n + 1, chunk):
        k = np.arange(k0, min(n, k0 + chunk - 1) + 1, dtype=float)
        l = n - k
        c = log_norm_const(k, l)
        # xlogy-style products with the 0*log0 = 0 convention
        with np.errstate(invalid="ignore"):
            lr = c[:, None] + np.where(k[:, None] > 0, k[:, None] * log_s[None, :], 0.0) \
                + np.where(l[:, None] > 0, l[:, None] * log_1ms[None, :], 0.0)
        excluded = np.abs(s[None, :] - (k / n)[:, None]) >= radius
        lr = np.where(excluded, lr - log_env, -np.inf)
        violations += int(np.count_nonzero(lr > 0.0))
        m = lr.max()
        if m > worst:
            worst = float(m)
            worst_k = int(k0 + np.unravel_index(np.argmax(lr), lr.shape)[0])
    return DecayRow(n, eps0, worst, violations, worst_k)


def check_fast_decay(n_values, eps0: float, s_grid: int = 10_001, chunk: int | None = None) -> DecayReport:
    """Sweep rho_{k,n-k} over a uniform s-grid against the fast-decay envelope.

    Only grid points with ``|s - k/n| >= n^{-1/2 + eps0}`` are tested.
    Each row records the number of violations and the worst ratio
    rho / envelope over the tested region.
    """
    _check_eps0(eps0)
    s = np.linspace(0.0, 1.0, s_grid)
    with np.errstate(divide="ignore"):
        log_s = np.log(s)
        log_1ms = np.log1p(-s)
    if chunk is None:
        chunk = max(1, 8_000_000 // s_grid)
    rep = DecayReport(eps0, s_grid)
    for n in sorted(int(n) for n in n_values):
        if n < 1:
            raise KernelError(f"n must be >= 1, got {n}")
        rep.rows.append(_decay_row(n, eps0, s, log_s, log_1ms, chunk))
    return rep


def stirling_threshold(n_max: int) -> tuple[int | None, list[int]]:
    """Check max_k rho_{k,n-k}(k/n) < 3 n^{3/2} for n = 1..n_max.

    Returns the smallest n0 such that the bound holds for every n in
    (n0, n_max] (0 when it holds throughout, None when it fails at n_max),
    and the list of failing n.
    """
    failing = []
    for n in range(1, n_max + 1):
        k = np.arange(n + 1, dtype=float)
        peak = log_rho_array(k, n - k, k / n).max()
        if not peak < math.log(3.0) + 1.5 * math.log(n):
            failing.append(n)
    if not failing:
        return 0, failing
    if failing[-1] == n_max:
        return None, failing
    return failing[-1], failing
