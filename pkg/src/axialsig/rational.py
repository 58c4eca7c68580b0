"""Integer pairs (p_n, q_n) with p_n / q_n -> x, used to index table cells.

Floors and continued fractions are computed on the exact binary value of
the float ``x`` (via ``fractions.Fraction``), so ``floor(n x)`` never
suffers from a rounded product.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

KINDS = ("naive", "decimal", "continued_fraction", "fixed_list")
_ALIASES = {"cf": "continued_fraction", "fixed": "fixed_list"}
DECIMAL_Q_CAP = 10 ** 9


class RationalError(ValueError):
    pass


def _check_x(x: float) -> Fraction:
    if not (isinstance(x, (int, float, Fraction, np.floating, np.integer)) and 0 <= x <= 1):
        raise RationalError(f"x must lie in [0, 1], got {x!r}")
    return Fraction(x)


def naive_pair(x: float, n: int) -> tuple[int, int]:
    """(floor(n x), n)."""
    fx = _check_x(x)
    if n < 1:
        raise RationalError(f"n must be >= 1, got {n}")
    return math.floor(fx * n), n


class UniformPairs:
    """x -> (floor(n x), n) for a fixed n; accepts scalars or arrays."""

    def __init__(self, n: int):
        if n < 1:
            raise RationalError(f"n must be >= 1, got {n}")
        self.n = n

    def __call__(self, x):
        if np.ndim(x) == 0:
            return naive_pair(float(x), self.n)
        p = np.array([naive_pair(float(v), self.n)[0] for v in np.ravel(x)]).reshape(np.shape(x))
        return p, np.full(np.shape(x), self.n)


def uniform_pairs(n: int) -> UniformPairs:
    return UniformPairs(n)


@dataclass
class CFExpansion:
    x: float
    quotients: list[int]
    convergents: list[tuple[int, int]]
    terminated: bool  # the expansion reached x (exactly or to within 2^-52)


def cf_expansion(x: float, count: int) -> CFExpansion:
    """Continued-fraction convergents of x, q strictly increasing.

    The first two convergents of x > 1/2 share q = 1; the earlier one is
    dropped.  The expansion ends early once a convergent rounds to the
    same double as x (distance at most half an ulp, below 2^-52 on
    [0, 1]), since further quotients would only describe rounding.
    """
    fx = _check_x(x)
    if count < 1:
        raise RationalError(f"count must be >= 1, got {count}")
    quotients: list[int] = []
    conv: list[tuple[int, int]] = []
    h0, h1, k0, k1 = 0, 1, 1, 0  # p_{-2}, p_{-1}, q_{-2}, q_{-1}
    rem = fx
    terminated = False
    while len(conv) < count:
        a = math.floor(rem)
        quotients.append(a)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if conv and conv[-1][1] == k1:
            conv[-1] = (h1, k1)
        else:
            conv.append((h1, k1))
        frac = rem - a
        if frac == 0 or h1 / k1 == float(fx):
            terminated = True
            break
        rem = 1 / frac
    return CFExpansion(float(x), quotients, conv, terminated)


def continued_fraction_convergents(x: float, count: int) -> list[tuple[int, int]]:
    return cf_expansion(x, count).convergents


def meets_rate_condition(pairs, x: float) -> bool:
    """Every pair has |p/q - x| < q^{-1/2}, and q increases strictly."""
    if not pairs:
        raise RationalError("empty pair list")
    fx = Fraction(x)
    prev = 0
    for p, q in pairs:
        if q <= prev:
            return False
        prev = q
        err = abs(Fraction(p, q) - fx)
        # err < q^{-1/2}  <=>  err^2 q < 1
        if not err * err * q < 1:
            return False
    return True


@dataclass
class RationalScheme:
    kind: str
    x: float
    pairs: list[tuple[int, int]] = field(default_factory=list)
    terminated: bool = False  # continued fraction ran out and was extended by multiples

    def __post_init__(self):
        self.kind = _ALIASES.get(self.kind, self.kind)
        if self.kind not in KINDS:
            raise RationalError(f"unknown scheme {self.kind!r}; expected one of naive, decimal, cf")
        _check_x(self.x)
        prev = 0
        for p, q in self.pairs:
            if not (isinstance(p, int) and isinstance(q, int)) or q < 1 or not 0 <= p <= q:
                raise RationalError(f"pair ({p}, {q}) violates 0 <= p <= q, q >= 1")
            if q <= prev:
                raise RationalError(f"denominators must increase strictly; {q} follows {prev}")
            prev = q

    def errors(self) -> np.ndarray:
        return np.array([abs(p / q - self.x) for p, q in self.pairs])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p", "q", "err"])
        for n, ((p, q), e) in enumerate(zip(self.pairs, self.errors()), start=1):
            w.writerow([n, p, q, f"{e:.17g}"])
        return buf.getvalue()


def make_scheme(kind: str, x: float, n_max: int, pairs=None) -> RationalScheme:
    """Pairs with q <= n_max for the requested scheme."""
    kind = _ALIASES.get(kind, kind)
    _check_x(x)
    if n_max < 1:
        raise RationalError(f"n_max must be >= 1, got {n_max}")
    if kind == "naive":
        return RationalScheme(kind, x, [naive_pair(x, n) for n in range(1, n_max + 1)])
    if kind == "decimal":
        out, q = [], 10
        fx = Fraction(x)
        while q <= min(n_max, DECIMAL_Q_CAP):
            out.append((round(fx * q), q))
            q *= 10
        return RationalScheme(kind, x, out)
    if kind == "continued_fraction":
        exp = cf_expansion(x, 64)
        out = [(p, q) for p, q in exp.convergents if q <= n_max]
        if exp.terminated and out and out[-1] == exp.convergents[-1]:
            # exact hit: keep q growing with equivalent fractions
            p0, q0 = out[-1]
            m = 2
            while q0 * m <= n_max:
                out.append((p0 * m, q0 * m))
                m += 1
        return RationalScheme(kind, x, out, terminated=exp.terminated)
    if kind == "fixed_list":
        if pairs is None:
            raise RationalError("fixed_list scheme needs explicit pairs")
        return RationalScheme(kind, x, [(int(p), int(q)) for p, q in pairs if q <= n_max])
    raise RationalError(f"unknown scheme {kind!r}; expected one of naive, decimal, cf")
