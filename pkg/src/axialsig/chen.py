"""Truncated signatures of polylines via Chen's identity.

Level n is stored as a flat array of length d**n in row-major word
order, so the word (w_1, ..., w_n) (1-based letters) sits at index
sum (w_m - 1) d^(n-m).  This is the independent route used to check
the quadrature tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import Polyline
from .table import CoeffTable


class SignatureError(ValueError):
    pass


@dataclass
class TruncatedSignature:
    d: int
    N: int
    levels: list  # levels[n] has shape (d**n,); levels[0] == [1.]

    def __post_init__(self):
        if len(self.levels) != self.N + 1:
            raise SignatureError(f"expected {self.N + 1} levels, got {len(self.levels)}")
        for n, lev in enumerate(self.levels):
            if lev.shape != (self.d ** n,):
                raise SignatureError(f"level {n} has shape {lev.shape}, expected ({self.d ** n},)")

    @classmethod
    def identity(cls, d: int, N: int) -> "TruncatedSignature":
        return cls(d, N, [np.ones(1)] + [np.zeros(d ** n) for n in range(1, N + 1)])

    @classmethod
    def exp_segment(cls, delta, N: int) -> "TruncatedSignature":
        """Signature of a straight segment: level n is delta^{(x)n} / n!."""
        delta = np.asarray(delta, dtype=float)
        levels = [np.ones(1)]
        for n in range(1, N + 1):
            levels.append(np.outer(levels[-1], delta).ravel() / n)
        return cls(delta.size, N, levels)

    def word_index(self, word) -> int:
        idx = 0
        for w in word:
            if not 1 <= w <= self.d:
                raise SignatureError(f"letter {w} not in 1..{self.d}")
            idx = idx * self.d + (w - 1)
        return idx

    def coefficient(self, word) -> float:
        word = tuple(word)
        if len(word) > self.N:
            raise SignatureError(f"word length {len(word)} exceeds truncation {self.N}")
        return float(self.levels[len(word)][self.word_index(word)])

    def __mul__(self, other: "TruncatedSignature") -> "TruncatedSignature":
        """Truncated tensor product (concatenation of the underlying paths)."""
        if (self.d, self.N) != (other.d, other.N):
            raise SignatureError("signatures must share dimension and truncation")
        out = []
        for n in range(self.N + 1):
            acc = np.zeros(self.d ** n)
            for a in range(n + 1):
                acc += np.outer(self.levels[a], other.levels[n - a]).ravel()
            out.append(acc)
        return TruncatedSignature(self.d, self.N, out)

    def flat(self, start: int = 1) -> np.ndarray:
        return np.concatenate(self.levels[start:])


def chen_truncated_signature(path: Polyline, N: int) -> TruncatedSignature:
    """Signature of a polyline up to level N.

    Each segment multiplies the running signature by exp(delta).  The
    update of level n is evaluated in Horner form
    ``(((S_0 delta / n + S_1) delta / (n-1) + ...) delta / 1 + S_n``,
    from the top level down so lower levels are still the old ones.
    """
    if N < 1:
        raise SignatureError(f"truncation N must be >= 1, got {N}")
    d = path.d
    sig = [np.ones(1)] + [np.zeros(d ** n) for n in range(1, N + 1)]
    for delta in path.increments():
        for n in range(N, 0, -1):
            t = sig[0]
            for m in range(1, n + 1):
                t = np.outer(t, delta).ravel() / (n - m + 1) + sig[m]
            sig[n] = t
    return TruncatedSignature(d, N, sig)


def axial_word(i: int, j: int, k: int, l: int) -> tuple[int, ...]:
    return (i,) * k + (j,) + (i,) * l


def extract_axial_coefficient(sig: TruncatedSignature, i: int, j: int, k: int, l: int) -> float:
    """Raw coefficient of e_i^{k} e_j e_i^{l}."""
    return sig.coefficient(axial_word(i, j, k, l))


def scaled_from_signature(sig: TruncatedSignature, i: int, j: int, k: int, l: int, c0: float) -> float:
    n = k + l
    return extract_axial_coefficient(sig, i, j, k, l) * math.factorial(n + 1) / c0 ** n


@dataclass
class CrossCheckReport:
    max_level: int
    max_rel_err: float
    worst: tuple[int, int, int]  # (j, k, l)
    cells: int


def cross_check(table: CoeffTable, sig: TruncatedSignature, max_level: int | None = None,
                floor: float = 1e-12) -> CrossCheckReport:
    """Compare every table cell with k + l <= max_level against the Chen signature.

    Relative error is ``|t - c| / max(|t|, |c|, floor)``.
    """
    if sig.d != table.d:
        raise SignatureError(f"dimension mismatch: table d={table.d}, signature d={sig.d}")
    top = min(table.N, sig.N - 1) if max_level is None else max_level
    if top > min(table.N, sig.N - 1):
        raise SignatureError(f"max_level {top} needs table N >= {top} and signature N >= {top + 1}")
    worst, where, cells = 0.0, (0, 0, 0), 0
    for j in table.components:
        for n in range(top + 1):
            for k in range(n + 1):
                t = table.cell(j, k, n - k)
                c = scaled_from_signature(sig, table.axial_index, j, k, n - k, table.C0)
                err = abs(t - c) / max(abs(t), abs(c), floor)
                cells += 1
                if err > worst:
                    worst, where = err, (j, k, n - k)
    return CrossCheckReport(top, worst, where, cells)


def level_norms(sig: TruncatedSignature) -> np.ndarray:
    """Euclidean norm of each level, used for factorial-decay checks."""
    return np.array([np.linalg.norm(lev) for lev in sig.levels])
