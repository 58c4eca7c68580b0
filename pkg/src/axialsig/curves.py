"""C^1 curves on [0, 1] with one linear ("axial") coordinate.

Curves are carried by their derivative.  Component indices are 1-based
throughout the package so that ``j`` and ``i`` read the same as in the
usual signature notation ``S^{(j;i)}_{k,l}``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

DerivativeFn = Callable[[np.ndarray], np.ndarray]


class CurveError(ValueError):
    """Invalid curve construction or preset request."""


@dataclass(frozen=True)
class Curve:
    """An axial-linear C^1 curve ``gamma: [0, 1] -> R^d``.

    ``deriv`` maps a 1-D array of parameters to a ``(d, len(s))`` array.
    The axial row is always overwritten with ``axial_speed`` so that
    ``x_i(s) = C0 * s`` holds exactly.
    """

    d: int
    axial_index: int
    axial_speed: float
    deriv: DerivativeFn = field(repr=False)
    name: str = "curve"
    holder: tuple[float, float] | None = None  # (alpha, bound on ||gamma'||_alpha)
    breakpoints: tuple[float, ...] = ()  # where gamma' may fail to be smooth
    domain: tuple[float, float] = (0.0, 1.0)  # original [a, b], metadata only

    def __post_init__(self):
        if self.d < 2:
            raise CurveError(f"dimension must be >= 2, got {self.d}")
        if not 1 <= self.axial_index <= self.d:
            raise CurveError(f"axial index {self.axial_index} not in 1..{self.d}")
        if not self.axial_speed > 0:
            raise CurveError(f"axial speed must be positive, got {self.axial_speed}")

    @property
    def other_components(self) -> list[int]:
        return [j for j in range(1, self.d + 1) if j != self.axial_index]

    def derivative(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.array(self.deriv(s), dtype=float, copy=True).reshape(self.d, s.size)
        out[self.axial_index - 1] = self.axial_speed
        return out

    def component(self, j: int, s) -> np.ndarray:
        """x_j'(s) for a 1-based component index."""
        if not 1 <= j <= self.d:
            raise CurveError(f"component {j} not in 1..{self.d}")
        return self.derivative(s)[j - 1]


@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray  # (m, d)
    grid: np.ndarray  # (m,), strictly increasing from 0 to 1

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        g = np.asarray(self.grid, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise CurveError("polyline vertices must be a non-empty (m, d) array")
        if g.shape != (v.shape[0],):
            raise CurveError(f"grid has {g.size} entries for {v.shape[0]} vertices")
        if v.shape[0] > 1:
            if g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
                raise CurveError("grid must increase strictly from 0 to 1")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "grid", g)

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    def __len__(self):
        return self.vertices.shape[0]

    def increments(self) -> np.ndarray:
        return np.diff(self.vertices, axis=0)

    def length(self) -> float:
        return float(np.linalg.norm(self.increments(), axis=1).sum())

    @classmethod
    def from_vertices(cls, vertices) -> "Polyline":
        v = np.asarray(vertices, dtype=float)
        m = v.shape[0]
        grid = np.linspace(0.0, 1.0, m) if m > 1 else np.zeros(1)
        return cls(v, grid)


# ---------------------------------------------------------------- presets


def _polynomial_derivative(coeffs: Sequence[float]) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.size <= 1:
        return np.zeros(1)
    return c[1:] * np.arange(1, c.size)


def _require(cond: bool, msg: str):
    if not cond:
        raise CurveError(msg)


def _linear(p):
    slope = float(p.get("slope", 1.0))
    c0 = float(p.get("C0", 1.0))
    return Curve(2, 1, c0, lambda s: np.vstack([np.full_like(s, c0), np.full_like(s, slope)]),
                 name=f"linear(slope={slope})", holder=(1.0, 0.0))


def _monomial(p):
    m = p.get("m", 1)
    _require(float(m) == int(m) and int(m) >= 0, f"monomial power must be a nonnegative integer, got {m}")
    m = int(m)
    c0 = float(p.get("C0", 1.0))
    return Curve(2, 1, c0, lambda s: np.vstack([np.full_like(s, c0), s**m]),
                 name=f"monomial(m={m})", holder=(1.0, float(m)))


def _polynomial(p):
    coeffs = p.get("coeffs")
    _require(coeffs is not None and len(coeffs) > 0, "polynomial preset needs non-empty 'coeffs'")
    dc = _polynomial_derivative(coeffs)
    c0 = float(p.get("C0", 1.0))
    lip = float(np.abs(_polynomial_derivative(dc)).sum())
    return Curve(2, 1, c0,
                 lambda s: np.vstack([np.full_like(s, c0), np.polynomial.polynomial.polyval(s, dc)]),
                 name=f"polynomial({list(coeffs)})", holder=(1.0, lip))


def _sine(p):
    # y(s) = amplitude * sin(2 pi freq s), so y'(s) = 2 pi freq amplitude cos(2 pi freq s)
    amp = float(p.get("amplitude", 1.0))
    freq = float(p.get("freq", 1.0))
    _require(freq > 0, f"sine frequency must be positive, got {freq}")
    w = 2.0 * math.pi * freq
    c0 = float(p.get("C0", 1.0))
    return Curve(2, 1, c0, lambda s: np.vstack([np.full_like(s, c0), amp * w * np.cos(w * s)]),
                 name=f"sine(amplitude={amp}, freq={freq})", holder=(1.0, abs(amp) * w * w))


def _helix(p):
    n = p.get("n", 1)
    _require(float(n) == int(n) and int(n) >= 1, f"helix turns must be a positive integer, got {n}")
    w = 2.0 * math.pi * int(n)
    return Curve(3, 1, 1.0,
                 lambda s: np.vstack([np.ones_like(s), -np.sin(w * s), np.cos(w * s)]),
                 name=f"helix(n={int(n)})", holder=(1.0, w))


def _holder_kink(p):
    alpha = float(p.get("alpha", 0.5))
    x0 = float(p.get("x0", 0.5))
    _require(0.0 < alpha <= 1.0, f"alpha must lie in (0, 1], got {alpha}")
    _require(0.0 <= x0 <= 1.0, f"x0 must lie in [0, 1], got {x0}")
    c0 = float(p.get("C0", 1.0))
    bps = (x0,) if 0.0 < x0 < 1.0 else ()
    return Curve(2, 1, c0, lambda s: np.vstack([np.full_like(s, c0), np.abs(s - x0) ** alpha]),
                 name=f"holder_kink(alpha={alpha}, x0={x0})", holder=(alpha, 1.0), breakpoints=bps)


def _zero(p):
    d = int(p.get("d", 2))
    return Curve(d, 1, 1.0, lambda s: np.vstack([np.ones_like(s)] + [np.zeros_like(s)] * (d - 1)),
                 name=f"zero(d={d})", holder=(1.0, 0.0))


PRESETS: dict[str, Callable[[Mapping], Curve]] = {
    "linear": _linear,
    "monomial": _monomial,
    "polynomial": _polynomial,
    "sine": _sine,
    "helix": _helix,
    "holder_kink": _holder_kink,
    "zero": _zero,
}


def make_preset(name: str, params: Mapping | None = None) -> Curve:
    """Build one of the analytic preset curves.

    ``linear``: (C0 s, slope s); ``monomial``: y'(s) = s**m;
    ``polynomial``: y(s) = sum coeffs[m] s**m; ``sine``:
    y(s) = amplitude sin(2 pi freq s); ``helix``: (t, cos(2 n pi t)/(2 n pi),
    sin(2 n pi t)/(2 n pi)); ``holder_kink``: y'(s) = |s - x0|**alpha;
    ``zero``: the straight line (t, 0, ..., 0) in R^d.
    """
    params = dict(params or {})
    try:
        builder = PRESETS[name]
    except KeyError:
        raise CurveError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    try:
        return builder(params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CurveError):
            raise
        raise CurveError(f"bad parameters for preset {name!r}: {exc}") from exc


def load_preset_config(path) -> Curve:
    """Read ``{"preset": "helix", "n": 3}`` style JSON."""
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict) or "preset" not in cfg:
        raise CurveError(f"{path}: expected a JSON object with a 'preset' key")
    name = cfg.pop("preset")
    return make_preset(name, cfg)


# ---------------------------------------------------------- combinations


def linear_combination(weights: Sequence[float], curves: Sequence[Curve]) -> Curve:
    """sum_m w_m gamma_m on the non-axial components, for curves with C0 = 1."""
    if not curves or len(weights) != len(curves):
        raise CurveError("need one weight per curve")
    ref = curves[0]
    for c in curves:
        if (c.d, c.axial_index) != (ref.d, ref.axial_index) or c.axial_speed != 1.0:
            raise CurveError("linear combinations need curves with equal (d, i) and C0 = 1")
    weights = [float(w) for w in weights]

    def deriv(s):
        return sum(w * c.derivative(s) for w, c in zip(weights, curves))

    bps = tuple(sorted({b for c in curves for b in c.breakpoints}))
    return Curve(ref.d, ref.axial_index, 1.0, deriv, name="combination", breakpoints=bps)


def scale_components(curve: Curve, factor: float) -> Curve:
    """Multiply every non-axial derivative component by ``factor``."""
    factor = float(factor)
    return Curve(curve.d, curve.axial_index, curve.axial_speed,
                 lambda s: factor * curve.derivative(s),
                 name=f"{factor}*{curve.name}", breakpoints=curve.breakpoints)


# ----------------------------------------------------------- diagnostics


def sup_norm_and_holder(curve: Curve, alpha: float, grid_size: int = 1001) -> tuple[float, float]:
    """Grid estimates of ``||gamma'||_inf`` and the alpha-Holder seminorm.

    Both are maxima over a uniform grid, hence lower bounds of the true
    norms.  Differences use the Euclidean norm of the full derivative
    vector.
    """
    if not 0.0 < alpha <= 1.0:
        raise CurveError(f"alpha must lie in (0, 1], got {alpha}")
    if grid_size < 2:
        raise CurveError("grid_size must be >= 2")
    s = np.linspace(0.0, 1.0, grid_size)
    g = curve.derivative(s).T  # (m, d)
    sup = float(np.linalg.norm(g, axis=1).max())
    holder = 0.0
    block = max(1, 4_000_000 // grid_size)
    for lo in range(0, grid_size, block):
        diff = np.linalg.norm(g[lo:lo + block, None, :] - g[None, :, :], axis=2)
        dist = np.abs(s[lo:lo + block, None] - s[None, :]) ** alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, diff / dist, 0.0)
        holder = max(holder, float(ratio.max()))
    return sup, holder


# ------------------------------------------------------- sampling / I-O

_GL_X, _GL_W = leggauss(8)


def sample_polyline(curve: Curve, n_vertices: int) -> Polyline:
    """Positions on a uniform grid, starting at the origin.

    Increments come from per-segment Gauss-Legendre integration of the
    derivative, so polynomial derivatives are integrated exactly.
    """
    if n_vertices < 2:
        raise CurveError("need at least 2 vertices")
    grid = np.linspace(0.0, 1.0, n_vertices)
    a, b = grid[:-1], grid[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    vals = curve.derivative(nodes.ravel()).reshape(curve.d, *nodes.shape)
    inc = np.einsum("dmq,q->md", vals, _GL_W) * half[:, None]
    # the axial coordinate is exactly linear
    inc[:, curve.axial_index - 1] = curve.axial_speed * (b - a)
    verts = np.vstack([np.zeros(curve.d), np.cumsum(inc, axis=0)])
    verts[:, curve.axial_index - 1] = curve.axial_speed * grid
    return Polyline(verts, grid)


def read_polyline_csv(path) -> Polyline:
    """CSV with header ``s,x1,...,xd``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise CurveError(f"{path}: empty polyline file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if header[0] != "s" or header[1:] != [f"x{m}" for m in range(1, d + 1)] or d < 1:
        raise CurveError(f"{path}: header must read s,x1,...,xd; got {','.join(header)}")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    if data.ndim != 2 or data.shape[1] != d + 1:
        raise CurveError(f"{path}: ragged rows")
    return Polyline(data[:, 1:], data[:, 0])


def write_polyline_csv(poly: Polyline, path, comments: Sequence[str] = ()) -> None:
    with open(Path(path), "w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s"] + [f"x{m}" for m in range(1, poly.d + 1)])
        for s, v in zip(poly.grid, poly.vertices):
            w.writerow([f"{s:.12g}"] + [f"{x:.12g}" for x in v])


def reparameterize_to_axial_linear(samples: Polyline, i: int) -> Curve:
    """Turn a polyline whose ``i``-th coordinate increases strictly into an
    axial-linear curve on [0, 1].

    The new parameter is ``s = (x_i - x_i(start)) / C0``; the inverse time
    change is piecewise linear, which is exact for polyline input.  The
    derivative is piecewise constant (right-continuous at vertices).
    """
    v = samples.vertices
    if not 1 <= i <= samples.d:
        raise CurveError(f"axial index {i} not in 1..{samples.d}")
    if len(samples) < 2:
        raise CurveError("need at least two vertices")
    xi = v[:, i - 1]
    steps = np.diff(xi)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        k = int(bad[0]) + 1
        raise CurveError(f"component x{i} is not strictly increasing at vertex {k} "
                         f"({xi[k - 1]!r} -> {xi[k]!r})")
    c0 = float(xi[-1] - xi[0])
    u = (xi - xi[0]) / c0
    u[-1] = 1.0
    slopes = np.diff(v, axis=0) / np.diff(u)[:, None]  # d x_j / d s on each segment
    d = samples.d
    nseg = slopes.shape[0]

    def deriv(s):
        idx = np.clip(np.searchsorted(u, s, side="right") - 1, 0, nseg - 1)
        return slopes[idx].T

    bps = tuple(float(x) for x in u[1:-1])
    return Curve(d, i, c0, deriv, name="reparameterized", breakpoints=bps)
