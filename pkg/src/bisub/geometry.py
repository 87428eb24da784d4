"""Pointwise Riemannian geometry of a single 3-chart, computed in a frame.

Frame indices in the public functions are 1-based so that ``R_{1313}`` reads
as ``curvature_component(m, 1, 3, 1, 3, p)``. Internally everything is 0-based.

All point arguments accept either one ``(x, y, z)`` triple or an array with a
trailing dimension of 3; results then carry the leading batch shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expr import COORDS, Expr, eval_jet, parse, to_string
from .jet import Jet

METRIC_KEYS = ("xx", "xy", "xz", "yy", "yz", "zz")
_PAIRS = {"xx": (0, 0), "xy": (0, 1), "xz": (0, 2), "yy": (1, 1), "yz": (1, 2), "zz": (2, 2)}


class OutOfDomain(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """Closed coordinate box; ``None`` bounds are unbounded."""

    bounds: tuple[tuple[float | None, float | None], ...] = ((None, None),) * 3

    @classmethod
    def box(cls, **ranges) -> Domain:
        return cls(tuple(tuple(ranges.get(c, (None, None))) for c in COORDS))

    def contains(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        ok = np.all(np.isfinite(p), axis=-1)
        for i, (lo, hi) in enumerate(self.bounds):
            if lo is not None:
                ok &= p[..., i] >= lo
            if hi is not None:
                ok &= p[..., i] <= hi
        return ok

    def check(self, point) -> None:
        ok = self.contains(point)
        if not np.all(ok):
            p = np.asarray(point, dtype=float)
            bad = p if p.ndim == 1 else p.reshape(-1, 3)[np.flatnonzero(~ok.ravel())[0]]
            raise OutOfDomain(f"point {tuple(float(v) for v in bad)} outside chart domain {self.describe()}")

    def describe(self) -> str:
        parts = []
        for c, (lo, hi) in zip(COORDS, self.bounds):
            if lo is None and hi is None:
                continue
            lo_s = "-inf" if lo is None else f"{lo:g}"
            hi_s = "inf" if hi is None else f"{hi:g}"
            parts.append(f"{c} in [{lo_s}, {hi_s}]")
        return ", ".join(parts) or "all of R^3"


def _as_expr(e, params) -> Expr:
    return parse(e, params) if isinstance(e, str) else e


@dataclass(frozen=True)
class MetricSpec:
    """Symmetric metric in the coordinate basis, one expression per upper entry."""

    entries: Mapping[str, Expr]
    domain: Domain = field(default_factory=Domain)

    @classmethod
    def from_strings(cls, entries: Mapping[str, str], params=(), domain: Domain | None = None):
        missing = set(METRIC_KEYS) - set(entries)
        if missing:
            raise ValueError(f"metric is missing entries {sorted(missing)}")
        return cls({k: _as_expr(entries[k], params) for k in METRIC_KEYS}, domain or Domain())

    @classmethod
    def euclidean(cls, domain: Domain | None = None) -> MetricSpec:
        one = {"xx": "1", "yy": "1", "zz": "1"}
        return cls.from_strings({k: one.get(k, "0") for k in METRIC_KEYS}, domain=domain)

    def jets(self, point, params, order: int) -> list[list[Jet]]:
        g = [[None] * 3 for _ in range(3)]
        for k, (a, b) in _PAIRS.items():
            g[a][b] = g[b][a] = eval_jet(self.entries[k], point, params, order)
        return g

    def strings(self) -> dict[str, str]:
        return {k: to_string(self.entries[k]) for k in METRIC_KEYS}


@dataclass(frozen=True)
class FrameSpec:
    """Three vector fields, each given by coordinate-basis component expressions.

    ``vertical`` is the 1-based index of the vertical member (always 3 for
    frames adapted to a submersion).
    """

    vectors: tuple[tuple[Expr, Expr, Expr], ...]
    vertical: int = 3

    @classmethod
    def from_strings(cls, vectors: Sequence[Sequence[str]], params=(), vertical: int = 3):
        if len(vectors) != 3 or any(len(v) != 3 for v in vectors):
            raise ValueError("a frame needs three vectors of three components")
        return cls(tuple(tuple(_as_expr(c, params) for c in v) for v in vectors), vertical)

    def jets(self, point, params, order: int) -> list[list[Jet]]:
        return [[eval_jet(c, point, params, order) for c in v] for v in self.vectors]

    def strings(self) -> list[list[str]]:
        return [[to_string(c) for c in v] for v in self.vectors]


@dataclass(frozen=True)
class FrameVector:
    """Components of a vector in the frame basis {e1, e2, e3}."""

    c1: float | np.ndarray
    c2: float | np.ndarray
    c3: float | np.ndarray

    def __iter__(self):
        return iter((self.c1, self.c2, self.c3))


# --- jet-level machinery ---------------------------------------------------


def inner(g, X, Y) -> Jet:
    out = None
    for a in range(3):
        for b in range(3):
            t = g[a][b] * X[a] * Y[b]
            out = t if out is None else out + t
    return out


def apply(X, u: Jet) -> Jet:
    """Directional derivative X(u) = sum_a X^a d_a u."""
    return X[0] * u.diff(0) + X[1] * u.diff(1) + X[2] * u.diff(2)


def coord_bracket(X, Y) -> list[Jet]:
    return [apply(X, Y[b]) - apply(Y, X[b]) for b in range(3)]


def koszul(g, X, Y, Z) -> Jet:
    """g(nabla_X Y, Z) for arbitrary vector fields given as coordinate-component jets."""
    two = (
        apply(X, inner(g, Y, Z))
        + apply(Y, inner(g, X, Z))
        - apply(Z, inner(g, X, Y))
        + inner(g, coord_bracket(X, Y), Z)
        - inner(g, coord_bracket(X, Z), Y)
        - inner(g, coord_bracket(Y, Z), X)
    )
    return two * 0.5


class LocalFrame:
    """Jets of a metric and orthonormal frame over a batch of points.

    Derived quantities are cached; each loses jet order as it takes
    derivatives (brackets and connection one order, curvature two).
    """

    def __init__(self, metric: list[list[Jet]], frame: list[list[Jet]]):
        self.g = metric
        self.E = frame
        self.order = min(j.order for v in frame for j in v)
        self._conn: dict = {}
        self._brk: dict = {}

    def e(self, i: int, u: Jet) -> Jet:
        """Frame derivative e_i(u), 0-based index."""
        return apply(self.E[i], u)

    def inner_frame(self, i: int, j: int) -> Jet:
        return inner(self.g, self.E[i], self.E[j])

    def bracket(self, i: int, j: int) -> tuple[Jet, Jet, Jet]:
        """Frame components of [e_i, e_j]."""
        key = (i, j)
        if key not in self._brk:
            b = coord_bracket(self.E[i], self.E[j])
            self._brk[key] = tuple(inner(self.g, b, self.E[k]) for k in range(3))
        return self._brk[key]

    def conn(self, i: int, j: int, k: int) -> Jet:
        """<nabla_{e_i} e_j, e_k>."""
        key = (i, j, k)
        if key not in self._conn:
            self._conn[key] = koszul(self.g, self.E[i], self.E[j], self.E[k])
        return self._conn[key]

    def nabla_ii(self, i: int, u: Jet) -> Jet:
        """(nabla_{e_i} e_i)(u)."""
        out = self.conn(i, i, 0) * self.e(0, u)
        for k in (1, 2):
            out = out + self.conn(i, i, k) * self.e(k, u)
        return out

    def laplacian(self, u: Jet) -> Jet:
        """sum_i e_i e_i u - (nabla_{e_i} e_i) u."""
        out = None
        for i in range(3):
            t = self.e(i, self.e(i, u)) - self.nabla_ii(i, u)
            out = t if out is None else out + t
        return out

    def riemann(self, i: int, j: int, k: int, l: int) -> Jet:
        """<R(e_i, e_j) e_k, e_l> with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]."""
        c = self.bracket(i, j)
        out = self.e(i, self.conn(j, k, l)) - self.e(j, self.conn(i, k, l))
        for m in range(3):
            out = out + self.conn(j, k, m) * self.conn(i, m, l) - self.conn(i, k, m) * self.conn(j, m, l)
            out = out - c[m] * self.conn(m, k, l)
        return out

    def curvature(self, i: int, j: int, k: int, l: int) -> Jet:
        """R_ijkl = -<R(e_i, e_j) e_k, e_l>."""
        return -self.riemann(i, j, k, l)


def local_frame(m, point, order: int = 3) -> LocalFrame:
    """Build the jet context of model ``m`` (anything with metric/frame/params/domain)."""
    m.domain.check(point)
    return LocalFrame(m.metric.jets(point, m.params, order), m.frame.jets(point, m.params, order))


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid: per-coordinate ``(lo, hi, count)``.

    ``exclude`` optionally maps an (N, 3) point array to a boolean mask of
    points to drop (singular loci inside the box).
    """

    ranges: tuple[tuple[float, float, int], ...]
    exclude: object = None

    @classmethod
    def box(cls, x, y, z, n: int | Sequence[int] = 9, exclude=None) -> Grid:
        ns = (n, n, n) if isinstance(n, int) else tuple(n)
        return cls(tuple((float(r[0]), float(r[1]), int(k)) for r, k in zip((x, y, z), ns)), exclude)

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(r[2] for r in self.ranges)

    def with_counts(self, counts: Sequence[int]) -> Grid:
        return Grid(tuple((lo, hi, int(n)) for (lo, hi, _), n in zip(self.ranges, counts)), self.exclude)

    def refined(self) -> Grid:
        return self.with_counts([2 * n for n in self.counts])

    def points(self) -> np.ndarray:
        axes = [np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)]) for lo, hi, n in self.ranges]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        if self.exclude is not None:
            pts = pts[~np.asarray(self.exclude(pts), dtype=bool)]
        if len(pts) == 0:
            raise ValueError("grid has no points")
        return pts


# --- public operations -----------------------------------------------------


def metric_at(m: MetricSpec, point, params: Mapping[str, float] | None = None) -> np.ndarray:
    """3x3 metric matrix at one point; raises on out-of-domain or non-SPD."""
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise ValueError("metric_at takes a single point")
    m.domain.check(p)
    g = m.jets(p, params or {}, 0)
    G = np.array([[g[a][b].value for b in range(3)] for a in range(3)])
    minors = [np.linalg.det(G[:k, :k]) for k in (1, 2, 3)]
    if min(minors) <= 1e-12:
        raise NotPositiveDefinite(f"metric not positive definite at {tuple(p)}: leading minors {minors}")
    return G


def _vector_jets(m, X, point, order: int, lf: LocalFrame):
    if isinstance(X, int):
        return lf.E[X - 1]
    return [eval_jet(_as_expr(c, m.params), point, m.params, order) for c in X]


def lie_bracket(m, X, Y, point) -> FrameVector:
    """[X, Y] at ``point`` in the frame of ``m``.

    ``X`` and ``Y`` are 1-based frame indices or sequences of three component
    expressions (strings or parsed) in the coordinate basis.
    """
    lf = local_frame(m, point, order=1)
    Xj = _vector_jets(m, X, point, 1, lf)
    Yj = _vector_jets(m, Y, point, 1, lf)
    b = coord_bracket(Xj, Yj)
    return FrameVector(*(inner(lf.g, b, lf.E[k]).value for k in range(3)))


def connection_coeff(m, i: int, j: int, k: int, point):
    """<nabla_{e_i} e_j, e_k> by the Koszul formula (1-based indices)."""
    return local_frame(m, point, order=1).conn(i - 1, j - 1, k - 1).value


def curvature_component(m, i: int, j: int, k: int, l: int, point):
    """R_ijkl = -<R(e_i,e_j)e_k, e_l> (1-based indices)."""
    return local_frame(m, point, order=2).curvature(i - 1, j - 1, k - 1, l - 1).value


def orthonormality_residual(m, point):
    """max_ij |g(e_i, e_j) - delta_ij| at each point."""
    lf = local_frame(m, point, order=0)
    res = [np.abs(lf.inner_frame(i, j).value - float(i == j)) for i in range(3) for j in range(i, 3)]
    return np.max(np.stack(np.broadcast_arrays(*res)), axis=0)


def min_leading_minor(m, point):
    p = np.asarray(point, dtype=float)
    g = m.metric.jets(p, m.params, 0)
    G = np.stack([np.stack(np.broadcast_arrays(*[g[a][b].coeffs[0] for b in range(3)]), -1) for a in range(3)], -2)
    return np.min(np.stack([np.linalg.det(G[..., :k, :k]) for k in (1, 2, 3)]), axis=0)
