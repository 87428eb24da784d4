"""Riemannian submersions M^3 -> N^2 described by an adapted orthonormal frame.

The frame {e1, e2, e3} has e3 vertical and e1, e2 basic. Its brackets

    [e1, e3] = kappa1 e3,   [e2, e3] = kappa2 e3,
    [e1, e2] = f1 e1 + f2 e2 - 2 sigma e3

define the integrability data (f1, f2, kappa1, kappa2, sigma), from which the
tension, the bitension residual system and the curvature of M along the
frame are all closed-form expressions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import geometry
from .expr import COORDS, Expr, eval_jet, free_names, parse, to_string
from .geometry import Domain, FrameSpec, Grid, LocalFrame, MetricSpec, coord_bracket, inner, koszul
from .jet import Jet

DATA_NAMES = ("f1", "f2", "kappa1", "kappa2", "sigma")
CURVATURE_KEYS = ("1312", "1313", "1323", "1212", "1223", "2313", "2323")

ADAPTED_TOL = 1e-9
SIMPLIFIED_KAPPA2_TOL = 1e-8
ROTATION_DEGENERATE = 1e-16
ROTATION_INVARIANCE_TOL = 1e-8


class AdaptedFrameError(ValueError):
    """The frame is not adapted: some [e_i, e3] has a horizontal component."""


class PreconditionError(ValueError):
    pass


class RotationRefused(ValueError):
    """kappa1, kappa2 vary along fibers, so no rotation descends from the base."""


# --- model types -----------------------------------------------------------


@dataclass(frozen=True)
class BaseSpec:
    """Base surface data in two of the chart coordinates.

    The submersion is the coordinate projection onto ``coords``. The base
    metric ``h`` is keyed ``"11", "12", "22"`` and the base frame ``frame``
    holds two vectors of two components, all in the base coordinates.
    """

    coords: tuple[str, str]
    metric: Mapping[str, Expr]
    frame: tuple[tuple[Expr, Expr], tuple[Expr, Expr]]

    @classmethod
    def from_strings(cls, coords, metric: Mapping[str, str], frame, params=()) -> BaseSpec:
        coords = tuple(coords)
        if len(coords) != 2 or not set(coords) <= set(COORDS) or coords[0] == coords[1]:
            raise ValueError(f"base coordinates must be two distinct chart coordinates, got {coords}")
        h = {k: parse(metric[k], params) if isinstance(metric[k], str) else metric[k] for k in ("11", "12", "22")}
        fr = tuple(tuple(parse(c, params) if isinstance(c, str) else c for c in v) for v in frame)
        if len(fr) != 2 or any(len(v) != 2 for v in fr):
            raise ValueError("base frame needs two vectors of two components")
        dropped = set(COORDS) - set(coords)
        for e in list(h.values()) + [c for v in fr for c in v]:
            if free_names(e) & dropped:
                raise ValueError(f"base expression {to_string(e)!r} depends on fiber coordinate {dropped}")
        return cls(coords, h, fr)

    @property
    def axes(self) -> tuple[int, int]:
        return tuple(COORDS.index(c) for c in self.coords)

    def metric_jets(self, point, params, order):
        """Base metric embedded as a 3x3 matrix with zero fiber row/column."""
        zero = Jet.constant(0.0, order, np.asarray(point).shape[:-1])
        h = [[zero] * 3 for _ in range(3)]
        a, b = self.axes
        h11, h12, h22 = (eval_jet(self.metric[k], point, params, order) for k in ("11", "12", "22"))
        h[a][a], h[a][b], h[b][a], h[b][b] = h11, h12, h12, h22
        return h

    def frame_jets(self, point, params, order):
        zero = Jet.constant(0.0, order, np.asarray(point).shape[:-1])
        out = []
        for v in self.frame:
            comps = [zero] * 3
            for ax, c in zip(self.axes, v):
                comps[ax] = eval_jet(c, point, params, order)
            out.append(comps)
        return out

    def strings(self) -> dict:
        return {
            "coordinates": list(self.coords),
            "metric": {k: to_string(v) for k, v in self.metric.items()},
            "frame": {f"e{i + 1}": [to_string(c) for c in v] for i, v in enumerate(self.frame)},
        }


@dataclass(frozen=True)
class FramedModel:
    """A chart metric with an adapted orthonormal frame (e3 vertical)."""

    name: str
    metric: MetricSpec
    frame: object  # FrameSpec or any provider with .jets(point, params, order)
    params: Mapping[str, float] = field(default_factory=dict)
    curvature: float | None = None
    base: BaseSpec | None = None
    grid: Grid | None = None

    @property
    def domain(self) -> Domain:
        return self.metric.domain

    def with_params(self, **values: float) -> FramedModel:
        unknown = set(values) - set(self.params)
        if unknown:
            raise KeyError(f"model {self.name!r} has no parameters {sorted(unknown)}")
        return dataclasses.replace(self, params={**self.params, **values})


@dataclass(frozen=True)
class VerticalFieldModel:
    """A chart metric with only a unit vertical field; tension-level checks only."""

    name: str
    metric: MetricSpec
    vertical: tuple[Expr, Expr, Expr]
    params: Mapping[str, float] = field(default_factory=dict)
    curvature: float | None = None
    grid: Grid | None = None

    @property
    def domain(self) -> Domain:
        return self.metric.domain

    def with_params(self, **values: float) -> VerticalFieldModel:
        unknown = set(values) - set(self.params)
        if unknown:
            raise KeyError(f"model {self.name!r} has no parameters {sorted(unknown)}")
        return dataclasses.replace(self, params={**self.params, **values})


@dataclass(frozen=True)
class IntegrabilityData:
    f1: float | np.ndarray
    f2: float | np.ndarray
    kappa1: float | np.ndarray
    kappa2: float | np.ndarray
    sigma: float | np.ndarray

    def astuple(self):
        return (self.f1, self.f2, self.kappa1, self.kappa2, self.sigma)


class BitensionResidual(NamedTuple):
    r1: float | np.ndarray
    r2: float | np.ndarray

    @property
    def norm(self):
        return np.hypot(self.r1, self.r2)


# --- jet-level evaluation at a batch of points ----------------------------


class SubmersionPoint:
    """All submersion quantities of a framed model at a batch of points.

    Jets are built once at ``order`` (3 suffices for the bitension) and every
    quantity below is derived from them on demand.
    """

    def __init__(self, m: FramedModel, point, order: int = 3):
        self.model = m
        self.point = np.asarray(point, dtype=float)
        self.lf: LocalFrame = geometry.local_frame(m, self.point, order)
        b13 = self.lf.bracket(0, 2)
        b23 = self.lf.bracket(1, 2)
        b12 = self.lf.bracket(0, 1)
        self._adapt = (b13[0], b13[1], b23[0], b23[1])
        self.data: dict[str, Jet] = {
            "f1": b12[0],
            "f2": b12[1],
            "kappa1": b13[2],
            "kappa2": b23[2],
            "sigma": b12[2] * -0.5,
        }

    def e(self, i: int, u: Jet) -> Jet:
        """Frame derivative, 1-based."""
        return self.lf.e(i - 1, u)

    def __getattr__(self, name):
        data = self.__dict__.get("data")
        if data is not None and name in data:
            return data[name]
        raise AttributeError(name)

    def values(self) -> IntegrabilityData:
        return IntegrabilityData(*(self.data[k].value for k in DATA_NAMES))

    def adaptedness_residual(self):
        """max |horizontal part of [e1,e3], [e2,e3]|, with the worst bracket named."""
        comps = np.stack(np.broadcast_arrays(*(np.abs(j.value) for j in self._adapt)))
        return np.max(comps, axis=0)

    def check_adapted(self, tol: float = ADAPTED_TOL) -> None:
        labels = ("[e1,e3]", "[e1,e3]", "[e2,e3]", "[e2,e3]")
        for lab, j in zip(labels, self._adapt):
            v = np.abs(j.value)
            if np.any(v > tol):
                raise AdaptedFrameError(
                    f"{lab} is not vertical: horizontal component {float(np.max(v)):.3e} > {tol:g}"
                )

    def tension(self):
        return (-self.kappa1.value, -self.kappa2.value)

    def gauss_curvature(self) -> Jet:
        f1, f2 = self.f1, self.f2
        return -(self.e(2, f1) - self.e(1, f2) + f1 * f1 + f2 * f2)

    def bitension(self) -> BitensionResidual:
        f1, f2, k1, k2 = self.f1, self.f2, self.kappa1, self.kappa2
        e = self.e
        q = -self.gauss_curvature() + f1 * f1 + f2 * f2
        lap = self.lf.laplacian
        r1 = (
            -lap(k1)
            - f1 * e(1, k2) - e(1, k2 * f1) - f2 * e(2, k2) - e(2, k2 * f2)
            + k1 * k2 * f1 + k2 * k2 * f2 + k1 * q
        )
        r2 = (
            -lap(k2)
            + f1 * e(1, k1) + e(1, k1 * f1) + f2 * e(2, k1) + e(2, k1 * f2)
            - k1 * k2 * f2 - k1 * k1 * f1 + k2 * q
        )
        return BitensionResidual(r1.value, r2.value)

    def bitension_simplified(self) -> BitensionResidual:
        k2 = np.abs(self.kappa2.value)
        if np.any(k2 >= SIMPLIFIED_KAPPA2_TOL):
            raise PreconditionError(f"kappa2 not negligible: |kappa2| = {float(np.max(k2)):.3e}")
        f1, f2, k1 = self.f1, self.f2, self.kappa1
        e = self.e
        r1 = -self.lf.laplacian(k1) + k1 * (-self.gauss_curvature() + f1 * f1 + f2 * f2)
        r2 = f1 * e(1, k1) + e(1, k1 * f1) + f2 * e(2, k1) + e(2, k1 * f2) - k1 * k1 * f1
        return BitensionResidual(r1.value, r2.value)

    def jacobi(self):
        f1, f2, k1, k2, s = (self.data[k] for k in DATA_NAMES)
        e = self.e
        return (2.0 * e(3, s) + k1 * f1 + k2 * f2 + e(2, k1) - e(1, k2)).value

    def curvature_from_data(self) -> dict:
        f1, f2, k1, k2, s = (self.data[k] for k in DATA_NAMES)
        e = self.e
        out = {
            "1312": -(e(1, s) - 2.0 * k1 * s),
            "1313": -(-e(1, k1) - s * s + k1 * k1 - k2 * f1),
            "1323": -(-e(1, k2) + e(3, s) + k1 * f1 + k1 * k2),
            "1212": -(e(2, f1) - e(1, f2) + f1 * f1 + f2 * f2 + 3.0 * s * s),
            "1223": -(e(2, s) - 2.0 * k2 * s),
            "2313": -(-e(2, k1) - e(3, s) - k2 * f2 + k1 * k2),
            "2323": -(-s * s - e(2, k2) + k1 * f2 + k2 * k2),
        }
        return {k: v.value for k, v in out.items()}

    def curvature_from_frame(self) -> dict:
        return {k: self.lf.curvature(*(int(c) - 1 for c in k)).value for k in CURVATURE_KEYS}

    def vertical_invariance(self):
        return tuple(self.e(3, self.data[k]).value for k in DATA_NAMES)

    def fiber_mean_curvature(self):
        return _fiber_mean_curvature(self.lf.g, self.lf.E[2], self.point)

    # base-side checks, only with base data

    def base_isometry_residual(self):
        b = self.model.base
        params = self.model.params
        eps = b.frame_jets(self.point, params, 0)
        res = []
        for i in range(2):
            for ax in b.axes:
                res.append(np.abs(self.lf.E[i][ax].value - eps[i][ax].value))
        for ax in b.axes:
            res.append(np.abs(self.lf.E[2][ax].value))
        h = b.metric_jets(self.point, params, 0)
        for i in range(2):
            for j in range(i, 2):
                res.append(np.abs(inner(h, eps[i], eps[j]).value - float(i == j)))
        return np.max(np.stack(np.broadcast_arrays(*res)), axis=0)

    def base_structure_residual(self):
        """|f_i - F_i o pi| with [eps1, eps2] = F1 eps1 + F2 eps2 computed on the base."""
        b = self.model.base
        params = self.model.params
        eps = b.frame_jets(self.point, params, 1)
        h = b.metric_jets(self.point, params, 1)
        br = coord_bracket(eps[0], eps[1])
        F1 = inner(h, br, eps[0]).value
        F2 = inner(h, br, eps[1]).value
        return np.maximum(np.abs(self.f1.value - F1), np.abs(self.f2.value - F2))


def _fiber_mean_curvature(g, V, point):
    """Horizontal part of nabla_V V as a coordinate vector, via Koszul against coordinate fields."""
    batch = np.asarray(point).shape[:-1]
    order = V[0].order
    unit = [[Jet.constant(float(a == b), order, batch) for a in range(3)] for b in range(3)]
    lower = np.stack(np.broadcast_arrays(*(koszul(g, V, V, unit[b]).value for b in range(3))), axis=-1)
    G = np.stack(
        [np.stack(np.broadcast_arrays(*(g[a][b].coeffs[0] for b in range(3))), -1) for a in range(3)], -2
    )
    vec = np.linalg.solve(G, lower[..., None])[..., 0]
    v = np.stack(np.broadcast_arrays(*(V[a].coeffs[0] for a in range(3))), axis=-1)
    gv = np.einsum("...ab,...b->...a", G, v)
    along = np.einsum("...a,...a->...", vec, gv) / np.einsum("...a,...a->...", v, gv)
    return vec - along[..., None] * v


# --- rotation ----------------------------------------------------------------


class RotatedFrame:
    """e1' = cos t e1 + sin t e2, e2' = -sin t e1 + cos t e2, e3' = e3 with t = atan2(kappa2, kappa1).

    Evaluating at jet order ``n`` needs the original frame at order ``n + 1``.
    Where kappa1^2 + kappa2^2 <= 1e-16 the rotation is the identity.
    """

    def __init__(self, model: FramedModel):
        self.model = model

    def jets(self, point, params, order: int):
        m = self.model if params == self.model.params else dataclasses.replace(self.model, params=params)
        sp = SubmersionPoint(m, point, order + 1)
        k1 = Jet(sp.kappa1.coeffs.copy(), sp.kappa1.order)
        k2 = Jet(sp.kappa2.coeffs.copy(), sp.kappa2.order)
        degenerate = (k1.coeffs[0] ** 2 + k2.coeffs[0] ** 2) <= ROTATION_DEGENERATE
        if np.any(degenerate):
            k1.coeffs[:, degenerate] = 0.0
            k2.coeffs[:, degenerate] = 0.0
            k1.coeffs[0, degenerate] = 1.0
        r = (k1 * k1 + k2 * k2).sqrt()
        c, s = k1 / r, k2 / r
        E = sp.lf.E
        e1 = [c * E[0][a] + s * E[1][a] for a in range(3)]
        e2 = [-s * E[0][a] + c * E[1][a] for a in range(3)]
        e3 = [E[2][a].truncate(order) for a in range(3)]
        return [e1, e2, e3]


# --- public pointwise operations -------------------------------------------


def _point(m, p, order=3) -> SubmersionPoint:
    return SubmersionPoint(m, p, order)


def integrability_data(m: FramedModel, p) -> IntegrabilityData:
    sp = _point(m, p, order=1)
    sp.check_adapted()
    return sp.values()


def tension(m: FramedModel, p):
    """Components of tau(pi) along (eps1, eps2)."""
    return _point(m, p, order=1).tension()


def fiber_mean_curvature(m, p) -> np.ndarray:
    """Horizontal part of nabla_{e3} e3 in coordinates; its norm is |tau(pi)|."""
    p = np.asarray(p, dtype=float)
    m.domain.check(p)
    g = m.metric.jets(p, m.params, 1)
    if isinstance(m, VerticalFieldModel):
        V = [eval_jet(c, p, m.params, 1) for c in m.vertical]
    else:
        V = m.frame.jets(p, m.params, 1)[2]
    return _fiber_mean_curvature(g, V, p)


def vertical_unit_residual(m: VerticalFieldModel, p):
    p = np.asarray(p, dtype=float)
    m.domain.check(p)
    g = m.metric.jets(p, m.params, 0)
    V = [eval_jet(c, p, m.params, 0) for c in m.vertical]
    return np.abs(inner(g, V, V).value - 1.0)


def gauss_curvature_base(m: FramedModel, p):
    return _point(m, p, order=2).gauss_curvature().value


def bitension(m: FramedModel, p) -> BitensionResidual:
    return _point(m, p).bitension()


def bitension_simplified(m: FramedModel, p) -> BitensionResidual:
    return _point(m, p).bitension_simplified()


def jacobi_residual(m: FramedModel, p):
    return _point(m, p, order=2).jacobi()


def curvature_from_data(m: FramedModel, p) -> dict:
    """The seven curvature components along the frame, written in integrability data."""
    return _point(m, p, order=2).curvature_from_data()


def vertical_invariance(m: FramedModel, p):
    """e3 of (f1, f2, kappa1, kappa2, sigma)."""
    return _point(m, p, order=2).vertical_invariance()


def rotate_frame(m: FramedModel, grid: Grid | None = None) -> FramedModel:
    """Rotate e1, e2 so that kappa2 vanishes and kappa1 = |(kappa1, kappa2)|.

    Refuses when kappa1 or kappa2 vary along fibers on ``grid`` (default: the
    model grid), since the rotation angle would not be basic.
    """
    grid = grid or m.grid
    if grid is not None:
        pts = grid.points()
        inv = _point(m, pts, order=2).vertical_invariance()
        worst = max(float(np.max(np.abs(inv[2]))), float(np.max(np.abs(inv[3]))))
        if worst > ROTATION_INVARIANCE_TOL:
            raise RotationRefused(f"kappa varies along fibers: max |e3(kappa)| = {worst:.3e}")
    return dataclasses.replace(m, name=f"{m.name}-rotated", frame=RotatedFrame(m), base=None)


def theorem33_identities(m: FramedModel, p):
    """Residuals of kappa1^2 = 3 sigma^2 - 3c, 7 sigma^2 - c and 15 sigma^2 - c.

    For a proper biharmonic submersion from a space form all three would have
    to vanish with kappa1 != 0, which forces kappa1 = sigma = c = 0.
    """
    if m.curvature is None:
        raise PreconditionError(f"model {m.name!r} declares no constant curvature c")
    c = m.curvature
    d = integrability_data(m, p)
    k1sq, s2 = np.asarray(d.kappa1) ** 2, np.asarray(d.sigma) ** 2
    return (k1sq - (3 * s2 - 3 * c), k1sq - (7 * s2 - c), k1sq - (15 * s2 - c))


def spaceform_targets(c: float) -> dict:
    return dict(zip(CURVATURE_KEYS, (0.0, c, 0.0, c, 0.0, 0.0, c)))
