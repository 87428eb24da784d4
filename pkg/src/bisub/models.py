"""Built-in models: every concrete space and submersion worked out in the source,
plus the space-form controls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import DomainError, eval_jet, parse
from .geometry import Domain, FrameSpec, Grid, MetricSpec
from .jet import Jet
from .submersion import BaseSpec, FramedModel, VerticalFieldModel

POLE_TOL = 1e-12

# ln(beta) for the warped family; -2 ln|1 - e^t| is written as -ln((1 - e^t)^2)
# so one expression covers both sides of the pole.
LOG_BETA = "ln(c) + c1*x - ln((1 - exp(c1*x))^2) + b1*y - ln((1 - exp(b1*y))^2)"
PHI = "c1*(1 + exp(c1*x))/(1 - exp(c1*x))"


@dataclass(frozen=True)
class ModelCatalogEntry:
    name: str
    kind: str  # "framed" or "vertical-field"
    model: FramedModel | VerticalFieldModel
    provenance: str

    @property
    def grid(self) -> Grid:
        return self.model.grid


def _euclidean_projection() -> ModelCatalogEntry:
    m = FramedModel(
        name="euclidean-projection",
        metric=MetricSpec.euclidean(),
        frame=FrameSpec.from_strings([["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]),
        curvature=0.0,
        base=BaseSpec.from_strings(("x", "y"), {"11": "1", "12": "0", "22": "1"}, [["1", "0"], ["0", "1"]]),
        grid=Grid.box((-1, 1), (-1, 1), (-1, 1)),
    )
    return ModelCatalogEntry(m.name, "framed", m, "orthogonal projection R^3 -> R^2, space form c = 0")


def _hyperbolic_projection() -> ModelCatalogEntry:
    domain = Domain.box(z=(0.05, None))
    m = FramedModel(
        name="hyperbolic-projection",
        metric=MetricSpec.from_strings(
            {"xx": "1/z^2", "xy": "0", "xz": "0", "yy": "1/z^2", "yz": "0", "zz": "1/z^2"}, domain=domain
        ),
        frame=FrameSpec.from_strings([["z", "0", "0"], ["0", "0", "z"], ["0", "z", "0"]]),
        curvature=-1.0,
        base=BaseSpec.from_strings(
            ("x", "z"), {"11": "1/z^2", "12": "0", "22": "1/z^2"}, [["z", "0"], ["0", "z"]]
        ),
        grid=Grid.box((-1, 1), (-1, 1), (0.5, 2)),
    )
    return ModelCatalogEntry(
        m.name, "framed", m, "upper half-space H^3 -> H^2, (x, y, z) -> (x, z); space form c = -1"
    )


def _nil() -> ModelCatalogEntry:
    m = FramedModel(
        name="nil",
        metric=MetricSpec.from_strings(
            {"xx": "1", "xy": "0", "xz": "0", "yy": "1 + x^2", "yz": "-x", "zz": "1"}
        ),
        frame=FrameSpec.from_strings(
            [
                ["1", "0", "0"],
                ["0", "-x/sqrt(1 + x^2)", "-sqrt(1 + x^2)"],
                ["0", "1/sqrt(1 + x^2)", "0"],
            ]
        ),
        base=BaseSpec.from_strings(
            ("x", "z"), {"11": "1", "12": "0", "22": "1/(1 + x^2)"}, [["1", "0"], ["0", "-sqrt(1 + x^2)"]]
        ),
        grid=Grid.box((-2, 2), (-1, 1), (-1, 1)),
    )
    return ModelCatalogEntry(m.name, "framed", m, "Nil geometry projected to (x, z)")


def warped(c1: float = 1.0, b1: float = 1.0, c: float = 1.0) -> FramedModel:
    """dx^2 + dy^2 + beta^-2 dz^2 projected to (x, y), with ln beta built from phi."""
    domain = Domain.box(x=(0.1, 3), y=(0.1, 3), z=(-1, 1))
    names = ("c1", "b1", "c")
    L = LOG_BETA
    return FramedModel(
        name="warped",
        metric=MetricSpec.from_strings(
            {"xx": "1", "xy": "0", "xz": "0", "yy": "1", "yz": "0", "zz": f"exp(-2*({L}))"},
            params=names,
            domain=domain,
        ),
        frame=FrameSpec.from_strings([["1", "0", "0"], ["0", "1", "0"], ["0", "0", f"exp({L})"]], params=names),
        params={"c1": c1, "b1": b1, "c": c},
        curvature=None,
        base=BaseSpec.from_strings(("x", "y"), {"11": "1", "12": "0", "22": "1"}, [["1", "0"], ["0", "1"]]),
        grid=Grid.box((0.1, 3), (0.1, 3), (-1, 1)),
    )


def _warped() -> ModelCatalogEntry:
    m = warped()
    return ModelCatalogEntry(m.name, "framed", m, "warped product with phi phi' = phi'', proper biharmonic family")


def _helical() -> ModelCatalogEntry:
    r = "sqrt(1 + x^2 + y^2)"
    m = VerticalFieldModel(
        name="helical",
        metric=MetricSpec.euclidean(),
        vertical=tuple(parse(f"({c})/{r}") for c in ("-y", "x", "1")),
        curvature=0.0,
        grid=Grid.box((-1, 1), (-1, 1), (-1, 1)),
    )
    return ModelCatalogEntry(
        m.name, "vertical-field", m, "orbit space of the helical action (s,(z,t)) -> (e^{is}z, t+s)"
    )


_BUILDERS = {
    "euclidean-projection": _euclidean_projection,
    "hyperbolic-projection": _hyperbolic_projection,
    "nil": _nil,
    "warped": _warped,
    "helical": _helical,
}

NAMES = tuple(_BUILDERS)


def builtin(name: str, **params: float) -> ModelCatalogEntry:
    """Catalog entry by name; keyword arguments override model parameters."""
    try:
        entry = _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; valid names: {', '.join(NAMES)}") from None
    if params:
        entry = ModelCatalogEntry(entry.name, entry.kind, entry.model.with_params(**params), entry.provenance)
    return entry


def catalog() -> list[ModelCatalogEntry]:
    return [builtin(n) for n in NAMES]


def _check_pole(c1: float, x):
    gap = np.abs(1.0 - np.exp(c1 * np.asarray(x, dtype=float)))
    if np.any(gap < POLE_TOL):
        raise DomainError("too close to the pole of phi", PHI, (float(np.ravel(x)[np.argmin(np.ravel(gap))]), 0, 0))


def phi(c1: float, x, order: int = 2) -> Jet:
    _check_pole(c1, x)
    x = np.asarray(x, dtype=float)
    pts = np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=-1)
    return eval_jet(parse(PHI, ["c1"]), pts, {"c1": c1}, order)


def phi_ode_residual(c1: float, x, shift: float = 0.0):
    """phi phi' - phi'' for phi(x) = c1 (1 + e^{c1 x}) / (1 - e^{c1 x}) (+ ``shift``)."""
    j = phi(c1, x) + shift
    return j.value * j.partial((1, 0, 0)) - j.partial((2, 0, 0))


def warped_log_beta(c1: float, b1: float, p, c: float = 1.0, order: int = 3) -> Jet:
    p = np.asarray(p, dtype=float)
    _check_pole(c1, p[..., 0])
    _check_pole(b1, p[..., 1])
    return eval_jet(parse(LOG_BETA, ["c1", "b1", "c"]), p, {"c1": c1, "b1": b1, "c": c}, order)
