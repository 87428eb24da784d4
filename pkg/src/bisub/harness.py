"""Grid sweeps, verdicts, finite-difference cross-checks and space-form audits."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from . import submersion as sub
from .expr import DomainError, eval_jet
from .geometry import Grid, MetricSpec, OutOfDomain, min_leading_minor, orthonormality_residual
from .submersion import CURVATURE_KEYS, DATA_NAMES, FramedModel, SubmersionPoint, VerticalFieldModel

__all__ = [
    "Grid",
    "Tolerances",
    "CheckResult",
    "VerificationReport",
    "classify",
    "decide",
    "fd_crosscheck",
    "spaceform_audit",
]

VERDICTS = ("harmonic", "proper-biharmonic", "not-biharmonic", "inconclusive")


@dataclass(frozen=True)
class Tolerances:
    spd: float = 1e-12
    orthonormality: float = 1e-9
    adapted: float = 1e-9
    isometry: float = 1e-9
    unit: float = 1e-9
    jacobi: float = 1e-9
    harmonic: float = 1e-8
    biharmonic: float = 1e-7
    proper: float = 1e-3
    curvature: float = 1e-7
    invariance: float = 1e-8

    def updated(self, **values: float) -> Tolerances:
        unknown = set(values) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance names {sorted(unknown)}")
        return dataclasses.replace(self, **{k: float(v) for k, v in values.items()})

    def asdict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class CheckResult:
    """Worst value of one check over the grid and where it occurred.

    ``structural`` checks gate the verdict; the others feed the threshold ladder.
    For ``min``-type checks (``spd``, ``tension_min``) ``value`` is a minimum.
    """

    name: str
    value: float
    witness: tuple[float, float, float]
    tolerance: float | None
    passed: bool | None
    structural: bool = False

    def asdict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "witness": list(self.witness),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "structural": self.structural,
        }


@dataclass
class VerificationReport:
    model: str
    kind: str
    verdict: str
    reason: str
    checks: list[CheckResult]
    tolerances: dict
    grid: dict
    params: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def asdict(self) -> dict:
        return {
            "model": self.model,
            "kind": self.kind,
            "verdict": self.verdict,
            "reason": self.reason,
            "checks": [c.asdict() for c in self.checks],
            "tolerances": self.tolerances,
            "grid": self.grid,
            "params": dict(self.params),
            "wall_time": self.wall_time,
        }


def _worst(name, values, points, tol, *, structural=False, minimum=False) -> CheckResult:
    v = np.broadcast_to(np.asarray(values, dtype=float), points.shape[:-1]).ravel()
    idx = int(np.argmin(v) if minimum else np.argmax(v))
    val = float(v[idx])
    if tol is None:
        passed = None
    else:
        passed = bool(val > tol) if minimum else bool(val < tol)
    return CheckResult(name, val, tuple(float(c) for c in points.reshape(-1, 3)[idx]), tol, passed, structural)


def decide(checks: list[CheckResult], tols: Tolerances, declared_c: float | None = None) -> tuple[str, str]:
    """Verdict from check maxima alone: (verdict, reason)."""
    by = {c.name: c for c in checks}
    for c in checks:
        if c.structural and not c.passed:
            return "inconclusive", f"structural check {c.name} failed ({c.value:.3e})"
    tmax = by["tension"].value
    if "bitension" not in by:
        if tmax < tols.harmonic:
            return "harmonic", "fibers are geodesics on the grid"
        if declared_c is not None:
            return "not-biharmonic", "non-harmonic submersion from a space form cannot be biharmonic"
        return "inconclusive", "no adapted frame: biharmonicity undetermined"
    bmax = by["bitension"].value
    if tmax < tols.harmonic:
        if bmax < tols.biharmonic:
            return "harmonic", "tension vanishes on the grid"
        return "inconclusive", "tension vanishes but bitension does not"
    if bmax < tols.biharmonic:
        if tmax > tols.proper:
            return "proper-biharmonic", "bitension vanishes while tension does not"
        return "inconclusive", "bitension vanishes but tension is in the ambiguous band"
    return "not-biharmonic", "bitension does not vanish"


def _grid_info(grid: Grid, npts: int) -> dict:
    return {"ranges": [list(r) for r in grid.ranges], "points": npts}


def classify(model, grid: Grid | None = None, tols: Tolerances | None = None) -> VerificationReport:
    tols = tols or Tolerances()
    grid = grid or model.grid
    t0 = time.perf_counter()
    pts = grid.points()
    kind = "vertical-field" if isinstance(model, VerticalFieldModel) else "framed"
    checks: list[CheckResult] = []
    try:
        model.domain.check(pts)
        checks.append(_worst("spd", min_leading_minor(model, pts), pts, tols.spd, structural=True, minimum=True))
        if kind == "framed":
            checks += _framed_checks(model, pts, tols)
        else:
            checks.append(_worst("unit", sub.vertical_unit_residual(model, pts), pts, tols.unit, structural=True))
            h = np.linalg.norm(sub.fiber_mean_curvature(model, pts), axis=-1)
            checks.append(_worst("tension", h, pts, None))
            checks.append(_worst("tension_min", h, pts, None, minimum=True))
        verdict, reason = decide(checks, tols, model.curvature)
    except (DomainError, OutOfDomain) as exc:
        verdict, reason = "inconclusive", f"evaluation failed: {exc}"
    except sub.AdaptedFrameError as exc:
        verdict, reason = "inconclusive", str(exc)
    return VerificationReport(
        model=model.name,
        kind=kind,
        verdict=verdict,
        reason=reason,
        checks=checks,
        tolerances=tols.asdict(),
        grid=_grid_info(grid, len(pts)),
        params=dict(model.params),
        wall_time=time.perf_counter() - t0,
    )


def _framed_checks(m: FramedModel, pts, tols: Tolerances) -> list[CheckResult]:
    out = [_worst("orthonormality", orthonormality_residual(m, pts), pts, tols.orthonormality, structural=True)]
    sp = SubmersionPoint(m, pts, 3)
    out.append(_worst("adapted", sp.adaptedness_residual(), pts, tols.adapted, structural=True))
    if m.base is not None:
        out.append(_worst("base_isometry", sp.base_isometry_residual(), pts, tols.isometry, structural=True))
        out.append(_worst("base_structure", sp.base_structure_residual(), pts, tols.isometry, structural=True))
    out.append(_worst("jacobi", np.abs(sp.jacobi()), pts, tols.jacobi, structural=True))
    t1, t2 = sp.tension()
    tn = np.hypot(t1, t2)
    out.append(_worst("tension", tn, pts, None))
    out.append(_worst("tension_min", tn, pts, None, minimum=True))
    out.append(_worst("bitension", sp.bitension().norm, pts, None))
    return out


# --- finite-difference cross-check ----------------------------------------


def _frame_values(m: FramedModel, pts) -> np.ndarray:
    """Frame vectors at points as an array (..., 3 vectors, 3 comps)."""
    E = m.frame.jets(pts, m.params, 0)
    return np.stack(
        [np.stack(np.broadcast_arrays(*(E[i][a].coeffs[0] for a in range(3))), -1) for i in range(3)], -2
    )


def _flow(m: FramedModel, i: int, pts, t: float, steps: int = 4):
    """Integral curve of e_i from ``pts`` for time ``t`` (RK4)."""
    dt = t / steps
    p = pts
    for _ in range(steps):
        k1 = _frame_values(m, p)[..., i, :]
        k2 = _frame_values(m, p + 0.5 * dt * k1)[..., i, :]
        k3 = _frame_values(m, p + 0.5 * dt * k2)[..., i, :]
        k4 = _frame_values(m, p + dt * k3)[..., i, :]
        p = p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def _data_values(m: FramedModel, pts) -> np.ndarray:
    sp = _unchecked_point(m, pts, 1)
    return np.stack(np.broadcast_arrays(*(sp.data[k].value for k in DATA_NAMES)), -1)


def _unchecked_point(m: FramedModel, pts, order):
    # stencil points may straddle the modelling box; expressions still guard real poles
    free = dataclasses.replace(m, metric=dataclasses.replace(m.metric, domain=sub.Domain()))
    return SubmersionPoint(free, pts, order)


def fd_crosscheck(model, grid: Grid | None = None, h1: float = 1e-5, h2: float = 1e-3) -> float:
    """Worst deviation of jet frame derivatives from finite differences.

    First derivatives e_i(u) use a central difference of step ``h1``; second
    derivatives e_i(e_i(u)) a five-point stencil of step ``h2``. Both step along
    the integral curve of e_i, so the stencil measures e_i(e_i(u)) itself and
    not a second directional derivative. Deviation is ``|jet - fd| /
    max(|jet|, 1)``, over u in the integrability data.

    For vertical-field models the fiber mean curvature vector is checked
    against central differences of the unit field instead.
    """
    grid = grid or model.grid
    pts = grid.points()
    if isinstance(model, VerticalFieldModel):
        return _fd_vertical(model, pts, h1)
    m = model
    sp = SubmersionPoint(m, pts, 3)
    worst = 0.0
    for i in range(3):
        fwd1, bwd1 = _flow(m, i, pts, h1, 1), _flow(m, i, pts, -h1, 1)
        d1 = (_data_values(m, fwd1) - _data_values(m, bwd1)) / (2 * h1)
        u = {k: _data_values(m, _flow(m, i, pts, s * h2)) for k, s in (("p2", 2), ("p1", 1), ("m1", -1), ("m2", -2))}
        u0 = _data_values(m, pts)
        d2 = (-u["p2"] + 16 * u["p1"] - 30 * u0 + 16 * u["m1"] - u["m2"]) / (12 * h2 * h2)
        for n, name in enumerate(DATA_NAMES):
            j1 = sp.e(i + 1, sp.data[name]).value
            j2 = sp.e(i + 1, sp.e(i + 1, sp.data[name])).value
            for jet, fd in ((j1, d1[..., n]), (j2, d2[..., n])):
                dev = np.abs(jet - fd) / np.maximum(np.abs(jet), 1.0)
                worst = max(worst, float(np.max(dev)))
    return worst


def _fd_vertical(m: VerticalFieldModel, pts, h: float) -> float:
    """nabla_V V against central differences of V along itself (Euclidean charts only)."""
    if m.metric.strings() != MetricSpec.euclidean().strings():
        raise NotImplementedError("finite-difference check of vertical fields needs a Euclidean chart")

    def V(p):
        return np.stack(np.broadcast_arrays(*(eval_jet(c, p, m.params, 0).value for c in m.vertical)), -1)

    jet = sub.fiber_mean_curvature(m, pts)
    v = V(pts)
    fd = (V(pts + h * v) - V(pts - h * v)) / (2 * h)
    fd = fd - np.einsum("...a,...a->...", fd, v)[..., None] * v
    dev = np.abs(jet - fd) / np.maximum(np.abs(jet), 1.0)
    return float(np.max(dev))


# --- space-form audit -------------------------------------------------------


@dataclass
class AuditReport:
    model: str
    curvature: float
    entries: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def asdict(self) -> dict:
        return {
            "model": self.model,
            "curvature": self.curvature,
            "passed": self.passed,
            "entries": [e.asdict() for e in self.entries],
        }


def spaceform_audit(m: FramedModel, c: float, grid: Grid | None = None, tols: Tolerances | None = None) -> AuditReport:
    """Residuals of the frame curvature system against a constant curvature ``c``
    and of fiber-invariance of the integrability data."""
    tols = tols or Tolerances()
    grid = grid or m.grid
    pts = grid.points()
    sp = SubmersionPoint(m, pts, 3)
    curv = sp.curvature_from_data()
    target = sub.spaceform_targets(c)
    entries = [_worst(f"R{k}", np.abs(curv[k] - target[k]), pts, tols.curvature) for k in CURVATURE_KEYS]
    inv = sp.vertical_invariance()
    entries += [_worst(f"e3({k})", np.abs(v), pts, tols.invariance) for k, v in zip(DATA_NAMES, inv)]
    return AuditReport(m.name, float(c), entries)
