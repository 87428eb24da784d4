import dataclasses

import numpy as np
import pytest

from bisub import harness, models
from bisub import submersion as sub
from bisub.geometry import FrameSpec, Grid, MetricSpec
from bisub.harness import CheckResult, Tolerances, classify, decide, fd_crosscheck, spaceform_audit
from bisub.submersion import FramedModel


def model(name, **params):
    return models.builtin(name, **params).model


@pytest.fixture(scope="module")
def reports():
    return {n: classify(model(n)) for n in models.NAMES}


def test_verdicts(reports):
    assert reports["euclidean-projection"].verdict == "harmonic"
    assert reports["warped"].verdict == "proper-biharmonic"
    assert reports["nil"].verdict == "not-biharmonic"
    assert reports["hyperbolic-projection"].verdict == "not-biharmonic"
    assert reports["helical"].verdict == "not-biharmonic"


def test_nil_witness_is_reproducible(reports):
    rep = reports["nil"]
    b = rep.check("bitension")
    assert b.value == pytest.approx(1.344, abs=1e-12)
    assert abs(b.witness[0]) == 0.5
    r = sub.bitension(model("nil"), b.witness)
    assert np.hypot(r.r1, r.r2) == b.value


def test_report_carries_every_maximum(reports):
    names = [c.name for c in reports["nil"].checks]
    assert names == ["spd", "orthonormality", "adapted", "base_isometry", "base_structure",
                     "jacobi", "tension", "tension_min", "bitension"]
    assert [c.name for c in reports["helical"].checks] == ["spd", "unit", "tension", "tension_min"]
    for rep in reports.values():
        assert rep.grid["points"] == 729
        assert all(len(c.witness) == 3 for c in rep.checks)
        assert rep.tolerances == Tolerances().asdict()


def test_warped_margins(reports):
    rep = reports["warped"]
    assert rep.check("bitension").value < 1e-7
    assert rep.check("tension_min").value > 0.1
    assert rep.params == {"c1": 1.0, "b1": 1.0, "c": 1.0}


def _checks(tension, bitension, structural_ok=True):
    return [
        CheckResult("adapted", 0.0 if structural_ok else 1.0, (0, 0, 0), 1e-9, structural_ok, True),
        CheckResult("tension", tension, (0, 0, 0), None, None),
        CheckResult("bitension", bitension, (0, 0, 0), None, None),
    ]


@pytest.mark.parametrize(
    "t, b, verdict",
    [
        (0.0, 0.0, "harmonic"),
        (5e-9, 5e-8, "harmonic"),
        (1e-8, 0.0, "inconclusive"),  # tension in the band between harmonic and proper
        (0.5, 1e-8, "proper-biharmonic"),
        (1e-4, 1e-8, "inconclusive"),
        (0.5, 1e-6, "not-biharmonic"),
        (1e-10, 1.0, "inconclusive"),
    ],
)
def test_threshold_ladder(t, b, verdict):
    assert decide(_checks(t, b), Tolerances())[0] == verdict


def test_structural_failure_is_inconclusive():
    v, reason = decide(_checks(0.0, 0.0, structural_ok=False), Tolerances())
    assert v == "inconclusive" and "adapted" in reason


def test_vertical_field_without_curvature_is_inconclusive():
    m = dataclasses.replace(model("helical"), curvature=None)
    assert classify(m).verdict == "inconclusive"


def test_non_adapted_frame_gives_inconclusive():
    m = FramedModel(
        name="twisted",
        metric=MetricSpec.euclidean(),
        frame=FrameSpec.from_strings([["cos(z)", "sin(z)", "0"], ["-sin(z)", "cos(z)", "0"], ["0", "0", "1"]]),
        grid=Grid.box((-1, 1), (-1, 1), (-1, 1), n=3),
    )
    rep = classify(m)
    assert rep.verdict == "inconclusive"
    assert rep.check("adapted").passed is False


def test_domain_failures_give_inconclusive():
    m = model("warped")
    across_pole = Grid(((-0.5, 0.5, 3),) + m.grid.with_counts((3, 3, 3)).ranges[1:])
    rep = classify(m, across_pole)
    assert rep.verdict == "inconclusive" and "outside chart domain" in rep.reason
    unboxed = dataclasses.replace(m, metric=dataclasses.replace(m.metric, domain=sub.Domain()))
    rep = classify(unboxed, across_pole)
    assert rep.verdict == "inconclusive" and "logarithm" in rep.reason


def test_tolerance_override():
    rep = classify(model("nil"), tols=Tolerances().updated(biharmonic=2.0, proper=0.1, harmonic=1e-8))
    # a loose enough biharmonic tolerance lets nil (max bitension 1.344) through
    assert rep.verdict == "proper-biharmonic"
    assert rep.tolerances["biharmonic"] == 2.0
    with pytest.raises(KeyError):
        Tolerances().updated(nonsense=1.0)


@pytest.mark.parametrize("name", models.NAMES)
def test_grid_refinement_keeps_verdict_class(name, reports):
    m = model(name)
    fine = classify(m, m.grid.refined())
    coarse = reports[name].verdict
    flip = {coarse, fine.verdict} == {"harmonic", "proper-biharmonic"}
    assert not flip
    assert fine.verdict == coarse


def test_deterministic():
    a, b = classify(model("nil")).asdict(), classify(model("nil")).asdict()
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


# --- finite-difference cross-check ---------------------------------------------------------


def test_fd_bounds():
    assert fd_crosscheck(model("euclidean-projection")) < 1e-12
    assert fd_crosscheck(model("nil")) < 1e-6
    assert fd_crosscheck(model("warped")) < 1e-5
    assert fd_crosscheck(model("hyperbolic-projection")) < 1e-6
    assert fd_crosscheck(model("helical")) < 1e-6


def test_fd_detects_a_wrong_derivative(monkeypatch):
    # corrupt e1(u) by 1e-3 relative; the cross-check must notice
    orig = sub.SubmersionPoint.e

    def skewed(self, i, u):
        out = orig(self, i, u)
        return out * 1.001 if i == 1 else out

    monkeypatch.setattr(sub.SubmersionPoint, "e", skewed)
    assert fd_crosscheck(model("nil")) > 1e-4


# --- space-form audit -------------------------------------------------------------------------


def test_audit_euclidean():
    rep = spaceform_audit(model("euclidean-projection"), 0.0)
    assert rep.passed
    assert max(e.value for e in rep.entries) < 1e-10
    assert [e.name for e in rep.entries] == [
        "R1312", "R1313", "R1323", "R1212", "R1223", "R2313", "R2323",
        "e3(f1)", "e3(f2)", "e3(kappa1)", "e3(kappa2)", "e3(sigma)",
    ]


def test_audit_hyperbolic():
    rep = spaceform_audit(model("hyperbolic-projection"), -1.0)
    assert rep.passed
    assert max(e.value for e in rep.entries[:7]) < 1e-7
    assert max(e.value for e in rep.entries[7:]) < 1e-8


def test_audit_wrong_curvature_fails():
    rep = spaceform_audit(model("hyperbolic-projection"), 0.0)
    assert not rep.passed
    assert {e.name for e in rep.entries if not e.passed} == {"R1313", "R1212", "R2323"}


def test_audit_nil_fails():
    rep = spaceform_audit(model("nil"), 0.0)
    assert not rep.passed
    r1212 = next(e for e in rep.entries if e.name == "R1212")
    assert r1212.value >= 0.2
    assert max(e.value for e in rep.entries[7:]) < 1e-8


def test_audit_report_dict():
    d = spaceform_audit(model("nil"), 0.0).asdict()
    assert d["model"] == "nil" and d["curvature"] == 0.0 and d["passed"] is False
    assert len(d["entries"]) == 12


def test_exports():
    assert set(harness.__all__) >= {"classify", "fd_crosscheck", "spaceform_audit", "Grid"}
