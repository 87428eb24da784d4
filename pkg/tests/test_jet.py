import math
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bisub import models
from bisub.expr import BinOp, Call, Num, Pow, Var, eval_jet
from bisub.jet import Jet, multi_indices, ncoeffs, variables
from bisub.submersion import FramedModel

# --- structure --------------------------------------------------------------


def test_coefficient_counts():
    assert [ncoeffs(n) for n in range(4)] == [1, 4, 10, 20]
    idx = multi_indices(3)
    assert len(set(idx)) == 20
    assert [sum(a) for a in idx] == sorted(sum(a) for a in idx)


def test_mixed_partials_share_one_slot():
    x, y, z = variables((0.5, -1.0, 2.0), 3)
    f = x * x * y * z
    # d^3/(dx dx dy) of x^2 y z = 2 z
    assert f.partial((2, 1, 0)) == pytest.approx(4.0)
    assert f.partial((1, 1, 1)) == pytest.approx(2 * 0.5)


def test_diff_drops_one_order():
    x, y, _ = variables((1.0, 2.0, 0.0), 3)
    f = x**3 * y
    d = f.diff(0)
    assert d.order == 2
    assert d.value == pytest.approx(3 * 2.0)
    assert d.partial((1, 0, 0)) == pytest.approx(6 * 2.0)
    assert d.partial((1, 1, 0)) == pytest.approx(6.0)


def test_mixed_order_arithmetic_truncates():
    x3 = variables((1.0, 0, 0), 3)[0]
    x1 = variables((1.0, 0, 0), 1)[0]
    assert (x3 * x1).order == 1
    assert (x3 + 1.0).order == 3


def test_integer_powers():
    x = variables((2.0, 0, 0), 3)[0]
    assert (x**0).value == 1.0
    p = x**-2
    assert p.value == pytest.approx(0.25)
    assert p.partial((1, 0, 0)) == pytest.approx(-2 / 8)
    assert p.partial((3, 0, 0)) == pytest.approx(-24 / 2**5)
    with pytest.raises(TypeError):
        x**0.5


@pytest.mark.parametrize(
    "name, f, derivs",
    [
        ("exp", Jet.exp, [math.exp(0.7)] * 4),
        ("log", Jet.log, [math.log(0.7), 1 / 0.7, -1 / 0.7**2, 2 / 0.7**3]),
        ("sqrt", Jet.sqrt, [0.7**0.5, 0.5 * 0.7**-0.5, -0.25 * 0.7**-1.5, 0.375 * 0.7**-2.5]),
        ("sin", Jet.sin, [math.sin(0.7), math.cos(0.7), -math.sin(0.7), -math.cos(0.7)]),
        ("cos", Jet.cos, [math.cos(0.7), -math.sin(0.7), -math.cos(0.7), math.sin(0.7)]),
        ("reciprocal", Jet.reciprocal, [1 / 0.7, -1 / 0.7**2, 2 / 0.7**3, -6 / 0.7**4]),
    ],
)
def test_univariate_functions(name, f, derivs):
    x = variables((0.7, 0, 0), 3)[0]
    j = f(x)
    got = [j.partial((k, 0, 0)) for k in range(4)]
    np.testing.assert_allclose(got, derivs, rtol=1e-14)


def test_chain_rule_through_composition():
    x, y, _ = variables((0.3, 0.4, 0.0), 3)
    j = (x * y).exp()
    e = math.exp(0.12)
    assert j.partial((1, 1, 0)) == pytest.approx(e * (1 + 0.12), rel=1e-14)
    assert j.partial((2, 1, 0)) == pytest.approx(e * 0.4 * (2 + 0.12), rel=1e-14)


def test_constant_has_zero_derivatives():
    c = Jet.constant(3.5, 3, (4,))
    assert np.all(c.coeffs[0] == 3.5)
    assert np.all(c.coeffs[1:] == 0.0)
    assert np.all((c * c).exp().coeffs[1:] == 0.0)


# --- Leibniz on random expressions -----------------------------------------

safe_leaves = st.one_of(
    st.floats(min_value=0.1, max_value=3, allow_nan=False).map(Num),
    st.sampled_from(["x", "y", "z"]).map(Var),
)


def _safe(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(*t)),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda t: Call(*t)),
    )


safe_exprs = st.recursive(safe_leaves, _safe, max_leaves=6)
points = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3)


@settings(max_examples=200, deadline=None)
@given(safe_exprs, safe_exprs, points)
def test_leibniz_within_4_ulps(f, g, p):
    lhs = eval_jet(BinOp("*", f, g), p).coeffs
    rhs = (eval_jet(f, p) * eval_jet(g, p)).coeffs
    ulp = np.spacing(np.maximum(np.abs(lhs), np.abs(rhs)))
    assert np.all(np.abs(lhs - rhs) <= 4 * ulp)


@settings(max_examples=100, deadline=None)
@given(safe_exprs, safe_exprs, points)
def test_product_rule_first_partials(f, g, p):
    F, G = eval_jet(f, p), eval_jet(g, p)
    FG = eval_jet(BinOp("*", f, g), p)
    for a in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
        expect = F.partial(a) * G.value + F.value * G.partial(a)
        assert FG.partial(a) == pytest.approx(expect, rel=1e-12, abs=1e-12)


# --- finite differences on every model expression --------------------------


def _model_expressions():
    for entry in models.catalog():
        m = entry.model
        for k, e in m.metric.entries.items():
            yield f"{m.name}.g{k}", e, m
        comps = [c for v in m.frame.vectors for c in v] if isinstance(m, FramedModel) else list(m.vertical)
        for n, e in enumerate(comps):
            yield f"{m.name}.frame[{n}]", e, m
        if isinstance(m, FramedModel) and m.base is not None:
            for k, e in m.base.metric.items():
                yield f"{m.name}.h{k}", e, m


MODEL_EXPRS = list(_model_expressions())
UNITS = np.eye(3)


def _fd_first(e, p, params, h=1e-5):
    f = lambda q: eval_jet(e, q, params, 0).value  # noqa: E731
    return np.stack([(f(p + h * u) - f(p - h * u)) / (2 * h) for u in UNITS], -1)


def _fd_second(e, p, params, h=1e-5):
    f = lambda q: eval_jet(e, q, params, 0).value  # noqa: E731
    out = {}
    for a in range(3):
        for b in range(a, 3):
            ua, ub = h * UNITS[a], h * UNITS[b]
            out[a, b] = (f(p + ua + ub) - f(p + ua - ub) - f(p - ua + ub) + f(p - ua - ub)) / (4 * h * h)
    return out


@pytest.mark.parametrize("label, e, m", MODEL_EXPRS, ids=[t[0] for t in MODEL_EXPRS])
def test_model_expression_partials_match_finite_differences(label, e, m):
    lo = np.array([r[0] for r in m.grid.ranges])
    hi = np.array([r[1] for r in m.grid.ranges])
    pts = np.random.default_rng(zlib.crc32(label.encode())).uniform(lo, hi, size=(100, 3))
    j = eval_jet(e, pts, m.params, 2)
    scale = np.maximum(np.abs(j.value), 1.0)
    fd1 = _fd_first(e, pts, m.params)
    for a in range(3):
        alpha = tuple(int(a == k) for k in range(3))
        jet = j.partial(alpha)
        assert np.all(np.abs(jet - fd1[..., a]) <= 1e-6 * np.maximum(np.abs(jet), scale)), (label, alpha)
    for (a, b), fd in _fd_second(e, pts, m.params).items():
        alpha = tuple(int(a == k) + int(b == k) for k in range(3))
        jet = j.partial(alpha)
        assert np.all(np.abs(jet - fd) <= 1e-4 * np.maximum(np.abs(jet), scale)), (label, alpha)
