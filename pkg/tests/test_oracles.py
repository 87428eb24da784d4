"""Independent symbolic oracles.

These recompute quantities from coordinates with sympy: Christoffel symbols
of the chart metric, the pullback connection on the base, and the base
curvature. No integrability data or frame calculus is involved, so agreement
with the package is a check of both the frame formulas and the jet engine.
"""

from functools import lru_cache

import numpy as np
import pytest
import sympy as sp

from bisub import models
from bisub import submersion as sub
from bisub.geometry import curvature_component

X = sp.symbols("x y z")
x, y, z = X
U = sp.symbols("u v")


def christoffel(g, coords):
    gi = g.inv()
    n = len(coords)
    return [
        [
            [
                sum(gi[c, d] * (sp.diff(g[d, a], coords[b]) + sp.diff(g[d, b], coords[a]) - sp.diff(g[a, b], coords[d]))
                    for d in range(n)) / 2
                for b in range(n)
            ]
            for a in range(n)
        ]
        for c in range(n)
    ]


def riemann(G, coords):
    """R[c][d][a][b] = dx^c(R(d_a, d_b) d_d)."""
    n = len(coords)

    def comp(c, d, a, b):
        out = sp.diff(G[c][b][d], coords[a]) - sp.diff(G[c][a][d], coords[b])
        return out + sum(G[c][a][e] * G[e][b][d] - G[c][b][e] * G[e][a][d] for e in range(n))

    return [[[[comp(c, d, a, b) for b in range(n)] for a in range(n)] for d in range(n)] for c in range(n)]


def bitension_oracle(g, frame, h, proj, base_frame):
    """tau2(pi) = tr(nabla nabla - nabla_nabla) tau - tr R^N(dpi, tau) dpi, paired with eps1, eps2."""
    G = christoffel(g, X)
    on_m = dict(zip(U, (X[i] for i in proj)))
    GN = christoffel(h, U)
    RN = riemann(GN, U)
    GNm = [[[GN[c][a][b].subs(on_m) for b in range(2)] for a in range(2)] for c in range(2)]
    RNm = [[[[RN[c][d][a][b].subs(on_m) for b in range(2)] for a in range(2)] for d in range(2)] for c in range(2)]

    def cov(A, B):
        return sp.Matrix([
            sum(A[a] * sp.diff(B[c], X[a]) for a in range(3))
            + sum(G[c][a][b] * A[a] * B[b] for a in range(3) for b in range(3))
            for c in range(3)
        ])

    def dpi(A):
        return sp.Matrix([A[i] for i in proj])

    def pull(A, V):
        dA = dpi(A)
        return sp.Matrix([
            sum(A[a] * sp.diff(V[c], X[a]) for a in range(3))
            + sum(GNm[c][a][b] * dA[a] * V[b] for a in range(2) for b in range(2))
            for c in range(2)
        ])

    def curv(A, B, C):
        return sp.Matrix([
            sum(RNm[c][d][a][b] * A[a] * B[b] * C[d] for a in range(2) for b in range(2) for d in range(2))
            for c in range(2)
        ])

    tau = sp.zeros(2, 1)
    for e in frame:
        tau += pull(e, dpi(e)) - dpi(cov(e, e))
    t2 = sp.zeros(2, 1)
    for e in frame:
        t2 += pull(e, pull(e, tau)) - pull(cov(e, e), tau) - curv(dpi(e), tau, dpi(e))
    hm = h.subs(on_m)
    eps = [sp.Matrix(v).subs(on_m) for v in base_frame]
    r = [(t2.T * hm * eps[i])[0] for i in range(2)]
    tau_eps = [(tau.T * hm * eps[i])[0] for i in range(2)]
    return r, tau_eps


NIL_G = sp.Matrix([[1, 0, 0], [0, 1 + x**2, -x], [0, -x, 1]])
NIL_E = [sp.Matrix([1, 0, 0]), sp.Matrix([0, -x / sp.sqrt(1 + x**2), -sp.sqrt(1 + x**2)]),
         sp.Matrix([0, 1 / sp.sqrt(1 + x**2), 0])]
NIL_BASE_FRAME = [[1, 0], [0, -sp.sqrt(1 + U[0] ** 2)]]


@lru_cache(maxsize=None)
def nil_oracle():
    h = sp.diag(1, 1 / (1 + U[0] ** 2))
    r, tau = bitension_oracle(NIL_G, NIL_E, h, (0, 2), NIL_BASE_FRAME)
    return [sp.factor(sp.simplify(v)) for v in r], [sp.simplify(v) for v in tau]


def test_nil_bitension_symbolic_form():
    (r1, r2), (t1, t2) = nil_oracle()
    assert sp.simplify(r1 - (-x * (x**2 + 5) / (1 + x**2) ** 3)) == 0
    assert r2 == 0
    # tension = -kappa1 eps1 with kappa1 = -x/(1+x^2)
    assert sp.simplify(t1 - x / (1 + x**2)) == 0 and t2 == 0


def test_nil_bitension_matches_oracle_on_grid():
    (r1, r2), _ = nil_oracle()
    f = sp.lambdify(x, r1, "numpy")
    m = models.builtin("nil").model
    p = m.grid.refined().points()
    got = sub.bitension(m, p)
    np.testing.assert_allclose(got.r1, f(p[:, 0]), atol=1e-12)
    np.testing.assert_allclose(got.r2, 0.0, atol=1e-12)


def test_nil_bitension_is_not_the_cubic_over_cubic():
    # the two closed forms only meet at x in {-1, 0, 1}
    (r1, _), _ = nil_oracle()
    diff = sp.factor(r1 - (x**3 - 7 * x) / (1 + x**2) ** 3)
    assert sp.solve(sp.numer(diff), x) == [-1, 0, 1]


def _warped_symbols(c1=1, b1=1, c=1):
    L = sp.log(c) + c1 * x - 2 * sp.log(1 - sp.exp(c1 * x)) + b1 * y - 2 * sp.log(1 - sp.exp(b1 * y))
    beta = sp.exp(L)
    g = sp.diag(1, 1, beta**-2)
    E = [sp.Matrix([1, 0, 0]), sp.Matrix([0, 1, 0]), sp.Matrix([0, 0, beta])]
    return g, E


@pytest.mark.parametrize("c1, b1", [(1, 1), (2, sp.Rational(1, 2))])
def test_warped_bitension_vanishes_by_definition(c1, b1):
    g, E = _warped_symbols(c1, b1)
    r, tau = bitension_oracle(g, E, sp.eye(2), (0, 1), [[1, 0], [0, 1]])
    f = sp.lambdify(X, r + tau, "numpy")
    m = models.builtin("warped", c1=float(c1), b1=float(b1)).model
    p = m.grid.with_counts((5, 5, 2)).points()
    vals = [np.broadcast_to(v, p[:, 0].shape) for v in f(p[:, 0], p[:, 1], p[:, 2])]
    np.testing.assert_allclose(vals[0], 0.0, atol=1e-8)
    np.testing.assert_allclose(vals[1], 0.0, atol=1e-8)
    t = sub.tension(m, p)
    np.testing.assert_allclose(t[0], vals[2], rtol=1e-12)
    np.testing.assert_allclose(t[1], vals[3], rtol=1e-12)


def test_hyperbolic_bitension_by_definition():
    g = sp.eye(3) / z**2
    E = [sp.Matrix([z, 0, 0]), sp.Matrix([0, 0, z]), sp.Matrix([0, z, 0])]
    h = sp.eye(2) / U[1] ** 2
    r, tau = bitension_oracle(g, E, h, (0, 2), [[U[1], 0], [0, U[1]]])
    assert [sp.simplify(v) for v in r] == [0, 2]
    assert [sp.simplify(v) for v in tau] == [0, -1]
    m = models.builtin("hyperbolic-projection").model
    b = sub.bitension(m, m.grid.points())
    np.testing.assert_allclose(b.r1, 0.0, atol=1e-12)
    np.testing.assert_allclose(b.r2, 2.0, atol=1e-12)


def test_hyperbolic_r1313_from_coordinate_riemann():
    g = sp.eye(3) / z**2
    G = christoffel(g, X)
    R = riemann(G, X)
    e1, e3 = [z, 0, 0], [0, z, 0]
    # <R(e1, e3) e1, e3>, then the sign flip of R_ijkl
    vec = [sum(R[c][d][a][b] * e1[a] * e3[b] * e1[d] for a in range(3) for b in range(3) for d in range(3))
           for c in range(3)]
    val = -sum(g[c, k] * vec[c] * e3[k] for c in range(3) for k in range(3))
    assert sp.simplify(val) == -1
    m = models.builtin("hyperbolic-projection").model
    assert curvature_component(m, 1, 3, 1, 3, (0.0, 0.0, 1.0)) == pytest.approx(float(val.subs(z, 1)), abs=1e-13)


def test_nil_base_gauss_curvature_brioschi():
    # h = du^2 + G dv^2: K = -(sqrt G)_uu / sqrt G
    u = U[0]
    rootG = 1 / sp.sqrt(1 + u**2)
    K = sp.simplify(-sp.diff(rootG, u, 2) / rootG)
    assert K.subs(u, 0) == 1
    m = models.builtin("nil").model
    p = m.grid.points()
    np.testing.assert_allclose(sub.gauss_curvature_base(m, p), sp.lambdify(u, K)(p[:, 0]), atol=1e-12)


def test_helical_mean_curvature_symbolic():
    V = sp.Matrix([-y, x, 1]) / sp.sqrt(1 + x**2 + y**2)
    H = sp.Matrix([sum(V[a] * sp.diff(V[c], X[a]) for a in range(3)) for c in range(3)])
    H = sp.simplify(H - (H.dot(V)) * V)
    assert list(H.subs({x: 1, y: 0, z: 0})) == [-sp.Rational(1, 2), 0, 0]
    assert list(H.subs({x: 0, y: 0})) == [0, 0, 0]
