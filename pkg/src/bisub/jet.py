"""Truncated multivariate Taylor jets in the chart coordinates (x, y, z).

A jet of order ``n`` stores the normalized Taylor coefficients
``c[alpha] = d^alpha f / alpha!`` for every multi-index with ``|alpha| <= n``,
in graded order (all degree-0 entries, then degree 1, ...). Truncating a jet
to a lower order is therefore a slice of the leading coefficients.

Coefficient arrays carry a trailing batch shape so a whole grid of points is
pushed through the arithmetic at once.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product

import numpy as np

NVARS = 3
AXES = {"x": 0, "y": 1, "z": 2}


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int], ...]:
    out = []
    for deg in range(order + 1):
        # lexicographically descending within a degree: x-heavy first
        out.extend(
            sorted(
                (a for a in product(range(deg + 1), repeat=NVARS) if sum(a) == deg),
                reverse=True,
            )
        )
    return tuple(out)


@lru_cache(maxsize=None)
def _index(order: int) -> dict[tuple[int, int, int], int]:
    return {a: i for i, a in enumerate(multi_indices(order))}


def ncoeffs(order: int) -> int:
    return math.comb(order + NVARS, NVARS)


@lru_cache(maxsize=None)
def _mul_table(order: int):
    """Pair tables for the Cauchy product, grouped by output slot for reduceat."""
    idx = _index(order)
    mi = multi_indices(order)
    triples = []
    for i, a in enumerate(mi):
        for j, b in enumerate(mi):
            s = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
            if sum(s) <= order:
                triples.append((idx[s], i, j))
    triples.sort()
    out = np.array([t[0] for t in triples])
    left = np.array([t[1] for t in triples])
    right = np.array([t[2] for t in triples])
    starts = np.flatnonzero(np.r_[True, out[1:] != out[:-1]])
    return left, right, starts


@lru_cache(maxsize=None)
def _diff_table(order: int, axis: int):
    src_idx = _index(order)
    src, fac = [], []
    for b in multi_indices(order - 1):
        a = list(b)
        a[axis] += 1
        src.append(src_idx[tuple(a)])
        fac.append(float(a[axis]))
    return np.array(src), np.array(fac)


def _bcast(arr: np.ndarray, ndim_batch: int) -> np.ndarray:
    return arr.reshape(arr.shape + (1,) * ndim_batch)


class Jet:
    """Value and partial derivatives to a fixed total order, at one or many points."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: np.ndarray, order: int):
        self.order = order
        self.coeffs = coeffs

    # construction

    @classmethod
    def constant(cls, value, order: int, batch_shape: tuple = ()) -> Jet:
        c = np.zeros((ncoeffs(order),) + tuple(batch_shape))
        c[0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, axis: int, value, order: int) -> Jet:
        value = np.asarray(value, dtype=float)
        c = np.zeros((ncoeffs(order),) + value.shape)
        c[0] = value
        if order >= 1:
            e = [0, 0, 0]
            e[axis] = 1
            c[_index(order)[tuple(e)]] = 1.0
        return cls(c, order)

    # inspection

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray | float:
        v = self.coeffs[0]
        return float(v) if v.ndim == 0 else v

    def coefficient(self, alpha: tuple[int, int, int]):
        return self.coeffs[_index(self.order)[tuple(alpha)]]

    def partial(self, alpha: tuple[int, int, int]):
        """Return d^alpha f (un-normalized partial derivative)."""
        if sum(alpha) > self.order:
            raise ValueError(f"partial {alpha} exceeds jet order {self.order}")
        scale = math.prod(math.factorial(k) for k in alpha)
        out = scale * self.coefficient(alpha)
        return float(out) if np.ndim(out) == 0 else out

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[: ncoeffs(order)], order)

    def diff(self, axis: int) -> Jet:
        """Partial derivative along a coordinate axis; loses one order."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.order, axis)
        return Jet(self.coeffs[src] * _bcast(fac, self.coeffs.ndim - 1), self.order - 1)

    # arithmetic

    def _coerce(self, other) -> Jet | None:
        if isinstance(other, Jet):
            return other
        return None

    def _align(self, other: Jet) -> tuple[Jet, Jet]:
        n = min(self.order, other.order)
        return self.truncate(n), other.truncate(n)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            c = self.coeffs.copy()
            c[0] = c[0] + other
            return Jet(c, self.order)
        a, b = self._align(o)
        return Jet(a.coeffs + b.coeffs, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            other = np.asarray(other, dtype=float)
            return Jet(self.coeffs * other, self.order)
        a, b = self._align(o)
        left, right, starts = _mul_table(a.order)
        prod = a.coeffs[left] * b.coeffs[right]
        return Jet(np.add.reduceat(prod, starts, axis=0), a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.coeffs / np.asarray(other, dtype=float), self.order)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("jets support integer powers only")
        if k < 0:
            return self.reciprocal() ** (-k)
        result = Jet.constant(1.0, self.order, self.batch_shape)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # univariate composition f(a + h) = sum_k f^(k)(a)/k! h^k

    def compose(self, taylor: list) -> Jet:
        """Compose with a univariate function given its normalized Taylor
        coefficients ``taylor[k] = f^(k)(a)/k!`` at the base value ``a``."""
        h = Jet(self.coeffs.copy(), self.order)
        h.coeffs[0] = 0.0
        out = Jet.constant(0.0, self.order, self.batch_shape)
        out.coeffs[0] = taylor[0]
        hk = None
        for k in range(1, self.order + 1):
            hk = h if hk is None else hk * h
            out = out + hk * taylor[k]
        return out

    def reciprocal(self) -> Jet:
        a = self.coeffs[0]
        n = self.order
        return self.compose([(-1.0) ** k / a ** (k + 1) for k in range(n + 1)])

    def exp(self) -> Jet:
        ea = np.exp(self.coeffs[0])
        return self.compose([ea / math.factorial(k) for k in range(self.order + 1)])

    def log(self) -> Jet:
        a = self.coeffs[0]
        t = [np.log(a)]
        t += [(-1.0) ** (k - 1) / (k * a**k) for k in range(1, self.order + 1)]
        return self.compose(t)

    def sqrt(self) -> Jet:
        a = self.coeffs[0]
        t = []
        for k in range(self.order + 1):
            # binomial(1/2, k) * a^(1/2 - k)
            t.append(_binom_half(k) * np.sqrt(a) / a**k)
        return self.compose(t)

    def sin(self) -> Jet:
        a = self.coeffs[0]
        s, c = np.sin(a), np.cos(a)
        cyc = [s, c, -s, -c]
        return self.compose([cyc[k % 4] / math.factorial(k) for k in range(self.order + 1)])

    def cos(self) -> Jet:
        a = self.coeffs[0]
        s, c = np.sin(a), np.cos(a)
        cyc = [c, -s, -c, s]
        return self.compose([cyc[k % 4] / math.factorial(k) for k in range(self.order + 1)])

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, value={self.coeffs[0]!r})"


def _binom_half(k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (0.5 - i) / (i + 1)
    return out


def variables(point, order: int) -> tuple[Jet, Jet, Jet]:
    """Seed jets for x, y, z at ``point`` (shape (3,) or (..., 3))."""
    p = np.asarray(point, dtype=float)
    return tuple(Jet.variable(i, p[..., i], order) for i in range(NVARS))
