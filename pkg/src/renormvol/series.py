"""Truncated power series in r with a single log(r) slot.

A :class:`LogSeries` stores ``sum_k (a_k + b_k log r) r^k`` for ``k <= order``;
coefficient arrays carry a trailing batch shape so one object holds the series
at every grid node.  Products that would create ``(log r)^2`` inside the
truncation raise :class:`LogSquaredError` instead of being dropped.

:class:`MatrixSeries` holds symmetric-matrix Taylor coefficients (no log slot)
with shape ``(order+1, *batch, n, n)``.
"""
from __future__ import annotations

from math import factorial

import numpy as np

__all__ = [
    "LogSquaredError",
    "LogSeries",
    "MatrixSeries",
    "matrix_series_inverse",
    "sqrt_det_ratio",
    "binomial",
]


class LogSquaredError(ArithmeticError):
    pass


def binomial(p: float, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= (p - j) / (j + 1)
    return out


def _length(order: int) -> int:
    return max(order + 1, 0)


class LogSeries:
    """Truncated series ``sum_{k<=order} (a[k] + b[k] log r) r^k``.

    ``order`` may be negative: such a series carries no known coefficients and
    only becomes useful after multiplication by a power of r.
    """

    __slots__ = ("a", "b", "order")

    def __init__(self, a, b=None, order: int | None = None):
        a = np.asarray(a, dtype=float)
        if order is None:
            order = a.shape[0] - 1
        if a.shape[0] != _length(order):
            raise ValueError(f"coefficient length {a.shape[0]} does not match order {order}")
        if b is None:
            b = np.zeros_like(a)
        b = np.asarray(b, dtype=float)
        if b.shape != a.shape:
            raise ValueError("log and power coefficient arrays differ in shape")
        self.a = a
        self.b = b
        self.order = order

    # ------------------------------------------------------------------ builders
    @classmethod
    def zeros(cls, order: int, batch=()) -> "LogSeries":
        z = np.zeros((_length(order),) + tuple(batch))
        return cls(z, z.copy(), order)

    @classmethod
    def constant(cls, c, order: int) -> "LogSeries":
        c = np.asarray(c, dtype=float)
        s = cls.zeros(order, c.shape)
        if order >= 0:
            s.a[0] = c
        return s

    @classmethod
    def monomial(cls, k: int, order: int, coef=1.0, log: bool = False) -> "LogSeries":
        coef = np.asarray(coef, dtype=float)
        s = cls.zeros(order, coef.shape)
        if 0 <= k <= order:
            (s.b if log else s.a)[k] = coef
        return s

    @classmethod
    def from_coefficients(cls, coeffs, log_coeffs=None, order: int | None = None) -> "LogSeries":
        a = np.asarray(coeffs, dtype=float)
        if order is not None and a.shape[0] < _length(order):
            pad = np.zeros((_length(order) - a.shape[0],) + a.shape[1:])
            a = np.concatenate([a, pad])
        b = None
        if log_coeffs is not None:
            b = np.zeros_like(a)
            lc = np.asarray(log_coeffs, dtype=float)
            b[: lc.shape[0]] = lc
        s = cls(a, b)
        return s.truncate(order) if order is not None else s

    # ------------------------------------------------------------------- access
    @property
    def batch_shape(self) -> tuple:
        return self.a.shape[1:]

    def coeff(self, k: int, log: bool = False) -> np.ndarray:
        if not 0 <= k <= self.order:
            raise IndexError(f"order {k} outside truncation {self.order}")
        return (self.b if log else self.a)[k]

    def has_log(self, upto: int | None = None) -> bool:
        upto = self.order if upto is None else min(upto, self.order)
        return bool(np.any(self.b[: _length(upto)] != 0))

    def copy(self) -> "LogSeries":
        return LogSeries(self.a.copy(), self.b.copy(), self.order)

    def __repr__(self) -> str:
        return f"LogSeries(order={self.order}, batch={self.batch_shape})"

    # --------------------------------------------------------------- structure
    def truncate(self, order: int) -> "LogSeries":
        if order > self.order:
            raise ValueError(f"cannot raise truncation from {self.order} to {order}")
        m = _length(order)
        return LogSeries(self.a[:m].copy(), self.b[:m].copy(), order)

    def shift(self, m: int) -> "LogSeries":
        """Multiply by ``r**m`` (m >= 0)."""
        if m < 0:
            raise ValueError("shift must be non-negative")
        new_order = self.order + m
        out = LogSeries.zeros(new_order, self.batch_shape)
        n_known = _length(self.order)
        if n_known:
            out.a[m : m + n_known] = self.a
            out.b[m : m + n_known] = self.b
        return out

    def deriv(self) -> "LogSeries":
        """d/dr, using d/dr[(a + b log r) r^k] = (k a + b) r^(k-1) + k b r^(k-1) log r."""
        out = LogSeries.zeros(self.order - 1, self.batch_shape)
        for k in range(1, self.order + 1):
            out.a[k - 1] = k * self.a[k] + self.b[k]
            out.b[k - 1] = k * self.b[k]
        if self.order >= 0 and np.any(self.b[0] != 0):
            raise ValueError("derivative of a log r term at order 0 is singular")
        return out

    def euler(self) -> "LogSeries":
        """``r d/dr``; keeps the truncation order and stays regular on log terms."""
        k = np.arange(_length(self.order)).reshape((-1,) + (1,) * len(self.batch_shape))
        return LogSeries(k * self.a + self.b, k * self.b, self.order)

    # --------------------------------------------------------------- arithmetic
    def _coerce(self, other):
        if isinstance(other, LogSeries):
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            out = self.copy()
            if out.order >= 0:
                out.a[0] = out.a[0] + np.asarray(other, dtype=float)
            return out
        order = min(self.order, o.order)
        m = _length(order)
        return LogSeries(self.a[:m] + o.a[:m], self.b[:m] + o.b[:m], order)

    __radd__ = __add__

    def __neg__(self):
        return LogSeries(-self.a, -self.b, self.order)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LogSeries) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            return LogSeries(self.a * c, self.b * c, self.order)
        order = min(self.order, o.order)
        batch = np.broadcast_shapes(self.batch_shape, o.batch_shape)
        out = LogSeries.zeros(order, batch)
        for i in range(order + 1):
            ai, bi = self.a[i], self.b[i]
            for j in range(order + 1 - i):
                aj, bj = o.a[j], o.b[j]
                out.a[i + j] += ai * aj
                out.b[i + j] += ai * bj + bi * aj
                if np.any(bi * bj != 0):
                    raise LogSquaredError(
                        f"(log r)^2 term produced at order {i + j} within truncation {order}"
                    )
        return out

    __rmul__ = __mul__

    def __pow__(self, p: float) -> "LogSeries":
        return self.pow(p)

    def pow(self, p: float) -> "LogSeries":
        """``self**p`` for real p; the constant term is factored out first."""
        if self.order < 0:
            return self.copy()
        if np.any(self.b[0] != 0):
            raise ValueError("series with a log r constant term has no power expansion")
        c = self.a[0]
        if np.any(c == 0):
            raise ZeroDivisionError("power of a series with vanishing constant term")
        if np.any(c < 0) and float(p) != int(p):
            raise ValueError("non-integer power of a series with negative constant term")
        s = self * (1.0 / c)
        s.a[0] = 0.0
        result = LogSeries.constant(np.ones_like(c), self.order)
        term = LogSeries.constant(np.ones_like(c), self.order)
        for m in range(1, self.order + 1):
            term = term * s
            result = result + term * binomial(p, m)
        return result * np.power(c, p)

    def exp(self) -> "LogSeries":
        """exp of a series; requires a log-free constant term."""
        if self.order < 0:
            return self.copy()
        if np.any(self.b[0] != 0):
            raise ValueError("exp of a series with log r constant term")
        c = self.a[0]
        s = self.copy()
        s.a[0] = 0.0
        result = LogSeries.constant(np.ones_like(c), self.order)
        term = LogSeries.constant(np.ones_like(c), self.order)
        for m in range(1, self.order + 1):
            term = term * s * (1.0 / m)
            result = result + term
        return result * np.exp(c)

    def evaluate(self, r) -> np.ndarray:
        """Sum the truncated series at r > 0 (r broadcasts against the batch)."""
        r = np.asarray(r, dtype=float)
        logr = np.log(r)
        total = np.zeros(np.broadcast_shapes(r.shape, self.batch_shape))
        for k in range(self.order, -1, -1):
            total = total * r + self.a[k] + self.b[k] * logr
        return total


class MatrixSeries:
    """Symmetric matrix Taylor series ``sum_k M_k r^k`` with coefficients
    of shape ``(order+1, *batch, n, n)``."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim < 3 or c.shape[-1] != c.shape[-2]:
            raise ValueError("matrix series coefficients need shape (order+1, ..., n, n)")
        self.c = c

    @classmethod
    def from_derivatives(cls, derivs) -> "MatrixSeries":
        d = np.asarray(derivs, dtype=float)
        scale = np.array([1.0 / factorial(m) for m in range(d.shape[0])])
        return cls(d * scale.reshape((-1,) + (1,) * (d.ndim - 1)))

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def n(self) -> int:
        return self.c.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.c.shape[1:-2]

    def truncate(self, order: int) -> "MatrixSeries":
        if order > self.order:
            raise ValueError("cannot raise truncation")
        return MatrixSeries(self.c[: order + 1].copy())

    def deriv(self) -> "MatrixSeries":
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return MatrixSeries(self.c[1:] * k)

    def __add__(self, other: "MatrixSeries") -> "MatrixSeries":
        order = min(self.order, other.order)
        return MatrixSeries(self.c[: order + 1] + other.c[: order + 1])

    def __sub__(self, other: "MatrixSeries") -> "MatrixSeries":
        order = min(self.order, other.order)
        return MatrixSeries(self.c[: order + 1] - other.c[: order + 1])

    def __matmul__(self, other: "MatrixSeries") -> "MatrixSeries":
        order = min(self.order, other.order)
        shape = (order + 1,) + np.broadcast_shapes(self.c.shape[1:], other.c.shape[1:])
        out = np.zeros(shape)
        for i in range(order + 1):
            for j in range(order + 1 - i):
                out[i + j] += self.c[i] @ other.c[j]
        return MatrixSeries(out)

    def scale(self, s) -> "MatrixSeries":
        return MatrixSeries(self.c * s)

    def trace(self) -> LogSeries:
        return LogSeries(np.trace(self.c, axis1=-2, axis2=-1))

    def evaluate(self, r: float) -> np.ndarray:
        total = np.zeros(self.c.shape[1:])
        for k in range(self.order, -1, -1):
            total = total * r + self.c[k]
        return total


def matrix_series_inverse(m: MatrixSeries) -> MatrixSeries:
    """Inverse series via the recursion ``B_k = -M_0^{-1} sum_{j>=1} M_j B_{k-j}``."""
    m0 = m.c[0]
    det = np.linalg.det(m0)
    if np.any(np.abs(det) <= 1e-300) or not np.all(np.isfinite(det)):
        raise np.linalg.LinAlgError("order-0 matrix of the series is singular")
    m0inv = np.linalg.inv(m0)
    out = np.zeros_like(m.c)
    out[0] = m0inv
    for k in range(1, m.order + 1):
        acc = np.zeros_like(m0)
        for j in range(1, k + 1):
            acc += m.c[j] @ out[k - j]
        out[k] = -m0inv @ acc
    return MatrixSeries(out)


def sqrt_det_ratio(m: MatrixSeries) -> LogSeries:
    """Series of ``sqrt(det M(r) / det M(0))`` via ``exp(tr log(M_0^{-1} M(r)) / 2)``."""
    m0 = m.c[0]
    try:
        np.linalg.cholesky(m0)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("order-0 matrix is not positive definite") from exc
    m0inv = np.linalg.inv(m0)
    nmat = MatrixSeries(np.concatenate([np.zeros_like(m.c[:1]), m0inv @ m.c[1:]]))
    # tr log(I + N) = sum_j (-1)^(j+1) tr(N^j) / j, N = O(r)
    logtr = LogSeries.zeros(m.order, m.batch_shape)
    power = nmat
    for j in range(1, m.order + 1):
        logtr = logtr + power.trace() * ((-1) ** (j + 1) / j)
        power = power @ nmat
    return (logtr * 0.5).exp()
