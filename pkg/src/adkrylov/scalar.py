"""Scalar types the solvers are written against.

The solvers only ever use ``+ - * /``, unary minus, :func:`sqrt`, ``abs``,
:func:`dot`, comparisons on :func:`primal` values and :func:`is_finite`.
Plain Python/numpy floats and float64 arrays satisfy that contract directly.
:class:`Dual` and :class:`DualArray` satisfy it while carrying one tangent
component along, which turns any solver run into its forward-mode derivative.

Every primal computation below is written with exactly the expression the
plain-float code would evaluate, so a dual run with zero tangents reproduces
the plain run bit for bit.
"""

from __future__ import annotations

import math
from numbers import Real

import numpy as np

from .errors import ComparisonError, DomainError

__all__ = [
    "Dual",
    "DualArray",
    "primal",
    "tangent",
    "primal_cmp",
    "is_finite",
    "sqrt",
    "dot",
    "norm",
    "lift",
]


def _div(x, y):
    """IEEE division for Python floats, which would otherwise raise."""
    try:
        return x / y
    except ZeroDivisionError:
        if math.isnan(x) or x == 0:
            return math.nan
        return math.copysign(math.inf, x) * math.copysign(1.0, y)


class Dual:
    """A value together with its derivative with respect to one parameter."""

    __slots__ = ("value", "tangent")
    # keep numpy from turning ``ndarray * Dual`` into an object array
    __array_ufunc__ = None

    def __init__(self, value, tangent=0.0):
        self.value = value
        self.tangent = tangent

    def __repr__(self):
        return f"Dual({self.value!r}, {self.tangent!r})"

    def __iter__(self):
        yield self.value
        yield self.tangent

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.tangent + other.tangent)
        if isinstance(other, Real):
            return Dual(self.value + other, self.tangent)
        if isinstance(other, np.ndarray):
            return DualArray(self.value + other, self.tangent + np.zeros_like(other, dtype=float))
        return NotImplemented

    def __radd__(self, other):
        if isinstance(other, Real):
            return Dual(other + self.value, self.tangent)
        if isinstance(other, np.ndarray):
            return DualArray(other + self.value, np.zeros_like(other, dtype=float) + self.tangent)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.tangent - other.tangent)
        if isinstance(other, Real):
            return Dual(self.value - other, self.tangent)
        if isinstance(other, np.ndarray):
            return DualArray(self.value - other, self.tangent + np.zeros_like(other, dtype=float))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Real):
            return Dual(other - self.value, -self.tangent)
        if isinstance(other, np.ndarray):
            return DualArray(other - self.value, np.zeros_like(other, dtype=float) - self.tangent)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.tangent * other.value + self.value * other.tangent,
            )
        if isinstance(other, Real):
            return Dual(self.value * other, self.tangent * other)
        if isinstance(other, np.ndarray):
            return DualArray(self.value * other, self.tangent * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Real):
            return Dual(other * self.value, other * self.tangent)
        if isinstance(other, np.ndarray):
            return DualArray(other * self.value, other * self.tangent)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Dual):
            # (ta*b - a*tb)/b**2 written without b**2, which underflows long
            # before b does
            b = other.value
            q = _div(self.value, b)
            return Dual(q, _div(self.tangent - q * other.tangent, b))
        if isinstance(other, Real):
            return Dual(_div(self.value, other), _div(self.tangent, other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Real):
            q = _div(other, self.value)
            return Dual(q, _div(-q * self.tangent, self.value))
        if isinstance(other, np.ndarray):
            return DualArray(np.asarray(other, dtype=float), np.zeros(np.shape(other))) / self
        return NotImplemented

    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __pos__(self):
        return self

    def __abs__(self):
        # sign(0) = 0 keeps the tangent finite at the kink
        v = self.value
        if v > 0:
            t = self.tangent
        elif v < 0:
            t = -self.tangent
        else:
            t = 0.0
        return Dual(abs(v), t)

    def sqrt(self):
        v = self.value
        if v < 0:
            raise DomainError(f"sqrt of negative primal {v!r}")
        s = math.sqrt(v)
        t = self.tangent
        if t == 0:
            # a zero direction stays zero, even at the kink
            return Dual(s, 0.0 * t)
        return Dual(s, _div(t, 2.0 * s))

    # comparisons look at the primal part only ------------------------------

    def __lt__(self, other):
        return primal_cmp(self, other) < 0

    def __le__(self, other):
        return primal_cmp(self, other) <= 0

    def __gt__(self, other):
        return primal_cmp(self, other) > 0

    def __ge__(self, other):
        return primal_cmp(self, other) >= 0

    def __eq__(self, other):
        if not isinstance(other, (Dual, Real)):
            return NotImplemented
        return primal_cmp(self, other) == 0

    def __ne__(self, other):
        if not isinstance(other, (Dual, Real)):
            return NotImplemented
        return primal_cmp(self, other) != 0

    def __hash__(self):
        return hash(self.value)


def _as_array(x):
    return np.asarray(x, dtype=float)


class DualArray:
    """A float64 vector of values paired with a vector of tangents.

    Elementwise this obeys the same rules as :class:`Dual`; it exists so
    vector updates run at numpy speed instead of one Python object per entry.
    """

    __slots__ = ("value", "tangent")
    __array_ufunc__ = None

    def __init__(self, value, tangent=None):
        value = _as_array(value)
        if tangent is None:
            tangent = np.zeros_like(value)
        else:
            tangent = _as_array(tangent)
            if tangent.shape != value.shape:
                raise ValueError(
                    f"tangent shape {tangent.shape} does not match value shape {value.shape}"
                )
        self.value = value
        self.tangent = tangent

    def __repr__(self):
        return f"DualArray({self.value!r}, {self.tangent!r})"

    def __len__(self):
        return len(self.value)

    @property
    def shape(self):
        return self.value.shape

    def __getitem__(self, idx):
        v = self.value[idx]
        if np.ndim(v) == 0:
            return Dual(float(v), float(self.tangent[idx]))
        return DualArray(v, self.tangent[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def copy(self):
        return DualArray(self.value.copy(), self.tangent.copy())

    @staticmethod
    def _split(other):
        """Return (value, tangent-or-None) for any operand."""
        if isinstance(other, (DualArray, Dual)):
            return other.value, other.tangent
        if isinstance(other, (Real, np.ndarray)):
            return other, None
        return None, None

    def __add__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        return DualArray(self.value + v, self.tangent if t is None else self.tangent + t)

    def __radd__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        return DualArray(v + self.value, self.tangent if t is None else t + self.tangent)

    def __sub__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        return DualArray(self.value - v, self.tangent if t is None else self.tangent - t)

    def __rsub__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        return DualArray(v - self.value, -self.tangent if t is None else t - self.tangent)

    def __mul__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        if t is None:
            return DualArray(self.value * v, self.tangent * v)
        return DualArray(self.value * v, self.tangent * v + self.value * t)

    def __rmul__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        if t is None:
            return DualArray(v * self.value, v * self.tangent)
        return DualArray(v * self.value, t * self.value + v * self.tangent)

    def __truediv__(self, other):
        v, t = self._split(other)
        if v is None:
            return NotImplemented
        if t is None:
            return DualArray(self.value / v, self.tangent / v)
        q = self.value / v
        return DualArray(q, (self.tangent - q * t) / v)

    def __neg__(self):
        return DualArray(-self.value, -self.tangent)

    def __pos__(self):
        return self

    def __abs__(self):
        sign = np.sign(self.value)
        return DualArray(np.abs(self.value), np.where(sign == 0, 0.0, self.tangent * sign))


# generic helpers -------------------------------------------------------------


def primal(x):
    """Primal part of a scalar or vector; identity for plain numbers."""
    if isinstance(x, (Dual, DualArray)):
        return x.value
    return x


def tangent(x):
    """Tangent part of a scalar or vector; zero for plain numbers."""
    if isinstance(x, (Dual, DualArray)):
        return x.tangent
    if isinstance(x, np.ndarray):
        return np.zeros_like(x, dtype=float)
    return 0.0


def primal_cmp(a, b) -> int:
    """Three-way comparison of primal parts; tangents are ignored.

    Raises :class:`ComparisonError` when either primal is NaN.
    """
    va, vb = primal(a), primal(b)
    if va != va or vb != vb:
        raise ComparisonError(f"unordered comparison between {a!r} and {b!r}")
    return (va > vb) - (va < vb)


def is_finite(x) -> bool:
    """True when the primal part (all entries, for vectors) is finite."""
    v = primal(x)
    if isinstance(v, np.ndarray):
        return bool(np.isfinite(v).all())
    return math.isfinite(v)


def sqrt(x):
    if isinstance(x, Dual):
        return x.sqrt()
    if x < 0:
        raise DomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def dot(a, b):
    """Euclidean inner product; returns a :class:`Dual` if either side is dual."""
    if isinstance(a, DualArray) or isinstance(b, DualArray):
        av, at = primal(a), tangent(a)
        bv, bt = primal(b), tangent(b)
        return Dual(np.dot(av, bv), np.dot(at, bv) + np.dot(av, bt))
    return np.dot(a, b)


def norm(x):
    return sqrt(dot(x, x))


def lift(value, tangent=None):
    """Pair a value (scalar or vector) with a tangent, zero by default."""
    if np.ndim(value) == 0 and not isinstance(value, np.ndarray):
        return Dual(value, 0.0 if tangent is None else tangent)
    return DualArray(value, tangent)
