"""Exact scalars in the number field Q(i, sqrt7).

A value is stored on the fixed basis (1, i, sqrt7, i*sqrt7) with rational
components, so equality is plain component equality.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

SQRT7 = 7 ** 0.5

Number = Union[int, Fraction, "Scalar"]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to a rational")


class Scalar:
    """Element a + b*i + c*sqrt7 + d*i*sqrt7 with rational a, b, c, d."""

    __slots__ = ("_c", "_hash")

    def __init__(self, a=0, b=0, c=0, d=0):
        self._c = (_rat(a), _rat(b), _rat(c), _rat(d))
        self._hash = None

    @classmethod
    def _raw(cls, comps: tuple) -> "Scalar":
        obj = object.__new__(cls)
        obj._c = comps
        obj._hash = None
        return obj

    @classmethod
    def coerce(cls, x: Number) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        return cls._raw((_rat(x), _ZERO, _ZERO, _ZERO))

    @property
    def components(self) -> tuple:
        return self._c

    @property
    def a(self) -> Fraction:
        return self._c[0]

    @property
    def b(self) -> Fraction:
        return self._c[1]

    @property
    def c(self) -> Fraction:
        return self._c[2]

    @property
    def d(self) -> Fraction:
        return self._c[3]

    def is_zero(self) -> bool:
        return not any(self._c)

    def is_rational(self) -> bool:
        return not (self._c[1] or self._c[2] or self._c[3])

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self._c[0] == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self._c[0])
            else:
                self._hash = hash(self._c)
        return self._hash

    def __lt__(self, other: "Scalar") -> bool:
        return self._c < Scalar.coerce(other)._c

    def __add__(self, other: Number) -> "Scalar":
        o = Scalar.coerce(other)._c
        s = self._c
        return Scalar._raw((s[0] + o[0], s[1] + o[1], s[2] + o[2], s[3] + o[3]))

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        s = self._c
        return Scalar._raw((-s[0], -s[1], -s[2], -s[3]))

    def __sub__(self, other: Number) -> "Scalar":
        return self + (-Scalar.coerce(other))

    def __rsub__(self, other: Number) -> "Scalar":
        return Scalar.coerce(other) - self

    def __mul__(self, other: Number) -> "Scalar":
        if not isinstance(other, Scalar):
            if isinstance(other, (int, Fraction)):
                r = _rat(other)
                s = self._c
                return Scalar._raw((s[0] * r, s[1] * r, s[2] * r, s[3] * r))
            return NotImplemented
        a, b, c, d = self._c
        e, f, g, h = other._c
        if not (f or g or h):
            return Scalar._raw((a * e, b * e, c * e, d * e))
        if not (b or c or d):
            return Scalar._raw((a * e, a * f, a * g, a * h))
        return Scalar._raw((
            a * e - b * f + 7 * c * g - 7 * d * h,
            a * f + b * e + 7 * c * h + 7 * d * g,
            a * g + c * e - b * h - d * f,
            a * h + d * e + b * g + c * f,
        ))

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero scalar")
        a, b, c, d = self._c
        if not (b or c or d):
            return Scalar._raw((1 / a, _ZERO, _ZERO, _ZERO))
        # x = u + i v with u = a + c s, v = b + d s in Q(sqrt7)
        # n = u^2 + v^2 = p + q s
        p = a * a + 7 * c * c + b * b + 7 * d * d
        q = 2 * a * c + 2 * b * d
        norm = p * p - 7 * q * q
        # 1/n = (p - q s) / norm
        np_, nq = p / norm, -q / norm
        # conj(x) = u - i v = a + c s - i b - i d s
        return Scalar._raw((a, -b, c, -d)) * Scalar._raw((np_, _ZERO, nq, _ZERO))

    def __truediv__(self, other: Number) -> "Scalar":
        return self * Scalar.coerce(other).inverse()

    def __rtruediv__(self, other: Number) -> "Scalar":
        return Scalar.coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "Scalar":
        """Complex conjugation i -> -i."""
        a, b, c, d = self._c
        return Scalar._raw((a, -b, c, -d))

    def __complex__(self) -> complex:
        a, b, c, d = (float(x) for x in self._c)
        return complex(a + c * SQRT7, b + d * SQRT7)

    def to_complex(self) -> complex:
        return complex(self)

    def to_json(self) -> dict:
        return {k: str(v) for k, v in zip("abcd", self._c)}

    @classmethod
    def from_json(cls, obj: dict) -> "Scalar":
        return cls(*(Fraction(obj.get(k, "0")) for k in "abcd"))

    def __repr__(self) -> str:
        return f"Scalar({self})"

    def __str__(self) -> str:
        return format_scalar(self)


def format_scalar(x: Scalar) -> str:
    """Canonical text: rational parts joined with i, sqrt7, i*sqrt7."""
    parts = []
    for coef, unit in zip(x.components, ("", "i", "sqrt7", "i*sqrt7")):
        if not coef:
            continue
        if unit == "":
            parts.append(str(coef))
        elif coef == 1:
            parts.append(unit)
        elif coef == -1:
            parts.append("-" + unit)
        else:
            parts.append(f"{coef}*{unit}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += p if p.startswith("-") else "+" + p
    return out


ZERO = Scalar()
ONE = Scalar(1)
I = Scalar(0, 1)
SQRT7_S = Scalar(0, 0, 1)
HALF = Scalar(Fraction(1, 2))


def scalar_mul(x: Number, y: Number) -> Scalar:
    return Scalar.coerce(x) * Scalar.coerce(y)


def scalar_inv(x: Number) -> Scalar:
    return Scalar.coerce(x).inverse()
