"""Exact scalars: rationals (gmpy2.mpq) and Gaussian rationals a + b*i."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC

from gmpy2 import mpq

Rational = type(mpq(0))

_ZERO = mpq(0)
_ONE = mpq(1)


class ExactTypeError(TypeError):
    pass


def to_rational(value) -> Rational:
    """Coerce ints, Fractions, mpq and 'p/q' strings to an exact rational.

    Floats are rejected: silently turning 0.1 into 3602879701896397/2**55
    has bitten us before.
    """
    if isinstance(value, Rational):
        return value
    if isinstance(value, (int, Fraction, _RationalABC)) and not isinstance(value, bool):
        return mpq(value)
    if isinstance(value, bool):
        return mpq(int(value))
    if isinstance(value, str):
        return mpq(Fraction(value.strip()))
    if type(value).__name__ == "mpz":
        return mpq(value)
    raise ExactTypeError(f"cannot make an exact rational from {value!r}")


class GaussianRational:
    """Exact complex number re + im*i with rational parts. Immutable."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", to_rational(re))
        object.__setattr__(self, "im", to_rational(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def _raw(cls, re, im):
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            raise ExactTypeError(f"cannot make an exact scalar from float complex {value!r}")
        return cls._raw(to_rational(value), _ZERO)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def __bool__(self):
        return not self.is_zero()

    def is_real(self) -> bool:
        return not self.im

    def __add__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def __mul__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return GaussianRational._raw(a * c, _ZERO)
        return GaussianRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        a, b = self.re, self.im
        if not b:
            if not a:
                raise ZeroDivisionError("GaussianRational division by zero")
            return GaussianRational._raw(1 / a, _ZERO)
        n = a * a + b * b
        return GaussianRational._raw(a / n, -b / n)

    def __truediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self.re, -self.im)

    def norm2(self) -> Rational:
        return self.re * self.re + self.im * self.im

    def __eq__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_pair(self):
        """JSON form: [[re_num, re_den], [im_num, im_den]]."""
        return [[int(self.re.numerator), int(self.re.denominator)],
                [int(self.im.numerator), int(self.im.denominator)]]

    @classmethod
    def from_pair(cls, pair) -> "GaussianRational":
        (rn, rd), (iname, idn) = pair
        return cls._raw(mpq(rn, rd), mpq(iname, idn))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


def _coerce_or_none(value):
    if isinstance(value, GaussianRational):
        return value
    try:
        return GaussianRational.coerce(value)
    except ExactTypeError:
        return None


ZERO = GaussianRational._raw(_ZERO, _ZERO)
ONE = GaussianRational._raw(_ONE, _ZERO)
I = GaussianRational._raw(_ZERO, _ONE)


def gq(re=0, im=0) -> GaussianRational:
    return GaussianRational(re, im)


def format_scalar(z: GaussianRational) -> str:
    re, im = z.re, z.im
    if not im:
        return str(re)
    if not re:
        if im == 1:
            return "i"
        if im == -1:
            return "-i"
        return f"{im}*i"
    sign = "+" if im > 0 else "-"
    mag = abs(im)
    imag = "i" if mag == 1 else f"{mag}*i"
    return f"({re} {sign} {imag})"


__all__ = [
    "Rational",
    "GaussianRational",
    "ExactTypeError",
    "to_rational",
    "gq",
    "ZERO",
    "ONE",
    "I",
    "format_scalar",
]
