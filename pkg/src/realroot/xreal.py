"""Extended-range binary floating point.

An :class:`XReal` holds ``m * 2**e`` with a float mantissa ``0.5 <= |m| < 1``
(or ``m == 0``) and an unbounded integer exponent.  Arithmetic rounds to
nearest in the mantissa, so every operation carries a relative error of at
most ``2**-53``; :meth:`XReal.next_up` / :meth:`XReal.next_down` give one-ulp
outward nudges where a caller needs a directed bound.

Log-magnitudes of the block coefficients are ``-2**j`` and reach far past the
float64 exponent range, which is the only reason this type exists.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import mpmath

Number = Union["XReal", int, float, Fraction]

_LN2 = math.log(2.0)
_LOG10_2 = math.log10(2.0)


class XReal:
    __slots__ = ("m", "e")

    def __init__(self, m: float = 0.0, e: int = 0):
        m = float(m)
        if not math.isfinite(m):
            raise ValueError(f"non-finite mantissa {m!r}")
        if m == 0.0:
            self.m, self.e = 0.0, 0
            return
        fm, fe = math.frexp(m)
        self.m = fm
        self.e = int(e) + fe

    # -- construction -------------------------------------------------------

    @classmethod
    def of(cls, x: Number) -> "XReal":
        if isinstance(x, XReal):
            return x
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, int):
            return cls.from_int(x)
        if isinstance(x, Fraction):
            return cls.from_int(x.numerator) / cls.from_int(x.denominator)
        return cls(float(x), 0)

    @classmethod
    def from_int(cls, k: int) -> "XReal":
        bl = abs(k).bit_length()
        if bl <= 53:
            return cls(float(k), 0)
        shift = bl - 64
        top = abs(k) >> shift
        return cls(math.copysign(float(top), k), shift)

    @classmethod
    def pow2(cls, k: int) -> "XReal":
        """Exactly ``2**k``."""
        return cls(0.5, k + 1)

    # -- conversion ---------------------------------------------------------

    def __float__(self) -> float:
        try:
            return math.ldexp(self.m, self.e)
        except OverflowError:
            return math.copysign(math.inf, self.m)

    def to_mpf(self) -> mpmath.mpf:
        return mpmath.ldexp(mpmath.mpf(self.m), self.e)

    def to_fraction(self) -> Fraction:
        num = Fraction(self.m)
        return num * (Fraction(2) ** self.e)

    @property
    def is_zero(self) -> bool:
        return self.m == 0.0

    def sign(self) -> int:
        return (self.m > 0) - (self.m < 0)

    def log(self) -> float:
        """Natural log of a positive value, as a float (exponent enters exactly scaled)."""
        if self.m <= 0:
            raise ValueError("log of non-positive XReal")
        return math.log(self.m) + self.e * _LN2

    def ldexp(self, k: int) -> "XReal":
        if self.m == 0.0:
            return self
        out = XReal.__new__(XReal)
        out.m, out.e = self.m, self.e + int(k)
        return out

    def next_up(self) -> "XReal":
        if self.m == 0.0:
            return XReal(5e-324)
        return XReal(math.nextafter(self.m, math.inf), self.e)

    def next_down(self) -> "XReal":
        if self.m == 0.0:
            return XReal(-5e-324)
        return XReal(math.nextafter(self.m, -math.inf), self.e)

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "XReal":
        out = XReal.__new__(XReal)
        out.m, out.e = -self.m, self.e
        return out

    def __abs__(self) -> "XReal":
        return -self if self.m < 0 else self

    def __add__(self, other: Number) -> "XReal":
        b = XReal.of(other)
        a = self
        if a.m == 0.0:
            return b
        if b.m == 0.0:
            return a
        if a.e < b.e:
            a, b = b, a
        d = a.e - b.e
        if d > 1100:
            return a
        return XReal(a.m + math.ldexp(b.m, -d), a.e)

    __radd__ = __add__

    def __sub__(self, other: Number) -> "XReal":
        return self + (-XReal.of(other))

    def __rsub__(self, other: Number) -> "XReal":
        return XReal.of(other) - self

    def __mul__(self, other: Number) -> "XReal":
        b = XReal.of(other)
        if self.m == 0.0 or b.m == 0.0:
            return XReal()
        return XReal(self.m * b.m, self.e + b.e)

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "XReal":
        b = XReal.of(other)
        if b.m == 0.0:
            raise ZeroDivisionError("XReal division by zero")
        if self.m == 0.0:
            return XReal()
        return XReal(self.m / b.m, self.e - b.e)

    def __rtruediv__(self, other: Number) -> "XReal":
        return XReal.of(other) / self

    # -- ordering -----------------------------------------------------------

    def _cmp(self, other: Number) -> int:
        b = XReal.of(other)
        sa, sb = self.sign(), b.sign()
        if sa != sb:
            return (sa > sb) - (sa < sb)
        if sa == 0:
            return 0
        if self.e != b.e:
            mag = 1 if self.e > b.e else -1
        else:
            mag = (abs(self.m) > abs(b.m)) - (abs(self.m) < abs(b.m))
        return mag * sa

    def __lt__(self, other: Number) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: Number) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: Number) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: Number) -> bool:
        return self._cmp(other) >= 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (XReal, int, float, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __hash__(self) -> int:
        return hash((self.m, self.e))

    # -- text -----------------------------------------------------------------

    def __repr__(self) -> str:
        return f"XReal({self.m!r}, {self.e})"

    def __str__(self) -> str:
        return format_sci(self)


def xmin(a: XReal, b: XReal) -> XReal:
    return a if a <= b else b


def xmax(a: XReal, b: XReal) -> XReal:
    return a if a >= b else b


def format_sci(x: XReal, digits: int = 17) -> str:
    """Decimal text for any magnitude; plain ``repr`` when it fits a float."""
    if x.is_zero:
        return "0.0"
    f = float(x)
    if math.isfinite(f) and abs(f) > 1e-300:
        return repr(f)
    l10 = math.log10(abs(x.m)) + x.e * _LOG10_2
    ex = math.floor(l10)
    mant = 10.0 ** (l10 - ex)
    if mant >= 10.0:
        mant /= 10.0
        ex += 1
    return f"{'-' if x.m < 0 else ''}{mant:.{digits - 1}f}e{ex:+d}"


def parse_sci(text: str) -> XReal:
    """Inverse of :func:`format_sci` (exact for floats, ~1e-12 relative otherwise)."""
    text = text.strip()
    f = float(text)
    if math.isfinite(f) and abs(f) > 1e-300:
        return XReal(f)
    mant, _, ex = text.lower().partition("e")
    m = float(mant)
    if m == 0.0:
        return XReal()
    k = int(ex)
    # 10**k = 2**(k*log2 10); split into integer and fractional powers of two
    l2 = k / _LOG10_2
    ie = math.floor(l2)
    return XReal(m * 2.0 ** (l2 - ie), ie)
