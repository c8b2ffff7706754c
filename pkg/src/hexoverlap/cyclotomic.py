"""Exact arithmetic in the twelfth cyclotomic field Q(zeta), zeta = exp(i*pi/6).

Elements are stored in the power basis {1, zeta, zeta^2, zeta^3}, reduced with
the minimal polynomial x^4 - x^2 + 1.  The real subfield Q(sqrt 3) gets its own
small type so that signs (and hence every geometric predicate) are decided
without floating point.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering
from numbers import Rational
from typing import Iterable, Tuple, Union

__all__ = [
    "CycloNum",
    "RealQuad",
    "Expansion",
    "ZERO",
    "ONE",
    "ZETA",
    "OMEGA",
    "I",
    "SQRT3",
    "zeta_pow",
    "mul",
    "conj",
    "field_inv",
    "expand",
    "embed",
    "re_im",
    "parse_cyclo",
]

Scalar = Union[int, Fraction]

_SQRT3_F = math.sqrt(3.0)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


def _sign_a_plus_b_sqrt3(a, b) -> int:
    """Exact sign of a + b*sqrt(3) for rationals (or ints) a, b."""
    if a >= 0 and b >= 0:
        return 0 if (a == 0 and b == 0) else 1
    if a <= 0 and b <= 0:
        return -1
    # opposite signs: compare a^2 with 3 b^2
    lhs, rhs = a * a, 3 * b * b
    if lhs == rhs:
        return 0
    if a > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


@total_ordering
class RealQuad:
    """Element a + b*sqrt(3) of the real quadratic field Q(sqrt 3)."""

    __slots__ = ("a", "b")

    def __init__(self, a: Scalar = 0, b: Scalar = 0):
        self.a = _frac(a)
        self.b = _frac(b)

    @classmethod
    def coerce(cls, x) -> "RealQuad":
        if isinstance(x, RealQuad):
            return x
        return cls(x, 0)

    def __repr__(self) -> str:
        return f"RealQuad({self.a}, {self.b})"

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}*sqrt3"

    def __iter__(self):
        yield self.a
        yield self.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __eq__(self, other) -> bool:
        try:
            o = RealQuad.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other) -> bool:
        return (self - RealQuad.coerce(other)).sign() < 0

    def __add__(self, other):
        o = RealQuad.coerce(other)
        return RealQuad(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return RealQuad(-self.a, -self.b)

    def __sub__(self, other):
        o = RealQuad.coerce(other)
        return RealQuad(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return RealQuad.coerce(other) - self

    def __mul__(self, other):
        o = RealQuad.coerce(other)
        return RealQuad(self.a * o.a + 3 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        """Field norm a^2 - 3 b^2."""
        return self.a * self.a - 3 * self.b * self.b

    def inverse(self) -> "RealQuad":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero")
        return RealQuad(self.a / n, -self.b / n)

    def __truediv__(self, other):
        return self * RealQuad.coerce(other).inverse()

    def __rtruediv__(self, other):
        return RealQuad.coerce(other) * self.inverse()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def sign(self) -> int:
        return _sign_a_plus_b_sqrt3(self.a, self.b)

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * _SQRT3_F

    def to_cyclo(self) -> "CycloNum":
        # sqrt3 = 2 zeta - zeta^3
        return CycloNum(self.a, 2 * self.b, 0, -self.b)


class CycloNum:
    """c0 + c1*zeta + c2*zeta^2 + c3*zeta^3 with rational coefficients.

    Instances are immutable and always reduced, so equality and hashing are
    plain coefficient comparisons.
    """

    __slots__ = ("c", "_hash")

    def __init__(self, c0: Scalar = 0, c1: Scalar = 0, c2: Scalar = 0, c3: Scalar = 0):
        self.c: Tuple[Fraction, Fraction, Fraction, Fraction] = (
            _frac(c0),
            _frac(c1),
            _frac(c2),
            _frac(c3),
        )
        self._hash = None

    @classmethod
    def _raw(cls, c) -> "CycloNum":
        obj = cls.__new__(cls)
        obj.c = c
        obj._hash = None
        return obj

    @classmethod
    def coerce(cls, x) -> "CycloNum":
        if isinstance(x, CycloNum):
            return x
        if isinstance(x, RealQuad):
            return x.to_cyclo()
        return cls(x)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[Scalar]) -> "CycloNum":
        c = tuple(coeffs)
        if len(c) != 4:
            raise ValueError("a CycloNum needs exactly four coefficients")
        return cls(*c)

    # --- protocol -------------------------------------------------------

    def __repr__(self) -> str:
        return "CycloNum(" + ", ".join(str(x) for x in self.c) + ")"

    def __str__(self) -> str:
        return self.serialize()

    def __iter__(self):
        return iter(self.c)

    def __getitem__(self, k):
        return self.c[k]

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.c)
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, CycloNum):
            return self.c == other.c
        if isinstance(other, (int, Fraction, RealQuad)):
            return self.c == CycloNum.coerce(other).c
        return NotImplemented

    def __lt__(self, other) -> bool:
        # lexicographic on coefficients; an arbitrary but total order used
        # only for canonical sorting
        return self.c < CycloNum.coerce(other).c

    def __bool__(self) -> bool:
        return any(self.c)

    def __add__(self, other):
        if not isinstance(other, CycloNum):
            try:
                other = CycloNum.coerce(other)
            except TypeError:
                return NotImplemented
        a, b = self.c, other.c
        return CycloNum._raw((a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]))

    __radd__ = __add__

    def __neg__(self):
        a = self.c
        return CycloNum._raw((-a[0], -a[1], -a[2], -a[3]))

    def __sub__(self, other):
        if not isinstance(other, CycloNum):
            try:
                other = CycloNum.coerce(other)
            except TypeError:
                return NotImplemented
        a, b = self.c, other.c
        return CycloNum._raw((a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]))

    def __rsub__(self, other):
        return CycloNum.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            k = _frac(other)
            return CycloNum._raw(tuple(k * x for x in self.c))
        if not isinstance(other, CycloNum):
            try:
                other = CycloNum.coerce(other)
            except TypeError:
                return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            k = _frac(other)
            if k == 0:
                raise ZeroDivisionError("division by zero")
            return CycloNum._raw(tuple(x / k for x in self.c))
        return mul(self, field_inv(CycloNum.coerce(other)))

    def __pow__(self, n: int):
        if n < 0:
            return field_inv(self) ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # --- convenience ----------------------------------------------------

    def conj(self) -> "CycloNum":
        return conj(self)

    def re_im(self) -> Tuple[RealQuad, RealQuad]:
        return re_im(self)

    def embed(self) -> Tuple[float, float]:
        return embed(self)

    def norm2(self) -> RealQuad:
        """|x|^2 as an exact element of Q(sqrt 3)."""
        re, im = re_im(self)
        return re * re + im * im

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for x in self.c)

    def denominator(self) -> int:
        d = 1
        for x in self.c:
            d = d * x.denominator // math.gcd(d, x.denominator)
        return d

    def serialize(self) -> str:
        return ",".join(f"{x.numerator}/{x.denominator}" for x in self.c)


def parse_cyclo(text: str) -> CycloNum:
    """Inverse of :meth:`CycloNum.serialize`; raises ValueError on bad input."""
    parts = text.strip().split(",")
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated rationals, got {len(parts)}")
    coeffs = []
    for p in parts:
        p = p.strip()
        num, sep, den = p.partition("/")
        try:
            n = int(num)
            d = int(den) if sep else 1
        except ValueError:
            raise ValueError(f"malformed rational {p!r}") from None
        if d == 0:
            raise ValueError(f"zero denominator in {p!r}")
        coeffs.append(Fraction(n, d))
    return CycloNum(*coeffs)


def mul(x: CycloNum, y: CycloNum) -> CycloNum:
    a0, a1, a2, a3 = x.c
    b0, b1, b2, b3 = y.c
    e0 = a0 * b0
    e1 = a0 * b1 + a1 * b0
    e2 = a0 * b2 + a1 * b1 + a2 * b0
    e3 = a0 * b3 + a1 * b2 + a2 * b1 + a3 * b0
    e4 = a1 * b3 + a2 * b2 + a3 * b1
    e5 = a2 * b3 + a3 * b2
    e6 = a3 * b3
    # zeta^6 = -1, zeta^5 = zeta^3 - zeta, zeta^4 = zeta^2 - 1
    return CycloNum._raw((e0 - e6 - e4, e1 - e5, e2 + e4, e3 + e5))


def conj(x: CycloNum) -> CycloNum:
    c0, c1, c2, c3 = x.c
    # zeta -> zeta - zeta^3, zeta^2 -> 1 - zeta^2, zeta^3 -> -zeta^3
    return CycloNum._raw((c0 + c2, c1, -c2, -c1 - c3))


def re_im(x: CycloNum) -> Tuple[RealQuad, RealQuad]:
    c0, c1, c2, c3 = x.c
    return RealQuad(c0 + c2 / 2, c1 / 2), RealQuad(c1 / 2 + c3, c2 / 2)


def field_inv(x: CycloNum) -> CycloNum:
    if not x:
        raise ZeroDivisionError("division by zero")
    return mul(conj(x), x.norm2().inverse().to_cyclo())


def embed(x: CycloNum) -> Tuple[float, float]:
    """Double-precision (Re, Im); for rendering and diagnostics only."""
    re, im = re_im(x)
    return float(re), float(im)


ZERO = CycloNum(0)
ONE = CycloNum(1)
ZETA = CycloNum(0, 1)
OMEGA = CycloNum(0, 0, 1)
I = CycloNum(0, 0, 0, 1)
SQRT3 = RealQuad(0, 1)


def zeta_pow(k: int) -> CycloNum:
    """zeta**k for any integer k (exponent taken mod 12)."""
    k %= 12
    sign = 1
    if k >= 6:
        k -= 6
        sign = -1
    table = {
        0: (1, 0, 0, 0),
        1: (0, 1, 0, 0),
        2: (0, 0, 1, 0),
        3: (0, 0, 0, 1),
        4: (-1, 0, 1, 0),
        5: (0, -1, 0, 1),
    }
    return CycloNum(*(sign * v for v in table[k]))


class Expansion:
    """Real-linear map z -> a*z + b*conj(z) with a, b in Q(zeta)."""

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = CycloNum.coerce(a)
        self.b = CycloNum.coerce(b)

    def __repr__(self) -> str:
        return f"Expansion(a={self.a.serialize()}, b={self.b.serialize()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expansion) and self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __call__(self, z: CycloNum) -> CycloNum:
        return expand(self, z)

    def determinant(self) -> RealQuad:
        """Determinant of the induced 2x2 real map, |a|^2 - |b|^2, exact."""
        return self.a.norm2() - self.b.norm2()

    def real_matrix(self):
        """2x2 float matrix of the map (diagnostics)."""
        ar, ai = embed(self.a)
        br, bi = embed(self.b)
        return [[ar + br, -ai + bi], [ai + bi, ar - br]]

    def singular_values(self):
        import numpy as np

        return tuple(float(s) for s in np.linalg.svd(np.array(self.real_matrix()), compute_uv=False))

    def is_expansive(self) -> bool:
        return min(self.singular_values()) > 1.0

    def coefficient_matrix(self):
        """4x4 rational matrix M with coeffs(Q z) = M @ coeffs(z)."""
        basis = [zeta_pow(k) for k in range(4)]
        cols = [expand(self, e).c for e in basis]
        return [[cols[j][i] for j in range(4)] for i in range(4)]

    def is_integral(self) -> bool:
        return self.a.is_integral() and self.b.is_integral()


def expand(E: Expansion, z: CycloNum) -> CycloNum:
    out = mul(E.a, z) if E.a else ZERO
    if E.b:
        out = out + mul(E.b, conj(z))
    return out
