"""Exact arithmetic in real quadratic fields.

Values of periodic continued fractions are quadratic irrationals, so the
rotation numbers this toolkit targets (golden mean, silver ratio, periodic
words, and canonical extensions of finite quotient lists) can be carried
exactly as ``(a + b*sqrt(d)) / c`` with integer ``a, b, c`` and a fixed
non-square ``d > 0``.  All field operations and order comparisons are exact;
conversion to a float only happens at a caller-chosen precision.
"""

from __future__ import annotations

from math import gcd, isqrt

import mpmath

from .errors import InvalidInputError


def _is_square(n: int) -> bool:
    if n < 0:
        return False
    r = isqrt(n)
    return r * r == n


class QuadraticIrrational:
    """An element (a + b*sqrt(d)) / c of Q(sqrt(d)), stored in lowest terms.

    ``d`` must be a positive non-square integer.  Rationals are representable
    with b = 0.  Arithmetic between two elements requires equal ``d`` (pure
    rationals adapt to either side).
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: int, b: int, c: int, d: int):
        if c == 0:
            raise InvalidInputError("zero denominator in quadratic irrational")
        if b != 0 and (d <= 0 or _is_square(d)):
            raise InvalidInputError(f"d must be a positive non-square, got {d}")
        if c < 0:
            a, b, c = -a, -b, -c
        g = gcd(gcd(abs(a), abs(b)), c)
        if g > 1:
            a, b, c = a // g, b // g, c // g
        self.a = a
        self.b = b
        self.c = c
        self.d = d if b != 0 else 0  # rationals forget the field

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_int(cls, n: int) -> "QuadraticIrrational":
        return cls(n, 0, 1, 0)

    @classmethod
    def from_fraction(cls, num: int, den: int) -> "QuadraticIrrational":
        return cls(num, 0, den, 0)

    @classmethod
    def from_periodic_cf(cls, word, preperiod=()) -> "QuadraticIrrational":
        """Exact value of [b_1, .., b_m, w_1, .., w_k, w_1, .., w_k, ...].

        Quotient convention: x = 1/(a_1 + 1/(a_2 + ...)), so the value lies
        in (0, 1).  The purely periodic tail solves a Moebius fixed-point
        equation; the preperiod is then unwound backwards.
        """
        word = tuple(int(a) for a in word)
        preperiod = tuple(int(a) for a in preperiod)
        if not word:
            raise InvalidInputError("empty periodic word")
        if any(a < 1 for a in word) or any(a < 1 for a in preperiod):
            raise InvalidInputError("partial quotients must be >= 1")
        # Each step x -> 1/(a + x) is the Moebius map [[0, 1], [1, a]];
        # one period is the left-to-right product of these matrices.
        A, B, C, D = 0, 1, 1, word[0]
        for a in word[1:]:
            A, B, C, D = B, A + a * B, D, C + a * D
        # tail beta satisfies beta = (A beta + B) / (C beta + D)
        # i.e. C beta^2 + (D - A) beta - B = 0, with B, C > 0.
        disc = (A - D) * (A - D) + 4 * B * C
        if _is_square(disc):
            # Degenerate (cannot happen for valid quotients, but be safe).
            r = isqrt(disc)
            beta = cls(A - D + r, 0, 2 * C, 0)
        else:
            beta = cls(A - D, 1, 2 * C, disc)
        value = beta
        for a in reversed(preperiod):
            value = (cls.from_int(a) + value).inverse()
        return value

    # -- helpers --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, QuadraticIrrational):
            if self.b != 0 and other.b != 0 and self.d != other.d:
                raise InvalidInputError(
                    f"mixed quadratic fields: sqrt({self.d}) vs sqrt({other.d})"
                )
            return other
        if isinstance(other, int):
            return QuadraticIrrational.from_int(other)
        return NotImplemented

    def _field_d(self, other) -> int:
        return self.d or other.d

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        d = self._field_d(other)
        a = self.a * other.c + other.a * self.c
        b = self.b * other.c + other.b * self.c
        return QuadraticIrrational(a, b, self.c * other.c, d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticIrrational(-self.a, -self.b, self.c, self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        d = self._field_d(other)
        a = self.a * other.a + self.b * other.b * d
        b = self.a * other.b + self.b * other.a
        return QuadraticIrrational(a, b, self.c * other.c, d)

    __rmul__ = __mul__

    def inverse(self) -> "QuadraticIrrational":
        # c / (a + b sqrt(d)) = c (a - b sqrt(d)) / (a^2 - b^2 d)
        norm = self.a * self.a - self.b * self.b * self.d
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadraticIrrational(
            self.c * self.a, -self.c * self.b, norm, self.d
        )

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    # -- exact order ----------------------------------------------------

    def sign(self) -> int:
        """Exact sign of the value, by integer arithmetic only."""
        a, b, d = self.a, self.b, self.d
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare a^2 with b^2 d
        lhs, rhs = a * a, b * b * d
        if a > 0:  # b < 0
            return 1 if lhs > rhs else (-1 if lhs < rhs else 0)
        return -1 if lhs > rhs else (1 if lhs < rhs else 0)

    def _cmp(self, other) -> int:
        other = self._coerce(other)
        if other is NotImplemented:
            raise TypeError("cannot compare")
        return (self - other).sign()

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    # -- conversion -----------------------------------------------------

    def to_mpf(self, prec: int = 256) -> mpmath.mpf:
        """Evaluate at ``prec`` bits (with guard bits for the sqrt)."""
        with mpmath.workprec(prec + 16):
            value = (self.a + self.b * mpmath.sqrt(self.d)) / self.c
        with mpmath.workprec(prec):
            return +value

    def __float__(self) -> float:
        return float(self.to_mpf(80))

    def __repr__(self):
        if self.b == 0:
            return f"QuadraticIrrational({self.a}/{self.c})"
        return f"QuadraticIrrational(({self.a} + {self.b}*sqrt({self.d}))/{self.c})"


def golden_mean() -> QuadraticIrrational:
    """(sqrt(5) - 1) / 2, the value of [1, 1, 1, ...]."""
    return QuadraticIrrational(-1, 1, 2, 5)
