"""Square roots of non-negative rationals, kept exact under products and comparisons."""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
import math


@total_ordering
class Sqrt:
    __slots__ = ("square",)

    def __init__(self, square):
        square = Fraction(square)
        if square < 0:
            raise ValueError("square must be non-negative")
        self.square = square

    @staticmethod
    def _square_of(x):
        if isinstance(x, Sqrt):
            return x.square
        if isinstance(x, (int, Fraction)):
            return Fraction(x) ** 2 if x >= 0 else None
        return NotImplemented

    def simplify(self):
        """A ``Fraction`` when the root is rational, otherwise ``self``."""
        n, d = self.square.numerator, self.square.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return self

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        if isinstance(other, (int, Fraction)) and other < 0:
            return -(Sqrt(self.square * Fraction(other) ** 2).simplify())
        sq = self._square_of(other)
        if sq is NotImplemented:
            return NotImplemented
        return Sqrt(self.square * sq).simplify()

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        sq = self._square_of(other)
        if sq is NotImplemented or sq is None:
            return NotImplemented if sq is NotImplemented else -(self / -other)
        return Sqrt(self.square / sq).simplify()

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        if isinstance(other, (int, Fraction)):
            return Fraction(other) * Sqrt(1 / self.square)
        return NotImplemented

    def __neg__(self):
        return -float(self)

    def __float__(self):
        return math.sqrt(self.square)

    def __eq__(self, other):
        if isinstance(other, float):
            return float(self) == other
        sq = self._square_of(other)
        if sq is NotImplemented:
            return NotImplemented
        return sq is not None and sq == self.square

    def __lt__(self, other):
        if isinstance(other, float):
            return float(self) < other
        if isinstance(other, (int, Fraction)) and other < 0:
            return False
        sq = self._square_of(other)
        if sq is NotImplemented:
            return NotImplemented
        return self.square < sq

    def __hash__(self):
        return hash(("sqrt", self.square))

    def __add__(self, other):
        return float(self) + float(other)

    __radd__ = __add__

    def __sub__(self, other):
        return float(self) - float(other)

    def __rsub__(self, other):
        return float(other) - float(self)

    def __repr__(self):
        return f"Sqrt({self.square})"

    __str__ = __repr__
