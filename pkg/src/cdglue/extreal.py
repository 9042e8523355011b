"""Explicit value-or-infinity arithmetic.

Distortion coefficients are extended reals: finite values below a cutoff,
+infinity at or beyond it.  The infinity is carried as an explicit flag
(never as a bare sentinel float inside formulas) and the multiplication
convention 0 * inf = 0 is built in, so coefficient products stay meaningful
at the cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ExtendedReal:
    value: float = 0.0
    infinite: bool = False

    @classmethod
    def of(cls, x: float) -> "ExtendedReal":
        x = float(x)
        if math.isnan(x):
            raise ValueError("ExtendedReal cannot hold NaN")
        if math.isinf(x):
            if x < 0:
                raise ValueError("only +infinity is representable")
            return cls.infinity()
        return cls(x, False)

    @classmethod
    def infinity(cls) -> "ExtendedReal":
        return cls(math.inf, True)

    @property
    def is_finite(self) -> bool:
        return not self.infinite

    def as_float(self) -> float:
        """Escape hatch for numpy interop; +inf stands for the infinite flag."""
        return math.inf if self.infinite else self.value

    @staticmethod
    def _coerce(x) -> "ExtendedReal":
        if isinstance(x, ExtendedReal):
            return x
        return ExtendedReal.of(x)

    def times(self, other) -> "ExtendedReal":
        other = self._coerce(other)
        if self.infinite or other.infinite:
            # 0 * inf = 0 by convention
            if (self.is_finite and self.value == 0.0) or (
                other.is_finite and other.value == 0.0
            ):
                return ExtendedReal.of(0.0)
            return ExtendedReal.infinity()
        return ExtendedReal.of(self.value * other.value)

    def plus(self, other) -> "ExtendedReal":
        other = self._coerce(other)
        if self.infinite or other.infinite:
            return ExtendedReal.infinity()
        return ExtendedReal.of(self.value + other.value)

    def power(self, p: float) -> "ExtendedReal":
        if self.infinite:
            if p > 0:
                return ExtendedReal.infinity()
            if p == 0:
                return ExtendedReal.of(1.0)
            return ExtendedReal.of(0.0)
        return ExtendedReal.of(self.value**p)

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if self.infinite:
            return False
        if other.infinite:
            return True
        return self.value < other.value

    def __le__(self, other) -> bool:
        other = self._coerce(other)
        return self == other or self < other

    def __gt__(self, other) -> bool:
        return self._coerce(other) < self

    def __ge__(self, other) -> bool:
        return self._coerce(other) <= self

    def __eq__(self, other) -> bool:
        if not isinstance(other, (ExtendedReal, int, float)):
            return NotImplemented
        other = self._coerce(other)
        if self.infinite or other.infinite:
            return self.infinite and other.infinite
        return self.value == other.value

    def __hash__(self) -> int:
        return hash(("inf",)) if self.infinite else hash(self.value)

    def __repr__(self) -> str:
        return "ExtendedReal(inf)" if self.infinite else f"ExtendedReal({self.value!r})"
