"""Signed log-scale numbers for walk values far beyond fixed-width integers."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class LogMagnitude:
    """``sign * exp(lnmag)``; ``exact`` carries the integer when it is known.

    Walk values have ``lnmag >= 0``; scaled values such as ``max / (2n)`` may
    drop below one, so negative ``lnmag`` is accepted.

    Comparisons use the exact integers when both sides have them, otherwise
    the key ``(sign, sign * lnmag)``. ``lnmag`` may be an ``mpmath.mpf`` for
    magnitudes whose logarithm itself overflows a double.
    """

    sign: int
    lnmag: float = 0.0
    exact: Optional[int] = None

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")

    @classmethod
    def from_int(cls, x: int) -> "LogMagnitude":
        x = int(x)
        if x == 0:
            return cls(0, 0.0, 0)
        return cls(1 if x > 0 else -1, math.log(abs(x)), x)

    @classmethod
    def from_log(cls, lnmag, sign: int = 1) -> "LogMagnitude":
        return cls(sign, lnmag)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def to_int(self) -> int:
        if self.exact is None:
            raise OverflowError("value is only known on the log scale")
        return self.exact

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.exact is not None:
            return float(self.exact)
        return self.sign * math.exp(float(self.lnmag)) if self.lnmag < 709.7 else self.sign * math.inf

    def _key(self):
        return (self.sign, self.sign * self.lnmag)

    def __eq__(self, other):
        if not isinstance(other, LogMagnitude):
            return NotImplemented
        if self.exact is not None and other.exact is not None:
            return self.exact == other.exact
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        return self._key() == other._key()

    def __lt__(self, other):
        if not isinstance(other, LogMagnitude):
            return NotImplemented
        if self.exact is not None and other.exact is not None:
            return self.exact < other.exact
        if self.sign != other.sign:
            return self.sign < other.sign
        if self.sign == 0:
            return False
        return self.sign * self.lnmag < other.sign * other.lnmag

    def __hash__(self):
        return hash(self._key())

    def scale(self, c: float) -> "LogMagnitude":
        """Multiply by a positive constant: lnmag shifts by ln c."""
        if c <= 0:
            raise ValueError("scale factor must be positive")
        if self.sign == 0:
            return self
        return LogMagnitude(self.sign, self.lnmag + math.log(c))

    def minus_scaled(self, other: "LogMagnitude", c: float) -> "LogMagnitude":
        """``self - c * other`` for nonnegative operands, on the log scale.

        Returns sign 0 when the difference is not positive.
        """
        if self.sign < 0 or other.sign < 0:
            raise ValueError("minus_scaled expects nonnegative operands")
        if self.sign == 0:
            return LogMagnitude(0)
        if other.sign == 0 or c == 0:
            return self
        gap = (other.lnmag + math.log(c)) - self.lnmag
        if gap >= 0:
            return LogMagnitude(0)
        return LogMagnitude(1, self.lnmag + math.log1p(-math.exp(gap)))

    def __repr__(self):
        if self.exact is not None:
            return f"LogMagnitude({self.exact})"
        return f"LogMagnitude(sign={self.sign}, lnmag={self.lnmag!r})"
