"""Exact arithmetic on the unit interval [0,1) under addition modulo 1.

Values are stored as unsigned 64-bit integers in Q0.64 fixed point: the
raw integer k denotes k * 2**-64.  Addition wraps modulo 2**64, which is
exactly mod-1 addition on the represented values, so every algebraic
identity of the masking protocol (mask cancellation, conservation of the
fractional sum) holds bit-for-bit instead of up to floating-point error.

Uniform sampling of a raw 64-bit integer is an exact uniform distribution
on this lattice and stands in for Uniform[0,1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Union

__all__ = [
    "UFrac",
    "RealLike",
    "FRAC_BITS",
    "MOD",
    "from_real",
    "add",
    "neg",
    "sum_frac",
    "to_real",
    "mod1_distance",
]

# Exact real inputs: floats are exact binary rationals; strings and
# Decimals carry exact decimal literals (0.1 as one tenth, not as the
# nearest double).
RealLike = Union[float, int, Fraction, Decimal, str]

FRAC_BITS = 64
MOD = 1 << FRAC_BITS
_MASK = MOD - 1
# Largest double strictly below 1.0; to_real must stay inside [0,1).
_ONE_BELOW = math.nextafter(1.0, 0.0)


@dataclass(frozen=True, slots=True)
class UFrac:
    """One point of the Q0.64 lattice: ``raw * 2**-64`` in [0,1)."""

    raw: int

    def __post_init__(self) -> None:
        if not 0 <= self.raw < MOD:
            raise ValueError(f"raw value {self.raw} outside [0, 2**64)")

    def __add__(self, other: "UFrac") -> "UFrac":
        return UFrac((self.raw + other.raw) & _MASK)

    def __neg__(self) -> "UFrac":
        return UFrac((MOD - self.raw) & _MASK)

    def __sub__(self, other: "UFrac") -> "UFrac":
        return UFrac((self.raw - other.raw) & _MASK)

    def __float__(self) -> float:
        return to_real(self)

    def as_fraction(self) -> Fraction:
        """The exact rational value of this lattice point."""
        return Fraction(self.raw, MOD)

    def __repr__(self) -> str:
        return f"UFrac({self.raw})"


ZERO = UFrac(0)


def from_real(x: RealLike) -> UFrac:
    """Quantize a finite real to the nearest lattice point of frac(x).

    Rounds half toward zero.  The mod-1 distance between the result and
    the exact fractional part of ``x`` is at most 2**-65.  Pass a string
    or Decimal to quantize a decimal literal exactly (a float argument
    is quantized at its exact binary value, which for non-dyadic
    decimals already differs from the literal by ~1e-17).
    """
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"cannot quantize non-finite value {x!r}")
    f = Fraction(x) % 1  # exact: every accepted input is an exact rational
    scaled = f * MOD
    k = scaled.numerator // scaled.denominator
    rem = scaled - k
    if rem > Fraction(1, 2):
        k += 1
    return UFrac(k & _MASK)


def add(a: UFrac, b: UFrac) -> UFrac:
    """frac(a + b), exact: wrapping 64-bit addition."""
    return UFrac((a.raw + b.raw) & _MASK)


def neg(a: UFrac) -> UFrac:
    """The additive inverse: add(a, neg(a)) == 0; neg(0) == 0.

    For a != 0 this equals 1 - a.
    """
    return UFrac((MOD - a.raw) & _MASK)


def sum_frac(values: Iterable[UFrac]) -> UFrac:
    """Fold of add over ``values``; exactly order-independent."""
    total = 0
    for v in values:
        total += v.raw
    return UFrac(total & _MASK)


def to_real(a: UFrac) -> float:
    """Nearest double-precision real in [0,1)."""
    x = a.raw * 2.0**-64
    return x if x < 1.0 else _ONE_BELOW


def mod1_distance(a: RealLike, b: RealLike) -> Fraction:
    """Exact distance between a and b on the circle R/Z."""
    d = (Fraction(a) - Fraction(b)) % 1
    return min(d, 1 - d)
