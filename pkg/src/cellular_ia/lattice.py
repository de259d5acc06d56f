"""Eisenstein integers labelling the sector nodes.

A label ``a + b*w`` with ``w = (-1 + i*sqrt(3)) / 2`` is stored as the integer
pair ``(a, b)``.  All lattice logic stays in integers; the complex embedding
is only used for presentation and for the decoding-order sort key, which is
itself expressed with integers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class CosetClass(enum.IntEnum):
    """Residue ``(a + b) mod 3`` of a label."""

    SQUARE = 0
    CIRCLE = 1
    DIAMOND = 2


@dataclass(frozen=True, order=True)
class EisensteinInt:
    a: int
    b: int

    def __add__(self, other: "EisensteinInt") -> "EisensteinInt":
        return EisensteinInt(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "EisensteinInt") -> "EisensteinInt":
        return EisensteinInt(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "EisensteinInt":
        return EisensteinInt(-self.a, -self.b)

    def __mul__(self, k: int) -> "EisensteinInt":
        return EisensteinInt(k * self.a, k * self.b)

    __rmul__ = __mul__

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        w = {1: "w", -1: "-w"}.get(self.b, f"{self.b}w")
        if self.a == 0:
            return w
        return f"{self.a}{'+' if self.b > 0 else ''}{w}"


ZERO = EisensteinInt(0, 0)
ONE = EisensteinInt(1, 0)
OMEGA = EisensteinInt(0, 1)

# Lattice neighbours: {+-1, +-w, +-(1+w)}.
UNITS = (ONE, -ONE, OMEGA, -OMEGA, ONE + OMEGA, -(ONE + OMEGA))


def embed(z: EisensteinInt) -> complex:
    """Point of the complex plane for label ``z``."""
    return complex(z.a - z.b / 2, z.b * math.sqrt(3) / 2)


def coset(z: EisensteinInt) -> CosetClass:
    # Python's % is already the non-negative residue for a positive modulus.
    return CosetClass((z.a + z.b) % 3)


def in_region(z: EisensteinInt, r: int) -> bool:
    """Membership in ``|Re z| <= r, |Im z| <= sqrt(3) r / 2`` (inclusive).

    ``|Re z| <= r`` is tested as ``|2a - b| <= 2r`` and ``|Im z|`` reduces to
    ``|b| <= r``, so no floating point is involved.
    """
    if r < 1:
        raise ValueError(f"region radius must be >= 1, got {r}")
    return abs(2 * z.a - z.b) <= 2 * r and abs(z.b) <= r


def region_points(r: int) -> list[EisensteinInt]:
    """All lattice points of ``B_r`` (unordered, deterministic)."""
    if r < 1:
        raise ValueError(f"region radius must be >= 1, got {r}")
    pts = []
    for b in range(-r, r + 1):
        # |2a - b| <= 2r  <=>  ceil((b - 2r)/2) <= a <= floor((b + 2r)/2)
        lo = -((2 * r - b) // 2)
        hi = (b + 2 * r) // 2
        pts.extend(EisensteinInt(a, b) for a in range(lo, hi + 1))
    return pts


def raster_key(z: EisensteinInt) -> tuple[int, int]:
    """Sort key for "left-to-right, top-down": higher Im first, then smaller Re.

    Uses ``-b`` for Im and ``2a - b`` for 2*Re so the comparison is exact.
    """
    return (-z.b, 2 * z.a - z.b)
