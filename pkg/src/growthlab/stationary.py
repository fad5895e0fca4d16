"""Slope geometry of the translation-invariant lozenge measures.

A slope is the triple of lozenge proportions ``(p_a, p_b, p_c)``. It fixes the
edge weights ``(a, b, c)`` up to a common scale and the complex point
``Omega`` in the upper half plane, whose imaginary part over pi is the growth
speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

SUM_TOL = 1e-12


class FrozenSlopeError(ValueError):
    """Raised when an operation needs the rough phase (all proportions > 0)."""


@dataclass(frozen=True)
class Slope:
    p_a: float
    p_b: float
    p_c: float

    def __post_init__(self):
        for p in (self.p_a, self.p_b, self.p_c):
            if p < 0 or not math.isfinite(p):
                raise ValueError(f"slope proportions must be nonnegative, got {self}")
        if abs(self.p_a + self.p_b + self.p_c - 1.0) > SUM_TOL:
            raise ValueError(f"slope proportions must sum to 1, got {self}")

    @classmethod
    def normalized(cls, p_a, p_b, p_c, tol=1e-9):
        """Build a slope from proportions that sum to 1 within ``tol``."""
        total = p_a + p_b + p_c
        if abs(total - 1.0) > tol:
            raise ValueError(f"slope proportions sum to {total}, not 1")
        return cls(p_a / total, p_b / total, p_c / total)

    @classmethod
    def parse(cls, text: str) -> "Slope":
        """Parse ``"1/3,1/3,1/3"`` or ``"0.5,0.25,0.25"``."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated proportions, got {text!r}")
        vals = [float(Fraction(p)) for p in parts]
        return cls.normalized(*vals)

    @property
    def thetas(self):
        return (math.pi * self.p_a, math.pi * self.p_b, math.pi * self.p_c)

    @property
    def is_rough(self) -> bool:
        return min(self.p_a, self.p_b, self.p_c) > 0

    def swapped_bc(self) -> "Slope":
        return Slope(self.p_a, self.p_c, self.p_b)

    def require_rough(self):
        if not self.is_rough:
            raise FrozenSlopeError(f"slope {self} is frozen (a proportion vanishes)")


@dataclass(frozen=True)
class Weights:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError(f"weights must be positive, got {self}")

    @property
    def is_rough(self) -> bool:
        a, b, c = self.a, self.b, self.c
        return a < b + c and b < a + c and c < a + b

    def scaled(self, lam: float) -> "Weights":
        return Weights(lam * self.a, lam * self.b, lam * self.c)

    def as_tuple(self):
        return (self.a, self.b, self.c)


def slope_to_weights(s: Slope) -> Weights:
    """Law of sines on the triangle with base [0, 1]: ``a:b:c = sin θa : sin θb : sin θc``."""
    s.require_rough()
    ta, tb, tc = s.thetas
    return Weights(math.sin(ta), math.sin(tb), math.sin(tc))


def weights_to_slope(w: Weights) -> Slope:
    """Angles opposite the sides ``(a, b, c)`` of the triangle, divided by pi."""
    if not w.is_rough:
        raise FrozenSlopeError(f"weights {w} violate the strict triangle inequality")
    a, b, c = w.a, w.b, w.c

    def angle(opp, s1, s2):
        cos = (s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2)
        return math.acos(max(-1.0, min(1.0, cos)))

    ta, tb, tc = angle(a, b, c), angle(b, a, c), angle(c, a, b)
    total = ta + tb + tc
    return Slope(ta / total, tb / total, tc / total)


@dataclass(frozen=True)
class OmegaPoint:
    value: complex
    frozen: bool = False

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag


def slope_to_omega(s: Slope) -> OmegaPoint:
    """Apex of the triangle on ``[0, 1]`` with angle θb at 0 and θc at 1.

    For a frozen slope the triangle degenerates and the returned point lies on
    the real axis with ``frozen=True``.
    """
    ta, tb, tc = s.thetas
    if not s.is_rough:
        # |0 Omega| = c/a and |1 Omega| = b/a in the limit.
        if s.p_c == 0.0:
            return OmegaPoint(0j, frozen=True)
        if s.p_b == 0.0:
            return OmegaPoint(1 + 0j, frozen=True)
        return OmegaPoint(complex(math.inf, 0.0), frozen=True)
    r = math.sin(tc) / math.sin(ta)
    return OmegaPoint(complex(r * math.cos(tb), r * math.sin(tb)))


def speed(s: Slope) -> float:
    """Growth speed ``sin θb sin θc / (pi sin θa)``; zero on frozen slopes."""
    if not s.is_rough:
        return 0.0
    ta, tb, tc = s.thetas
    return math.sin(tb) * math.sin(tc) / (math.pi * math.sin(ta))


def asymmetric_speed(s: Slope, p: float, q: float) -> float:
    if p < 0 or q < 0:
        raise ValueError("jump rates must be nonnegative")
    return (p - q) * speed(s)
