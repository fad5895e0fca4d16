"""Coordinates for particles, lozenges and the bipartite honeycomb graph.

Black and white vertices both live on Z^2. With the offsets

    e1 = (1/2, -1/2),  e2 = (1/2, 1/2),  e3 = (-1/2, 1/2)

the white neighbours of ``•(x, n)`` are ``∘(x, n)``, ``∘(x, n+1)`` and
``∘(x-1, n+1)``. A lozenge is labelled by the black vertex of its dimer:
type I (weight b) uses the e1 edge and is a particle, type III (weight c)
uses the e2 edge, type II (weight a) uses the e3 edge.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple


class BlackVertex(NamedTuple):
    x: int
    n: int


class WhiteVertex(NamedTuple):
    x: int
    n: int


class LozengeType(enum.Enum):
    I = "I"
    II = "II"
    III = "III"

    @property
    def weight_role(self) -> str:
        return {"I": "b", "II": "a", "III": "c"}[self.value]


def black_to_whites(v: BlackVertex) -> tuple[WhiteVertex, WhiteVertex, WhiteVertex]:
    """Whites at ``v + e1``, ``v + e2``, ``v + e3``."""
    x, n = v
    return WhiteVertex(x, n), WhiteVertex(x, n + 1), WhiteVertex(x - 1, n + 1)


def white_to_blacks(w: WhiteVertex) -> tuple[BlackVertex, BlackVertex, BlackVertex]:
    """Blacks at ``w - e1``, ``w - e2``, ``w - e3`` (same order as black_to_whites)."""
    x, n = w
    return BlackVertex(x, n), BlackVertex(x, n - 1), BlackVertex(x + 1, n - 1)


def lozenge_dimer(kind: LozengeType, x: int, n: int) -> tuple[WhiteVertex, BlackVertex]:
    """The (white, black) edge of a lozenge of type ``kind`` positioned at ``(x, n)``."""
    b = BlackVertex(x, n)
    e1, e2, e3 = black_to_whites(b)
    return {LozengeType.I: e1, LozengeType.III: e2, LozengeType.II: e3}[kind], b


def edge_type(w: WhiteVertex, b: BlackVertex) -> LozengeType:
    e1, e2, e3 = black_to_whites(b)
    if w == e1:
        return LozengeType.I
    if w == e2:
        return LozengeType.III
    if w == e3:
        return LozengeType.II
    raise ValueError(f"{w} and {b} are not adjacent")


def packed_position(k: int, m: int) -> int:
    """Position of particle ``(k, m)`` in the fully packed configuration."""
    if not 1 <= k <= m:
        raise IndexError(f"particle label (k={k}, m={m}) needs 1 <= k <= m")
    return k - m - 1


class InterlacingError(ValueError):
    pass


@dataclass(frozen=True)
class GTPattern:
    """Interlacing triangular array; ``levels[m-1][k-1]`` is the position x_k^m."""

    levels: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(tuple(int(v) for v in row) for row in self.levels))
        for m, row in enumerate(self.levels, start=1):
            if len(row) != m:
                raise ValueError(f"level {m} must hold {m} particles, got {len(row)}")

    @property
    def N(self) -> int:
        return len(self.levels)

    def __getitem__(self, km: tuple[int, int]) -> int:
        k, m = km
        if not (1 <= m <= self.N and 1 <= k <= m):
            raise IndexError(f"no particle ({k}, {m}) in a depth-{self.N} pattern")
        return self.levels[m - 1][k - 1]

    def is_interlacing(self) -> bool:
        return interlacing_violation(self.levels) is None

    def check(self) -> "GTPattern":
        bad = interlacing_violation(self.levels)
        if bad is not None:
            raise InterlacingError(f"interlacing fails at (k={bad[0]}, m={bad[1]})")
        return self

    def occupied(self, x: int, n: int) -> bool:
        """eta(x, n): is there a level-n particle at x. Levels outside 1..N are empty."""
        if not 1 <= n <= self.N:
            return False
        return x in self.levels[n - 1]

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "levels": [list(r) for r in self.levels]})

    @classmethod
    def from_json(cls, text: str) -> "GTPattern":
        d = json.loads(text)
        p = cls(tuple(tuple(r) for r in d["levels"]))
        if p.N != d["N"]:
            raise ValueError(f"N={d['N']} disagrees with {p.N} levels")
        return p

    @classmethod
    def packed(cls, N: int) -> "GTPattern":
        if N < 1:
            raise ValueError("depth N must be >= 1")
        return cls(tuple(tuple(packed_position(k, m) for k in range(1, m + 1)) for m in range(1, N + 1)))


def interlacing_violation(levels):
    """First (k, m) where ``x^m_k < x^{m-1}_k <= x^m_{k+1}`` fails, else None."""
    for m in range(2, len(levels) + 1):
        lo, hi = levels[m - 1], levels[m - 2]
        for k in range(1, m):
            if not lo[k - 1] < hi[k - 1] <= lo[k]:
                return (k, m)
    return None


@dataclass(frozen=True)
class Window:
    """Inclusive rectangle of black-vertex positions."""

    x_min: int
    x_max: int
    n_min: int
    n_max: int

    def cells(self):
        for n in range(self.n_min, self.n_max + 1):
            for x in range(self.x_min, self.x_max + 1):
                yield x, n


def pattern_to_lozenges(p: GTPattern, window: Window) -> dict[tuple[int, int], LozengeType]:
    """Lozenge type at every black position of ``window``.

    Row n is determined by the particles of levels n and n+1, so rows
    ``0 .. N-1`` are tiled (level 0 is empty). Far to the left of the
    particles every non-particle is type II, far to the right type III; in
    between, a non-particle at x is type III exactly when one more level-(n+1)
    particle than level-n particle lies strictly left of x.
    """
    if window.n_min < 0 or window.n_max > p.N - 1:
        raise ValueError(f"rows {window.n_min}..{window.n_max} leave the tiled region 0..{p.N - 1}")
    if window.x_min > window.x_max or window.n_min > window.n_max:
        raise ValueError("empty window")
    out = {}
    for x, n in window.cells():
        lower = p.levels[n - 1] if n >= 1 else ()
        upper = p.levels[n]
        if x in lower:
            out[(x, n)] = LozengeType.I
            continue
        excess = sum(1 for y in upper if y < x) - sum(1 for y in lower if y < x)
        if excess == 0:
            out[(x, n)] = LozengeType.II
        elif excess == 1:
            out[(x, n)] = LozengeType.III
        else:
            raise InterlacingError(f"pattern does not interlace around ({x}, {n})")
    return out


def lozenges_to_dimers(tiling: dict[tuple[int, int], LozengeType]) -> dict[WhiteVertex, BlackVertex]:
    """Dimer (white -> black) for every lozenge; raises if a white is covered twice."""
    match = {}
    for (x, n), kind in tiling.items():
        w, b = lozenge_dimer(kind, x, n)
        if w in match:
            raise ValueError(f"white {w} covered by both {match[w]} and {b}")
        match[w] = b
    return match
