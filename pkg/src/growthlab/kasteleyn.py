"""Dimer covers of finite honeycomb subgraphs.

The Kasteleyn matrix has rows indexed by white vertices and columns by black
vertices, with the (positive) edge weight as entry. On the honeycomb every
face is a hexagon, so all covers of a simply connected region enter
``det K`` with the same sign and ``|det K|`` is the partition function.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
import numpy as np

from .lattice import BlackVertex, LozengeType, WhiteVertex, black_to_whites, edge_type

ENUMERATION_LIMIT = 16


class UntileableError(ValueError):
    pass


@dataclass(frozen=True)
class HoneycombSubgraph:
    blacks: tuple
    whites: tuple
    weights: dict = field(hash=False, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "blacks", tuple(sorted(BlackVertex(*b) for b in self.blacks)))
        object.__setattr__(self, "whites", tuple(sorted(WhiteVertex(*w) for w in self.whites)))
        wts = {}
        bset, wset = set(self.blacks), set(self.whites)
        for (w, b), om in self.weights.items():
            w, b = WhiteVertex(*w), BlackVertex(*b)
            if w not in wset or b not in bset:
                raise ValueError(f"edge {w}-{b} has an endpoint outside the graph")
            if w not in black_to_whites(b):
                raise ValueError(f"{w} and {b} are not honeycomb neighbours")
            if not om > 0:
                raise ValueError(f"edge weight must be positive, got {om}")
            wts[(w, b)] = float(om)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def induced(cls, blacks, whites, weight=None):
        """All honeycomb edges between the given vertices; ``weight(w, b)`` defaults to 1."""
        wset = set(WhiteVertex(*w) for w in whites)
        wts = {}
        for b in blacks:
            b = BlackVertex(*b)
            for w in black_to_whites(b):
                if w in wset:
                    wts[(w, b)] = 1.0 if weight is None else weight(w, b)
        return cls(tuple(blacks), tuple(whites), wts)

    @property
    def edges(self):
        return list(self.weights)

    def weight(self, w, b) -> float:
        """Edge weight, 0 when the edge is absent."""
        return self.weights.get((WhiteVertex(*w), BlackVertex(*b)), 0.0)

    def has_vertex(self, v, color) -> bool:
        return (BlackVertex(*v) in self._bset) if color == "black" else (WhiteVertex(*v) in self._wset)

    @property
    def _bset(self):
        return set(self.blacks)

    @property
    def _wset(self):
        return set(self.whites)

    def without(self, blacks=(), whites=()) -> "HoneycombSubgraph":
        rb = set(BlackVertex(*b) for b in blacks)
        rw = set(WhiteVertex(*w) for w in whites)
        return HoneycombSubgraph(
            tuple(b for b in self.blacks if b not in rb),
            tuple(w for w in self.whites if w not in rw),
            {(w, b): om for (w, b), om in self.weights.items() if b not in rb and w not in rw},
        )

    def reweighted(self, weight) -> "HoneycombSubgraph":
        return HoneycombSubgraph(self.blacks, self.whites, {(w, b): weight(w, b) for (w, b) in self.weights})

    def to_dict(self):
        return {
            "blacks": [list(b) for b in self.blacks],
            "whites": [list(w) for w in self.whites],
            "edges": [{"w": list(w), "b": list(b), "weight": om} for (w, b), om in sorted(self.weights.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "HoneycombSubgraph":
        d = json.loads(text)
        return cls(
            tuple(tuple(b) for b in d["blacks"]),
            tuple(tuple(w) for w in d["whites"]),
            {(tuple(e["w"]), tuple(e["b"])): e["weight"] for e in d["edges"]},
        )


def skew_to_black(u, v) -> BlackVertex:
    return BlackVertex(-u - v, v)


def skew_to_white(u, v) -> WhiteVertex:
    return WhiteVertex(1 - u - v, v)


def build_boxed_plane_partition(n: int) -> HoneycombSubgraph:
    """Honeycomb dual of the n x n x n hexagon, unit weights.

    The region is easiest to describe in a skewed chart (u, v) in which
    •(u, v) touches ∘(u+1, v), ∘(u, v+1), ∘(u+1, v+1). The map
    •(u, v) -> •(-u-v, v), ∘(u, v) -> ∘(1-u-v, v) takes it to the lattice
    coordinates used everywhere else and keeps the level v.
    """
    if n < 1:
        raise ValueError("box size must be >= 1")
    blacks = [
        skew_to_black(u, v)
        for u in range(-n, n)
        for v in range(-1, 2 * n - 1)
        if -1 - u <= v <= 2 * n - 2 - u
    ]
    whites = [
        skew_to_white(u, v)
        for u in range(1 - n, n + 1)
        for v in range(0, 2 * n)
        if -u <= v <= 2 * n - 1 - u
    ]
    return HoneycombSubgraph.induced(blacks, whites)


def hexagon_graph(x=0, n=0) -> HoneycombSubgraph:
    """The six vertices around the face with •(x, n) and ∘(x+1, n) opposite."""
    blacks = [(x, n), (x + 1, n - 1), (x + 1, n)]
    whites = [(x, n), (x + 1, n), (x, n + 1)]
    return HoneycombSubgraph.induced(blacks, whites)


def abc_weight(a, b, c):
    """Edge weight by lozenge type: type I -> b, type II -> a, type III -> c."""
    table = {LozengeType.I: b, LozengeType.II: a, LozengeType.III: c}

    def weight(w, bl):
        return table[edge_type(WhiteVertex(*w), BlackVertex(*bl))]

    return weight


def with_abc_weights(g: HoneycombSubgraph, a, b, c) -> HoneycombSubgraph:
    return g.reweighted(abc_weight(a, b, c))


def with_random_weights(g: HoneycombSubgraph, seed: int, lo=0.5, hi=2.0) -> HoneycombSubgraph:
    rng = np.random.default_rng(seed)
    draws = rng.uniform(lo, hi, size=len(g.weights))
    table = dict(zip(sorted(g.weights), draws))
    return g.reweighted(lambda w, b: float(table[(w, b)]))


def macmahon(a: int, b: int, c: int) -> int:
    """Number of plane partitions in an a x b x c box."""
    num, den = 1, 1
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            for k in range(1, c + 1):
                num *= i + j + k - 1
                den *= i + j + k - 2
    return num // den


# ---------------------------------------------------------------------------
# Linear algebra


def kasteleyn_matrix(g: HoneycombSubgraph) -> np.ndarray:
    wi = {w: i for i, w in enumerate(g.whites)}
    bi = {b: j for j, b in enumerate(g.blacks)}
    K = np.zeros((len(g.whites), len(g.blacks)))
    for (w, b), om in g.weights.items():
        K[wi[w], bi[b]] = om
    return K


def _log_z(g: HoneycombSubgraph):
    """``log Z_G`` or ``-inf`` when the graph has no cover."""
    if len(g.blacks) != len(g.whites):
        return -math.inf
    d = len(g.blacks)
    if d == 0:
        return 0.0
    K = kasteleyn_matrix(g)
    # Numerical rank test: a singular value below d * eps * ||K||_2 is a float zero.
    sv = np.linalg.svd(K, compute_uv=False)
    if sv[-1] <= d * np.finfo(float).eps * sv[0]:
        return -math.inf
    return float(np.sum(np.log(sv)))


def is_tileable(g: HoneycombSubgraph) -> bool:
    return _log_z(g) > -math.inf


def partition_function(g: HoneycombSubgraph) -> float:
    """Weighted number of dimer covers, ``|det K_G|``."""
    lz = _log_z(g)
    return 0.0 if lz == -math.inf else math.exp(lz)


def z_ratio(g: HoneycombSubgraph, blacks=(), whites=()) -> float:
    """``Z_{G minus vertices} / Z_G``."""
    lz = _log_z(g)
    if lz == -math.inf:
        raise UntileableError("graph has no dimer cover")
    lsub = _log_z(g.without(blacks, whites))
    return 0.0 if lsub == -math.inf else math.exp(lsub - lz)


def inverse_entries(g: HoneycombSubgraph, blacks, whites) -> np.ndarray:
    """``K^{-1}(b_i, w_j)`` for the requested vertices, by column solves."""
    if not is_tileable(g):
        raise UntileableError("Kasteleyn matrix is singular: graph has no dimer cover")
    wi = {w: i for i, w in enumerate(g.whites)}
    bi = {b: j for j, b in enumerate(g.blacks)}
    K = kasteleyn_matrix(g)
    rhs = np.zeros((len(g.whites), len(whites)))
    for j, w in enumerate(whites):
        rhs[wi[WhiteVertex(*w)], j] = 1.0
    cols = np.linalg.solve(K, rhs)
    return cols[[bi[BlackVertex(*b)] for b in blacks], :]


def inverse_entry(g: HoneycombSubgraph, b, w) -> float:
    return float(inverse_entries(g, [b], [w])[0, 0])


# ---------------------------------------------------------------------------
# Probabilities


def _normalize_edges(edges):
    out = [(WhiteVertex(*w), BlackVertex(*b)) for w, b in edges]
    ws = [w for w, _ in out]
    bs = [b for _, b in out]
    if len(set(ws)) != len(ws) or len(set(bs)) != len(bs):
        raise ValueError("edges must be pairwise vertex-disjoint")
    return out


def kenyon_prob(g: HoneycombSubgraph, edges) -> float:
    """Probability that all ``(white, black)`` edges carry dimers, from inverse-Kasteleyn minors."""
    edges = _normalize_edges(edges)
    if not edges:
        return 1.0
    wprod = math.prod(g.weight(w, b) for w, b in edges)
    if wprod == 0.0:
        return 0.0
    minv = inverse_entries(g, [b for _, b in edges], [w for w, _ in edges])
    return float(np.linalg.det(minv)) * wprod


def restriction_prob(g: HoneycombSubgraph, edges) -> float:
    """Same probability from the partition function of the graph with the edges' vertices removed."""
    edges = _normalize_edges(edges)
    wprod = math.prod(g.weight(w, b) for w, b in edges)
    if wprod == 0.0:
        return 0.0
    return wprod * z_ratio(g, [b for _, b in edges], [w for w, _ in edges])


@dataclass
class Cover:
    matching: dict  # white -> black
    weight: float

    def contains(self, edges) -> bool:
        return all(self.matching.get(WhiteVertex(*w)) == BlackVertex(*b) for w, b in edges)


def enumerate_covers(g: HoneycombSubgraph, limit: int = ENUMERATION_LIMIT) -> list[Cover]:
    """Every perfect matching with its weight, by backtracking.

    Whites are taken in (n, x) order, except that a white with a single
    available black is always matched first. ``limit`` caps the number of
    black vertices.
    """
    if len(g.blacks) > limit:
        raise ValueError(f"{len(g.blacks)} black vertices exceed the enumeration limit {limit}")
    if len(g.blacks) != len(g.whites):
        return []
    nbrs = {w: [] for w in g.whites}
    for (w, b), om in g.weights.items():
        nbrs[w].append((b, om))
    order = sorted(g.whites, key=lambda w: (w.n, w.x))
    covers = []

    def rec(free_whites, used, match, weight):
        if not free_whites:
            covers.append(Cover(dict(match), weight))
            return
        best, best_opts = None, None
        for w in free_whites:
            opts = [(b, om) for b, om in nbrs[w] if b not in used]
            if not opts:
                return
            if best is None or len(opts) < len(best_opts):
                best, best_opts = w, opts
                if len(opts) == 1:
                    break
        rest = [w for w in free_whites if w != best]
        for b, om in best_opts:
            used.add(b)
            match[best] = b
            rec(rest, used, match, weight * om)
            used.discard(b)
            del match[best]

    rec(order, set(), {}, 1.0)
    return covers


def enumeration_prob(covers: list[Cover], edges) -> float:
    total = sum(c.weight for c in covers)
    return sum(c.weight for c in covers if c.contains(edges)) / total


# ---------------------------------------------------------------------------
# Column recursion for -K^{-1}(•(x, n), ∘(x+1, n))


def sigma_vertices(x, n, m):
    """``Σ_m``: blacks and whites peeled off after m steps of the column recursion."""
    blacks = [(x, n - i) for i in range(m + 1)] + [(x + 1, n - i - 1) for i in range(m)]
    whites = [(x + 1, n - i) for i in range(m + 1)] + [(x, n - i) for i in range(m)]
    return blacks, whites


def sigma_tilde_vertices(x, n, m):
    """``Σ̃_m``: the vertices of the edges e_i^0, e_i^1 for i <= m."""
    blacks, whites = [], []
    for i in range(m + 1):
        blacks += [(x, n - i), (x + 1, n - i - 1)]
        whites += [(x, n - i), (x + 1, n - i)]
    return blacks, whites


def column_edges(x, n, m, reduced=False):
    """``(white, black)`` edges e_0^0, e_0^1, ..., e_m^0, e_m^1.

    With ``reduced`` only e_0^0, ..., e_m^0 and e_m^1 are returned; the other
    e_i^1 are forced once those are present.
    """
    edges = []
    for i in range(m + 1):
        edges.append(((x, n - i), (x, n - i)))
        if not reduced or i == m:
            edges.append(((x + 1, n - i), (x + 1, n - i - 1)))
    return edges


class MissingEdgeError(KeyError):
    pass


def _strict_weight(g, w, b):
    om = g.weight(w, b)
    if om == 0.0:
        raise MissingEdgeError(f"edge ∘{tuple(w)}-•{tuple(b)} is not in the graph")
    return om


def _c1(wt, x, n, k):
    return math.prod(wt((x, n - i), (x, n - 1 - i)) * wt((x + 1, n - 1 - i), (x + 1, n - 1 - i)) for i in range(k))


def _c2(wt, x, n, k):
    return math.prod(wt((x, n - i), (x, n - i)) * wt((x + 1, n - i), (x + 1, n - 1 - i)) for i in range(k))


def c_coeffs(g: HoneycombSubgraph, x, n, m):
    """``(c1(m), c2(m), c3(m))`` as products of Kasteleyn entries along the column.

    Raises ``MissingEdgeError`` when one of the edges involved is absent.
    """
    def wt(w, b):
        return _strict_weight(g, w, b)

    c1m, c2m = _c1(wt, x, n, m), _c2(wt, x, n, m)
    c3m = c1m / _c2(wt, x, n, m + 1) * wt((x, n - m), (x + 1, n - m - 1))
    return c1m, c2m, c3m


def link_face_present(g: HoneycombSubgraph, x, n) -> bool:
    """Whether •(x, n) and ∘(x+1, n) sit on a common hexagon of g."""
    hexagon = hexagon_graph(x, n)
    return all(b in g._bset for b in hexagon.blacks) and all(w in g._wset for w in hexagon.whites)


def admissible_depth(g: HoneycombSubgraph, x, n) -> int:
    """Largest N for which the recursion at (x, n) applies, or -1 if none."""
    if not link_face_present(g, x, n):
        return -1
    N = -1
    while True:
        m = N + 1
        edges = column_edges(x, n, m)[-2:] + [((x, n - m), (x + 1, n - m - 1))]
        if any(g.weight(w, b) == 0.0 for w, b in edges):
            return N
        N = m


@dataclass
class RecursionReport:
    x: int
    n: int
    N: int
    lhs: float
    terms: list
    remainder: float
    residual: float
    passed: bool
    tolerance: float

    def to_dict(self):
        return asdict(self)


def _check_depth(g, x, n, N):
    top = admissible_depth(g, x, n)
    if N < 0 or N > top:
        raise ValueError(f"depth N={N} not admissible at ({x}, {n}); admissible range is 0..{top}")


def _remainder_ratio(g, x, n, N, c1_next):
    if c1_next == 0.0:
        return 0.0
    blacks, whites = sigma_vertices(x, n, N + 1)
    return z_ratio(g, blacks, whites)


def recursion_identity(g: HoneycombSubgraph, x, n, N, tol=1e-12) -> RecursionReport:
    """``-K^{-1}(•(x,n), ∘(x+1,n)) = Σ_m c3(m) P[e_0..e_m] + c1(N+1) Z_{G∖Σ_{N+1}} / Z_G``."""
    _check_depth(g, x, n, N)
    lhs = -inverse_entry(g, (x, n), (x + 1, n))
    terms = []
    for m in range(N + 1):
        _, _, c3 = c_coeffs(g, x, n, m)
        terms.append(c3 * kenyon_prob(g, column_edges(x, n, m)))
    c1_next = _c1(g.weight, x, n, N + 1)
    remainder = c1_next * _remainder_ratio(g, x, n, N, c1_next)
    residual = abs(lhs - (sum(terms) + remainder))
    return RecursionReport(x, n, N, lhs, terms, remainder, residual, residual < tol, tol)


def corollary_abc_check(g: HoneycombSubgraph, x, n, N, weights, tol=1e-12) -> RecursionReport:
    """Recursion with lozenge-type weights, stated with particle expectations.

    ``-(bc/a) K^{-1}(•(x,n), ∘(x+1,n)) = Σ_m E[(1-η(x+1,n-m)) Π_i η(x,n-i)] + a^{-1}(bc)^{N+2} Z_{G∖Σ_{N+1}}/Z_G``
    where the expectations use the reduced edge sets.
    """
    a, b, c = weights
    for (w, bl), om in g.weights.items():
        expected = abc_weight(a, b, c)(w, bl)
        if not math.isclose(om, expected, rel_tol=1e-15):
            raise ValueError("graph weights are not the (a, b, c) lozenge weights")
    _check_depth(g, x, n, N)
    lhs = -(b * c / a) * inverse_entry(g, (x, n), (x + 1, n))
    terms = [kenyon_prob(g, column_edges(x, n, m, reduced=True)) for m in range(N + 1)]
    c1_next = _c1(g.weight, x, n, N + 1)
    ratio = _remainder_ratio(g, x, n, N, c1_next)
    remainder = (b * c) ** (N + 2) / a * ratio if c1_next else 0.0
    residual = abs(lhs - (sum(terms) + remainder))
    return RecursionReport(x, n, N, lhs, terms, remainder, residual, residual < tol, tol)


# ---------------------------------------------------------------------------
# Bulk probe


def box_center_link(n: int):
    """(x, n) whose link •(x, n) - ∘(x+1, n) is closest to the centre of the size-n box."""
    g = build_boxed_plane_partition(n)
    cx = np.mean([b.x for b in g.blacks] + [w.x - 0.5 for w in g.whites])
    cn = np.mean([b.n for b in g.blacks] + [w.n + 0.5 for w in g.whites])
    best = None
    for b in g.blacks:
        if not link_face_present(g, b.x, b.n):
            continue
        # midpoint of •(x, n) and ∘(x+1, n) = •(x+1, n) + e1
        mx, mn = b.x + 0.75, b.n - 0.25
        d = (mx - cx) ** 2 + (mn - cn) ** 2 + (mx - cx) * (mn - cn)
        if best is None or d < best[0] - 1e-12:
            best = (d, b.x, b.n)
    return g, best[1], best[2]


@dataclass
class BulkProbe:
    n: int
    x: int
    level: int
    speed_entry: float
    speed_target: float
    speed_error: float
    density: float
    density_target: float
    density_error: float

    def to_dict(self):
        return asdict(self)


def bulk_probe(n: int) -> BulkProbe:
    """Compare finite-box inverse Kasteleyn entries at the centre with the infinite uniform lattice."""
    if n < 1:
        raise ValueError("box size must be >= 1")
    g, x, level = box_center_link(n)
    ent = inverse_entries(g, [(x, level)], [(x + 1, level), (x, level)])
    speed_entry = -float(ent[0, 0])
    density = float(ent[0, 1]) * g.weight((x, level), (x, level))
    target_v = math.sqrt(3) / (2 * math.pi)
    return BulkProbe(n, x, level, speed_entry, target_v, abs(speed_entry - target_v),
                     density, 1 / 3, abs(density - 1 / 3))


def sigma_tilde_ratio(g: HoneycombSubgraph, x, n, m) -> tuple[float, float]:
    """``(c2(m+1) Z_{G∖Σ̃_m} / Z_G, P[e_0^0, ..., e_m^0, e_m^1])``; the two agree."""
    blacks, whites = sigma_tilde_vertices(x, n, m)
    c2 = _c2(lambda w, b: _strict_weight(g, w, b), x, n, m + 1)
    return c2 * z_ratio(g, blacks, whites), kenyon_prob(g, column_edges(x, n, m, reduced=True))
