"""Current-vs-speed identities.

Finite system: the current ``j(x, n, t) = K_t(x, n; x+1, n)`` equals the
growth rate read off the dynamics, a finite sum of determinants of kernel
entries. Stationary system: the speed series built from inverse-Kasteleyn
determinants sums to ``Im(Omega)/pi``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import stationary
from .kernel import DEFAULT_QUAD, QuadConfig, as_real, eval_Kinv_nu_single, kernel_matrix, nu_prefactor
from .stationary import Slope, slope_to_weights

REMAINDER_CONSTANT = 3.0


def det(m) -> complex:
    """Determinant; closed form up to 2x2, LU with partial pivoting beyond."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"determinant needs a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if d == 0:
        return 1.0
    if d == 1:
        return a[0, 0]
    if d == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return np.linalg.det(a)


@dataclass
class SeriesResult:
    terms: list
    total: float
    truncation_index: int
    remainder_bound: float = 0.0
    remainder_constant: float | None = None

    def to_dict(self):
        return asdict(self)


@dataclass
class CheckReport:
    lhs: float
    rhs: float
    difference: float
    tolerance: float
    passed: bool
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# Finite system


class _ColumnKernel:
    """Equal-time kernel on the columns x and x+1, levels 0..n."""

    def __init__(self, x, n, t, q):
        self.pts = [(xx, m) for m in range(0, n + 1) for xx in (x, x + 1)]
        self.index = {p: i for i, p in enumerate(self.pts)}
        mat, self.nodes = kernel_matrix([(xx, m, t) for xx, m in self.pts], [(xx, m, t) for xx, m in self.pts], q)
        self.mat = as_real(mat, q)

    def __call__(self, a, b):
        return self.mat[self.index[a], self.index[b]]


@lru_cache(maxsize=256)
def _column_kernel(x, n, t, q):
    return _ColumnKernel(x, n, t, q)


def speed_matrix(x, n, t, ell, q: QuadConfig = DEFAULT_QUAD):
    """The matrix whose determinant is the level-``ell`` term of the speed series."""
    if not 1 <= ell <= n:
        raise ValueError(f"need 1 <= ell <= n, got ell={ell}, n={n}")
    K = _column_kernel(x, n, t, q)
    col = [(x, n - i) for i in range(ell)]
    if ell == n:
        return np.array([[K(a, b) for b in col] for a in col])
    side = (x + 1, n - ell)
    m = np.empty((ell + 1, ell + 1))
    for i, a in enumerate(col):
        for j, b in enumerate(col):
            m[i, j] = K(a, b)
        m[i, ell] = -K(a, side)
    for j, b in enumerate(col):
        m[ell, j] = K(side, b)
    m[ell, ell] = 1 - K(side, side)
    return m


def v_term(x, n, t, ell, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Probability that a column of ``ell`` particles under (x, n) moves it at rate one."""
    val = float(np.real(det(speed_matrix(x, n, t, ell, q))))
    eps = q.real_tol
    if not -eps <= val <= 1 + eps:
        raise ValueError(f"speed term {val} is not a probability (x={x}, n={n}, t={t}, ell={ell})")
    return val


def v_series(x, n, t, q: QuadConfig = DEFAULT_QUAD) -> SeriesResult:
    if n < 1:
        raise ValueError("level n must be >= 1")
    terms = [v_term(x, n, t, ell, q) for ell in range(1, n + 1)]
    return SeriesResult(terms=terms, total=float(sum(terms)), truncation_index=n, remainder_bound=0.0)


def j_current(x, n, t, q: QuadConfig = DEFAULT_QUAD) -> float:
    if n < 1:
        raise ValueError("level n must be >= 1")
    return float(_column_kernel(x, n, t, q)((x, n), (x + 1, n)))


def check_theorem_finite(x, n, t, q: QuadConfig = DEFAULT_QUAD, tol=None) -> CheckReport:
    tol = 100 * q.rel_tol if tol is None else tol
    j = j_current(x, n, t, q)
    v = v_series(x, n, t, q).total
    diff = abs(j - v)
    return CheckReport(lhs=j, rhs=v, difference=diff, tolerance=tol, passed=diff < tol,
                       params={"x": x, "n": n, "t": t})


def shift_identity_residuals(x, n, xp, np_, t, q: QuadConfig = DEFAULT_QUAD):
    """Residuals of the two linear kernel identities at one parameter tuple.

    Moving the second argument down a level::

        K(x,n; x'+1,n'-1) = K(x,n; x'+1,n') - K(x,n; x',n') + [n = n'-1][x = x'+1]

    Moving the first argument down a level::

        K(x,n-1; x',n') - K(x+1,n-1; x',n') = K(x,n; x',n') - [n' = n][x' = x]
    """
    pts = [(x, n), (x, n - 1), (x + 1, n - 1), (xp, np_), (xp + 1, np_), (xp + 1, np_ - 1)]
    pts = list(dict.fromkeys(pts))
    mat, _ = kernel_matrix([(a, b, t) for a, b in pts], [(a, b, t) for a, b in pts], q)
    mat = as_real(mat, q)
    i = {p: k for k, p in enumerate(pts)}

    def K(a, b):
        return mat[i[a], i[b]]

    first = K((x, n), (xp + 1, np_ - 1)) - (
        K((x, n), (xp + 1, np_)) - K((x, n), (xp, np_)) + float(n == np_ - 1 and x == xp + 1)
    )
    second = K((x, n - 1), (xp, np_)) - K((x + 1, n - 1), (xp, np_)) - (
        K((x, n), (xp, np_)) - float(np_ == n and xp == x)
    )
    return float(first), float(second)


def _excluded(x, m):
    blacks = {(x, m), (x + 1, m - 1), (x, m - 1)}
    whites = {(x + 1, m), (x, m), (x + 1, m - 1)}
    return blacks, whites


def recursion_matrices(couples, x, m, t, q: QuadConfig = DEFAULT_QUAD):
    """Matrices of the one-step dimer recursion at (x, m).

    ``couples`` are ``((xb, mb), (xw, mw))`` black/white pairs; kernel rows are
    indexed by blacks and columns by whites. Returns ``(link, stop, go_on)``
    with

    * ``link``: rows couples + (x, m), columns couples + (x+1, m);
    * ``stop``: rows couples + (x, m), (x+1, m-1), columns couples + (x, m), (x+1, m);
    * ``go_on``: rows couples + (x, m), (x, m-1), (x+1, m-1),
      columns couples + (x, m), (x+1, m-1), (x+1, m);

    and ``det(link) = -det(stop) - det(go_on)``.
    """
    bad_b, bad_w = _excluded(x, m)
    for b, w in couples:
        if tuple(b) in bad_b or tuple(w) in bad_w:
            raise ValueError(f"couple {b}/{w} uses a vertex reserved by the recursion at ({x}, {m})")
    bl = [tuple(b) for b, _ in couples]
    wh = [tuple(w) for _, w in couples]
    if len(set(bl)) != len(bl) or len(set(wh)) != len(wh):
        raise ValueError("couples must use distinct vertices")
    rows = list(dict.fromkeys(bl + [(x, m), (x, m - 1), (x + 1, m - 1)]))
    cols = list(dict.fromkeys(wh + [(x, m), (x + 1, m - 1), (x + 1, m)]))
    mat, _ = kernel_matrix([(a, b, t) for a, b in rows], [(a, b, t) for a, b in cols], q)
    mat = as_real(mat, q)
    ri = {p: i for i, p in enumerate(rows)}
    ci = {p: i for i, p in enumerate(cols)}

    def block(rs, cs):
        return np.array([[mat[ri[r], ci[c]] for c in cs] for r in rs]).reshape(len(rs), len(cs))

    link = block(bl + [(x, m)], wh + [(x + 1, m)])
    stop = block(bl + [(x, m), (x + 1, m - 1)], wh + [(x, m), (x + 1, m)])
    go_on = block(bl + [(x, m), (x, m - 1), (x + 1, m - 1)], wh + [(x, m), (x + 1, m - 1), (x + 1, m)])
    return link, stop, go_on


def recursion_step_check(couples, x, m, t, q: QuadConfig = DEFAULT_QUAD, tol=1e-8) -> CheckReport:
    link, stop, go_on = recursion_matrices(couples, x, m, t, q)
    left = float(det(link))
    right = -float(det(stop)) - float(det(go_on))
    diff = abs(left - right)
    return CheckReport(lhs=left, rhs=right, difference=diff, tolerance=tol, passed=diff < tol,
                       params={"couples": [[list(b), list(w)] for b, w in couples], "x": x, "m": m, "t": t})


def telescoped_current(x, n, t, q: QuadConfig = DEFAULT_QUAD):
    """Unroll the one-step recursion from level n down to level 1.

    Each step adds the couples ``(•(x, m), ∘(x, m))`` and
    ``(•(x+1, m-1), ∘(x+1, m))``. Returns ``(terms, remainder)`` where
    ``terms[l-1] = (-1)^l det(stop_l)`` is the probability of a particle column
    of length l under (x, n) with white lozenges beside it, and
    ``sum(terms) + remainder = K(x, n; x+1, n)``. The remainder involves level
    0 and vanishes.
    """
    couples = []
    terms = []
    go_on = None
    for ell, m in enumerate(range(n, 0, -1), start=1):
        _, stop, go_on = recursion_matrices(couples, x, m, t, q)
        terms.append((-1) ** ell * float(det(stop)))
        couples = couples + [((x, m), (x, m)), ((x + 1, m - 1), (x + 1, m))]
    return terms, (-1) ** n * float(det(go_on))


# ---------------------------------------------------------------------------
# Stationary system


@lru_cache(maxsize=4096)
def _kinv_nu(dx, dn, s, q):
    return eval_Kinv_nu_single(dx, dn, s, q)


def stationary_edges(m):
    """Edges (black, white, weight role) for a column of m+1 particles with an empty right neighbour.

    Based at (x, n) = (0, 0): type-I edges at (0, -i), i = 0..m, plus the
    edge ``•(1, -m-1) - ∘(1, -m)``.
    """
    edges = [((0, -i), (0, -i), "b") for i in range(m + 1)]
    edges.append(((1, -m - 1), (1, -m), "c"))
    return edges


def stationary_expectation(m: int, s: Slope, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Stationary probability of particles at (x, n-k), k = 0..m, and none at (x+1, n-m)."""
    if m < 0:
        raise ValueError("m must be >= 0")
    s.require_rough()
    wts = slope_to_weights(s)
    role = {"a": wts.a, "b": wts.b, "c": wts.c}
    edges = stationary_edges(m)
    d = len(edges)
    mat = np.empty((d, d))
    for i, (bi, _, _) in enumerate(edges):
        for j, (_, wj, _) in enumerate(edges):
            dx, dn = bi[0] - wj[0], bi[1] - wj[1]
            mat[i, j] = _kinv_nu(dx, dn, s, q) / nu_prefactor(dx, dn, wts)
    weight = math.prod(role[r] for _, _, r in edges)
    return float(det(mat)) * weight


def v_series_stationary(s: Slope, tol=1e-10, q: QuadConfig = DEFAULT_QUAD, m_max=40) -> SeriesResult:
    """Sum of the stationary stack probabilities until a term drops below ``tol``."""
    s.require_rough()
    terms = []
    for m in range(m_max + 1):
        term = stationary_expectation(m, s, q)
        if term < -q.real_tol:
            raise ValueError(f"negative stationary probability {term} at m={m}")
        if m > 20 and term >= terms[-1] and term >= tol:
            raise ValueError(f"stationary terms stopped decreasing at m={m}; kernel evaluation is suspect")
        terms.append(term)
        if term < tol:
            break
    else:
        raise ValueError(f"stationary series did not reach tol={tol} by m={m_max}")
    return SeriesResult(terms=terms, total=float(sum(terms)), truncation_index=len(terms) - 1,
                        remainder_bound=REMAINDER_CONSTANT * terms[-1], remainder_constant=REMAINDER_CONSTANT)


@dataclass
class StationaryReport:
    slope: tuple
    kernel_route: float
    series_route: float
    closed_form: float
    differences: dict
    truncation_index: int
    tolerance: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def check_theorem_stationary(s: Slope, q: QuadConfig = DEFAULT_QUAD, tol=1e-6, series_tol=1e-10) -> StationaryReport:
    k = -eval_Kinv_nu_single(-1, 0, s, q)
    ser = v_series_stationary(s, series_tol, q)
    v = stationary.speed(s)
    diffs = {
        "kernel_vs_series": abs(k - ser.total),
        "kernel_vs_closed": abs(k - v),
        "series_vs_closed": abs(ser.total - v),
    }
    return StationaryReport(slope=(s.p_a, s.p_b, s.p_c), kernel_route=k, series_route=ser.total, closed_form=v,
                            differences=diffs, truncation_index=ser.truncation_index, tolerance=tol,
                            passed=max(diffs.values()) < tol)
