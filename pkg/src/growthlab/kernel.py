"""Contour-integral kernels.

* ``eval_K``: the finite-time correlation kernel of the packed-start
  dynamics, a single integral around 0 plus a double integral over a circle
  around 0 and a circle around 1.
* ``eval_Kinv_nu_single``: the stationary particle kernel as an integral of a
  rational function along an arc between ``conj(Omega)`` and ``Omega``.
* ``eval_Kinv_abc_double``: the infinite-lattice inverse Kasteleyn matrix as
  a torus double integral, with the inner integral done by residues.

Circle integrals use the trapezoid rule, which converges geometrically for
integrands analytic near the circle. Arc integrals use Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import roots_legendre

from .stationary import FrozenSlopeError, Slope, Weights, slope_to_weights


class QuadratureError(RuntimeError):
    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class ImaginaryPartError(ValueError):
    pass


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    nodes: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("contour radius must be positive")
        if self.nodes < 8 or self.nodes & (self.nodes - 1):
            raise ValueError("node count must be a power of two >= 8")

    def points(self, nodes=None):
        n = nodes or self.nodes
        u = np.exp(2j * np.pi * np.arange(n) / n)
        return self.center + self.radius * u, self.radius * u


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    max_nodes: int = 2**16
    r0: float = 0.4
    r1: float = 0.4
    start_nodes: int = 64

    def __post_init__(self):
        if self.rel_tol < 1e-14:
            raise ValueError("rel_tol below 1e-14 is not attainable in double precision")
        if not (0 < self.r0 and 0 < self.r1 and self.r0 + self.r1 < 1):
            raise ValueError("contours around 0 and 1 must be disjoint: r0 + r1 < 1")
        if self.start_nodes < 8 or self.max_nodes < self.start_nodes:
            raise ValueError("need 8 <= start_nodes <= max_nodes")

    @property
    def real_tol(self):
        return 10 * self.rel_tol


DEFAULT_QUAD = QuadConfig()


class SpaceTimePoint(NamedTuple):
    x: int
    n: int
    t: float = 0.0


def precedes(a, b) -> bool:
    """Partial order on (level, time): ``n1 <= n2``, ``t1 >= t2`` and not equal."""
    (n1, t1), (n2, t2) = a, b
    return n1 <= n2 and t1 >= t2 and (n1, t1) != (n2, t2)


def _converged(new, old, rel_tol):
    new, old = np.asarray(new), np.asarray(old)
    scale = np.maximum(1.0, np.abs(new))
    return bool(np.all(np.abs(new - old) <= rel_tol * scale))


def circle_quadrature(f: Callable, c: ContourSpec, rel_tol=1e-10, max_nodes=2**16):
    """``(1/2πi) ∮ f(w) dw`` on a positively oriented circle.

    ``f`` must accept an array of points. Nodes double from ``c.nodes`` until
    two successive values agree to ``rel_tol``. Returns ``(value, nodes)``.
    """
    nodes = c.nodes
    prev = None
    while True:
        pts, offs = c.points(nodes)
        val = np.mean(f(pts) * offs)
        if prev is not None and _converged(val, prev, rel_tol):
            return complex(val), nodes
        if nodes * 2 > max_nodes:
            raise QuadratureError(
                f"circle quadrature did not converge with {nodes} nodes: {prev} vs {val}",
                last=val, previous=prev,
            )
        prev = val
        nodes *= 2


# ---------------------------------------------------------------------------
# Finite-time kernel


@lru_cache(maxsize=16)
def _cauchy_matrix(nodes, r0, r1):
    w, wo = ContourSpec(0j, r0, nodes).points()
    z, zo = ContourSpec(1 + 0j, r1, nodes).points()
    return w, wo, z, zo, 1.0 / (w[:, None] - z[None, :])


def _kernel_block(rows, cols, nodes, r0, r1):
    w, wo, z, zo, cauchy = _cauchy_matrix(nodes, r0, r1)
    rx = np.array([p.x for p in rows], dtype=float)[:, None]
    rn = np.array([p.n for p in rows], dtype=float)[:, None]
    rt = np.array([p.t for p in rows], dtype=float)[:, None]
    cx = np.array([p.x for p in cols], dtype=float)[:, None]
    cn = np.array([p.n for p in cols], dtype=float)[:, None]
    ct = np.array([p.t for p in cols], dtype=float)[:, None]
    # Integer powers via exp(k log) with the principal log: w and 1-w, z and 1-z
    # stay away from the branch cut's endpoints, and integer exponents make the
    # branch irrelevant.
    lw, l1w = np.log(w)[None, :], np.log(1 - w)[None, :]
    lz, l1z = np.log(z)[None, :], np.log(1 - z)[None, :]
    U = np.exp(rt / w[None, :] + rn * l1w + rx * lw) * wo[None, :]
    V = np.exp(-ct / z[None, :] - cn * l1z - (cx + 1) * lz) * zo[None, :]
    double = U @ cauchy @ V.T / (nodes * nodes)

    single = np.zeros_like(double)
    for i, p in enumerate(rows):
        for j, q in enumerate(cols):
            if precedes((p.n, p.t), (q.n, q.t)):
                g = np.exp((p.t - q.t) / w - (q.x - p.x + 1) * np.log(w) - (q.n - p.n) * np.log(1 - w))
                single[i, j] = -np.mean(g * wo)
    return single + double


def kernel_matrix(rows: Sequence, cols: Sequence, q: QuadConfig = DEFAULT_QUAD):
    """Matrix of kernel values ``K(rows[i]; cols[j])`` and the node count used.

    All entries share one set of nodes; doubling stops once every entry has
    converged to ``q.rel_tol``.
    """
    rows = [SpaceTimePoint(*p) for p in rows]
    cols = [SpaceTimePoint(*p) for p in cols]
    nodes = q.start_nodes
    prev = _kernel_block(rows, cols, nodes, q.r0, q.r1)
    while True:
        if nodes * 2 > q.max_nodes:
            raise QuadratureError(f"kernel quadrature did not converge at {nodes} nodes")
        nodes *= 2
        cur = _kernel_block(rows, cols, nodes, q.r0, q.r1)
        if _converged(cur, prev, q.rel_tol):
            return cur, nodes
        prev = cur


def eval_K(p1, p2, q: QuadConfig = DEFAULT_QUAD, with_nodes=False):
    """Single kernel entry ``K(x1, n1, t1; x2, n2, t2)`` (complex)."""
    m, nodes = kernel_matrix([p1], [p2], q)
    val = complex(m[0, 0])
    return (val, nodes) if with_nodes else val


def as_real(value, q: QuadConfig = DEFAULT_QUAD):
    """Real part, after checking the imaginary part is quadrature noise."""
    arr = np.asarray(value)
    bad = np.abs(arr.imag) >= q.real_tol * np.maximum(1.0, np.abs(arr.real))
    if np.any(bad):
        raise ImaginaryPartError(f"kernel value has imaginary part {np.max(np.abs(arr.imag)):.3e}")
    return arr.real if arr.ndim else float(arr.real)


# ---------------------------------------------------------------------------
# Stationary kernels


@lru_cache(maxsize=32)
def _legendre(nodes):
    x, wts = roots_legendre(nodes)
    return x, wts


def arc_quadrature(g: Callable, phi0: float, phi1: float, rel_tol=1e-10, max_nodes=2**12, start=32):
    """``∫_{phi0}^{phi1} g(φ) dφ`` by Gauss-Legendre with node doubling."""
    half, mid = 0.5 * (phi1 - phi0), 0.5 * (phi1 + phi0)
    nodes, prev = start, None
    while True:
        x, wts = _legendre(nodes)
        val = half * np.sum(wts * g(mid + half * x))
        if prev is not None and _converged(val, prev, rel_tol):
            return complex(val), nodes
        if nodes * 2 > max_nodes:
            raise QuadratureError(f"arc quadrature did not converge with {nodes} nodes", last=val, previous=prev)
        prev = val
        nodes *= 2


def _arc_max_nodes(q):
    return min(q.max_nodes, 2**12)


def _check_real(val, q, what):
    if abs(val.imag) >= q.real_tol * max(1.0, abs(val.real)):
        raise ImaginaryPartError(f"{what} has imaginary part {val.imag:.3e}")
    return val.real


def eval_Kinv_nu_single(dx: int, dn: int, s: Slope, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Stationary kernel between ``(x, n)`` and ``(x - dx, n - dn)``.

    Integrates ``(w-1)^dn / w^(dn+dx+1)`` over the arc of ``|w| = c/a`` from
    ``conj(Omega)`` to ``Omega``: through the positive axis when ``dn >= 0``,
    and through the negative axis (with the opposite sign) when ``dn < 0``.
    """
    if not s.is_rough:
        raise FrozenSlopeError(f"slope {s} is frozen")
    wts = slope_to_weights(s)
    r = wts.c / wts.a
    tb = math.pi * s.p_b
    sign = -1.0 if (dn + dx) % 2 else 1.0

    def g(phi):
        w = r * np.exp(1j * phi)
        return (w - 1) ** dn * w ** (-(dn + dx))

    if dn >= 0:
        val, _ = arc_quadrature(g, -tb, tb, q.rel_tol, _arc_max_nodes(q))
        val = sign * val / (2 * math.pi)
    else:
        val, _ = arc_quadrature(g, tb, 2 * math.pi - tb, q.rel_tol, _arc_max_nodes(q))
        val = -sign * val / (2 * math.pi)
    return _check_real(val, q, "stationary kernel")


def eval_Kinv_abc_double(dx: int, dn: int, weights, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Inverse Kasteleyn entry ``K^{-1}(•(x, n), ∘(x - dx, n - dn))`` of the infinite lattice.

    ``(1/(2πi))^2 ∮_{|z|=1} ∮_{|w|=1} z^dn w^(-dn-dx-1) / (a + b z + c w)``.
    The z-integral is the residue at ``z0 = -(a + c w)/b``, picked up while
    ``z0`` is inside the unit circle (``dn >= 0``) or, with a minus sign,
    while it is outside (``dn < 0``, where z = 0 is also a pole). The
    w-integral then runs over the matching arc, whose endpoints are where
    ``|a + c w| = b``.
    """
    if not isinstance(weights, Weights):
        weights = Weights(*weights)
    if not weights.is_rough:
        raise FrozenSlopeError(f"weights {weights} are outside the rough phase")
    a, b, c = weights.as_tuple()
    phi_star = math.acos((b * b - a * a - c * c) / (2 * a * c))
    k = -dn - dx - 1

    def g(phi):
        w = np.exp(1j * phi)
        z0 = -(a + c * w) / b
        # dw = i w dφ cancels the 1/(2πi) up to 1/(2π).
        return z0**dn * w ** (k + 1) / b

    if dn >= 0:
        val, _ = arc_quadrature(g, phi_star, 2 * math.pi - phi_star, q.rel_tol, _arc_max_nodes(q))
    else:
        val, _ = arc_quadrature(g, -phi_star, phi_star, q.rel_tol, _arc_max_nodes(q))
        val = -val
    return _check_real(val / (2 * math.pi), q, "inverse Kasteleyn entry")


def nu_prefactor(dx: int, dn: int, weights) -> float:
    if not isinstance(weights, Weights):
        weights = Weights(*weights)
    a, b, c = weights.as_tuple()
    return b * (a / c) ** dx * (b / c) ** dn


def nu_from_abc(dx: int, dn: int, weights, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Stationary particle kernel from the double-integral route."""
    return nu_prefactor(dx, dn, weights) * eval_Kinv_abc_double(dx, dn, weights, q)
