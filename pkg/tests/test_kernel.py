import math

import numpy as np
import pytest

from growthlab.identity import shift_identity_residuals
from growthlab.kernel import (
    DEFAULT_QUAD,
    ContourSpec,
    ImaginaryPartError,
    QuadConfig,
    QuadratureError,
    as_real,
    circle_quadrature,
    eval_K,
    eval_Kinv_abc_double,
    eval_Kinv_nu_single,
    kernel_matrix,
    nu_from_abc,
    nu_prefactor,
    precedes,
)
from growthlab.stationary import FrozenSlopeError, Slope, Weights, slope_to_weights

SYM = Slope(1 / 3, 1 / 3, 1 / 3)
V_SYM = math.sqrt(3) / (2 * math.pi)
OFF_SLOPES = [Slope(0.5, 0.25, 0.25), Slope(0.2, 0.3, 0.5), Slope(0.4, 0.35, 0.25)]


@pytest.mark.parametrize(
    "a,b,expected",
    [((1, 2.0), (2, 1.0), True), ((2, 1.0), (2, 1.0), False), ((3, 1.0), (2, 2.0), False), ((1, 0.5), (2, 0.5), True),
     ((2, 0.5), (1, 0.5), False), ((1, 0.5), (1, 1.0), False)],
)
def test_precedes(a, b, expected):
    assert precedes(a, b) is expected


def test_contour_and_config_validation():
    with pytest.raises(ValueError):
        ContourSpec(0j, 0.4, nodes=12)
    with pytest.raises(ValueError):
        ContourSpec(0j, -1.0)
    with pytest.raises(ValueError):
        QuadConfig(r0=0.6, r1=0.5)
    with pytest.raises(ValueError):
        QuadConfig(rel_tol=1e-16)


@pytest.mark.parametrize(
    "f,expected",
    [(lambda w: 1 / w, 1.0), (lambda w: np.ones_like(w), 0.0), (lambda w: np.exp(w) / w, 1.0),
     (lambda w: 1 / w**3, 0.0)],
)
def test_circle_quadrature_residues(f, expected):
    val, nodes = circle_quadrature(f, ContourSpec(0j, 0.4))
    assert abs(val - expected) < 1e-12
    assert nodes >= 64


def test_circle_quadrature_reports_nonconvergence():
    # pole sitting just outside the circle needs far more nodes than allowed
    with pytest.raises(QuadratureError) as err:
        circle_quadrature(lambda w: 1 / (w - 0.4001), ContourSpec(0j, 0.4, nodes=8), max_nodes=64)
    assert err.value.last is not None and err.value.previous is not None


def test_packed_one_point_values():
    assert abs(eval_K((-1, 1, 0.0), (-1, 1, 0.0)) - 1) < 1e-10
    assert abs(eval_K((0, 1, 0.0), (0, 1, 0.0))) < 1e-10
    for n in range(1, 5):
        assert abs(eval_K((-n, n, 0.0), (-n, n, 0.0)) - 1) < 1e-10
        assert abs(eval_K((-n - 1, n, 0.0), (-n - 1, n, 0.0))) < 1e-10


def test_equal_time_entries_are_real():
    pts = [(x, n, 0.7) for n in (1, 2, 3) for x in (-2, -1, 0)]
    m, _ = kernel_matrix(pts, pts)
    assert np.max(np.abs(m.imag)) < DEFAULT_QUAD.real_tol
    assert as_real(m).shape == (9, 9)
    with pytest.raises(ImaginaryPartError):
        as_real(1.0 + 1e-3j)


def test_one_point_density_in_unit_interval():
    pts = [(x, n, 1.3) for n in (1, 2, 3, 4) for x in range(-5, 3)]
    m, _ = kernel_matrix(pts, pts)
    diag = np.real(np.diag(m))
    assert np.all(diag > -1e-9) and np.all(diag < 1 + 1e-9)


def test_single_particle_density_is_poisson():
    # level 1 carries one free particle started at -1
    t = 1.2
    for x in range(-1, 4):
        k = x + 1
        expected = math.exp(-t) * t**k / math.factorial(k)
        assert abs(eval_K((x, 1, t), (x, 1, t)).real - expected) < 1e-9


@pytest.mark.parametrize("r0,r1", [(0.3, 0.2), (0.3, 0.4), (0.5, 0.2), (0.5, 0.4)])
def test_contour_radius_independence(r0, r1):
    q = QuadConfig(r0=r0, r1=r1)
    for p1, p2 in [((-1, 2, 0.5), (0, 2, 0.5)), ((-2, 3, 1.0), (-1, 4, 0.3)), ((0, 1, 2.0), (-1, 3, 2.0))]:
        assert abs(eval_K(p1, p2, q) - eval_K(p1, p2)) < 1e-9


def test_nodes_reported():
    val, nodes = eval_K((-1, 2, 0.5), (0, 2, 0.5), with_nodes=True)
    assert nodes & (nodes - 1) == 0 and nodes >= 128


def test_level_shift_identities_hold():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        x, xp = rng.integers(-5, 6, size=2)
        n, np_ = rng.integers(1, 6, size=2)
        t = float(rng.choice([0.3, 1.0]))
        first, second = shift_identity_residuals(int(x), int(n), int(xp), int(np_), t)
        assert abs(first) < 10 * DEFAULT_QUAD.rel_tol
        assert abs(second) < 10 * DEFAULT_QUAD.rel_tol


def test_printed_lower_level_identity_fails_only_beside_diagonal():
    """The sign-swapped delta term is off by exactly one at x' = x+1, n' = n and nowhere else."""
    failures = set()
    for x in (-2, -1, 0):
        for n in (1, 2, 3):
            for xp in range(x - 2, x + 3):
                for np_ in (n - 1, n, n + 1):
                    if np_ < 1:
                        continue
                    _, second = shift_identity_residuals(x, n, xp, np_, 0.6)
                    # residual of the form with +[n'=n]([x'=x+1] - [x'=x]) instead of -[n'=n][x'=x]
                    printed = second - float(np_ == n and xp == x + 1)
                    if abs(printed) > 1e-8:
                        failures.add((xp - x, np_ - n))
                        assert abs(printed + 1) < 1e-8
    assert failures == {(1, 0)}


def test_stationary_kernel_values_symmetric_slope():
    assert abs(eval_Kinv_nu_single(0, 0, SYM) - 1 / 3) < 1e-10
    assert abs(eval_Kinv_nu_single(-1, 0, SYM) + V_SYM) < 1e-10


def test_stationary_kernel_density_is_pb():
    for s in OFF_SLOPES:
        assert abs(eval_Kinv_nu_single(0, 0, s) - s.p_b) < 1e-10


def test_stationary_kernel_b_c_exchange():
    for s in OFF_SLOPES:
        for dx in range(-2, 3):
            for dn in range(-2, 3):
                lhs = eval_Kinv_nu_single(dx, dn, s)
                rhs = eval_Kinv_nu_single(dx, -dn - dx - 1, s.swapped_bc())
                assert abs(lhs - rhs) < 1e-10


def test_double_integral_examples():
    assert abs(eval_Kinv_abc_double(-1, 0, (1, 1, 1)) + V_SYM) < 1e-10
    assert abs(eval_Kinv_abc_double(0, 0, (1, 1, 1)) - 1 / 3) < 1e-10
    lam = 2.5
    w = Weights(1.0, 0.7, 1.3)
    for dx, dn in [(0, 0), (-1, 0), (2, -1), (-1, 2)]:
        assert abs(eval_Kinv_abc_double(dx, dn, w.scaled(lam)) - eval_Kinv_abc_double(dx, dn, w) / lam) < 1e-12


def test_double_integral_rejects_frozen_weights():
    with pytest.raises(FrozenSlopeError):
        eval_Kinv_abc_double(0, 0, (1.0, 3.0, 1.0))
    with pytest.raises(FrozenSlopeError):
        eval_Kinv_nu_single(0, 0, Slope(0.5, 0.5, 0.0))


def test_prefactor():
    w = Weights(0.8, 1.1, 0.6)
    assert nu_prefactor(-1, 0, w) == pytest.approx(w.b * w.c / w.a, rel=1e-15)
    assert nu_prefactor(0, 0, w) == w.b
    assert nu_prefactor(2, -3, w) == pytest.approx(w.b * (w.a / w.c) ** 2 * (w.b / w.c) ** -3, rel=1e-14)


@pytest.mark.parametrize("s", OFF_SLOPES)
def test_single_and_double_integral_agree(s):
    w = slope_to_weights(s)
    for dx in range(-3, 4):
        for dn in range(-3, 4):
            assert abs(nu_from_abc(dx, dn, w) - eval_Kinv_nu_single(dx, dn, s)) < 10 * DEFAULT_QUAD.rel_tol
