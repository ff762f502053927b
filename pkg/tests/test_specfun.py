import math

import numpy as np
import pytest
from scipy import special

from utils.errors import InvalidInputError
from utils.sol_core import TangentVector
from utils.specfun import (
    HALF_SQRT2, MIN_PERIOD, agm, agm_descent, diagonal_point, elliptic_E, elliptic_K,
    elliptic_m_from_period, elliptic_parameter, holonomy_from_period, level_point,
    level_set, level_set_from_period, mu, period_from_a, period_from_holonomy,
    period_integral, turning_time,
)

A_GRID = [0.05 * k for k in range(1, 14)]
M_GRID = [0.0, 1e-6, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999999]


# ==================== AGM and mu ====================

def test_agm_reference_value():
    assert agm(1.0, math.sqrt(2.0)) == pytest.approx(1.1981402347355922, abs=1e-12)


@pytest.mark.parametrize("alpha, beta", [(1.0, 2.0), (0.3, 0.7), (5.0, 1e-3)])
def test_agm_is_symmetric_and_between_means(alpha, beta):
    value = agm(alpha, beta)
    assert value == agm(beta, alpha)
    assert math.sqrt(alpha * beta) <= value <= (alpha + beta) / 2


def test_agm_degenerate_arguments():
    assert agm(2.0, 2.0) == 2.0
    assert agm(0.0, 1.0) == 0.0
    with pytest.raises(InvalidInputError):
        agm_descent(-1.0, 1.0)


def test_mu_reference_values():
    assert mu(TangentVector(2.0, 2.0, 0.0)) == pytest.approx(2.0, abs=1e-14)
    assert mu(TangentVector(1.0, 0.0, 99.0)) == 0.0
    assert mu(TangentVector(math.pi, math.pi, 0.0)) == pytest.approx(math.pi, abs=1e-14)


def test_mu_is_homogeneous_and_symmetric():
    v = TangentVector(0.4, 1.3, -0.7)
    assert mu(v.scaled(3.0)) == pytest.approx(3.0 * mu(v), rel=1e-14)
    assert mu(TangentVector(-v.x, v.y, v.z)) == mu(v)
    assert mu(TangentVector(v.y, v.x, -v.z)) == mu(v)


# ==================== Elliptic integrals ====================

def test_elliptic_reference_values():
    assert elliptic_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert elliptic_E(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert elliptic_K(0.5) == pytest.approx(1.8540746773013719, abs=1e-12)
    assert elliptic_E(0.5) == pytest.approx(1.3506438810476755, abs=1e-12)
    assert elliptic_E(1.0) == 1.0


@pytest.mark.parametrize("m", M_GRID)
def test_elliptic_integrals_match_scipy(m):
    assert elliptic_K(m) == pytest.approx(special.ellipk(m), rel=1e-13)
    assert elliptic_E(m) == pytest.approx(special.ellipe(m), rel=1e-12)


def test_elliptic_domain():
    with pytest.raises(InvalidInputError):
        elliptic_K(1.0)
    with pytest.raises(InvalidInputError):
        elliptic_E(1.5)


# ==================== Periods ====================

@pytest.mark.parametrize("a", A_GRID)
def test_period_matches_elliptic_chain(a):
    m = elliptic_parameter(a)
    assert period_from_a(a) == pytest.approx(math.sqrt(8 + 8 * m) * elliptic_K(m), abs=1e-10)


@pytest.mark.parametrize("a", A_GRID)
def test_period_matches_quadrature(a):
    assert period_integral(a) == pytest.approx(period_from_a(a), rel=1e-9)


def test_period_tends_to_minimum_at_the_fixed_point():
    assert period_from_a(HALF_SQRT2 - 1e-10) == pytest.approx(MIN_PERIOD, abs=1e-6)
    periods = [period_from_a(a) for a in A_GRID]
    assert all(p > q for p, q in zip(periods, periods[1:]))
    assert all(p > MIN_PERIOD for p in periods)


def test_diagonal_and_level_points_are_on_one_level_set():
    for a in (0.1, 0.4, 0.65):
        u = diagonal_point(a)
        p0 = level_point(a)
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-15)
        assert np.linalg.norm(p0) == pytest.approx(1.0, abs=1e-15)
        assert p0[0] * p0[1] == pytest.approx(a * a, rel=1e-13)
        assert p0[0] > p0[1] > 0 and p0[2] == 0.0
        assert math.cosh(2 * turning_time(a)) == pytest.approx(1 / (2 * a * a), rel=1e-13)


@pytest.mark.parametrize("a", [0.0, -0.1, HALF_SQRT2, 0.8])
def test_period_domain(a):
    with pytest.raises(InvalidInputError):
        period_from_a(a)


# ==================== Holonomy ====================

def test_holonomy_anchor():
    assert holonomy_from_period(MIN_PERIOD) == pytest.approx(math.pi, abs=1e-10)
    assert period_from_holonomy(math.pi) == pytest.approx(MIN_PERIOD, abs=1e-12)
    assert elliptic_m_from_period(MIN_PERIOD) == 0.0


def test_holonomy_grows_like_exp_quarter_period():
    ratios = [holonomy_from_period(L) * math.exp(-L / 4) for L in (20.0, 30.0, 40.0)]
    gaps = [abs(r - 1.0) for r in ratios]
    assert gaps[0] > gaps[1] > gaps[2]
    assert 0.8 < ratios[-1] < 1.2


def test_holonomy_is_increasing():
    values = [holonomy_from_period(L) for L in np.linspace(MIN_PERIOD * 1.001, 30.0, 40)]
    assert all(p < q for p, q in zip(values, values[1:]))


@pytest.mark.parametrize("L", [4.6, 5.0, 8.0, 20.0])
def test_holonomy_inversions(L):
    assert period_from_holonomy(holonomy_from_period(L)) == pytest.approx(L, rel=1e-9)
    m = elliptic_m_from_period(L)
    assert math.sqrt(8 + 8 * m) * elliptic_K(m) == pytest.approx(L, rel=1e-12)


def test_holonomy_domain():
    with pytest.raises(InvalidInputError):
        holonomy_from_period(4.0)
    with pytest.raises(InvalidInputError):
        period_from_holonomy(3.0)


# ==================== Level sets ====================

@pytest.mark.parametrize("a", [0.05, 0.2, 0.45, 0.7])
def test_level_set_from_period_inverts_period(a):
    level = level_set_from_period(period_from_a(a))
    assert level.a == pytest.approx(a, rel=1e-9)
    assert level.m == pytest.approx(elliptic_parameter(a), rel=1e-8, abs=1e-12)


def test_level_set_record_is_consistent():
    level = level_set(0.5)
    assert level.L == period_from_a(0.5)
    assert level.H == pytest.approx(holonomy_from_period(level.L), rel=1e-13)


def test_level_set_at_the_minimum_period_is_the_limit():
    level = level_set_from_period(MIN_PERIOD)
    assert level.a == HALF_SQRT2
    assert level.m == 0.0
    assert level.H == math.pi


# ==================== Properties ====================

def test_mu_homogeneity_on_random_vectors(rng):
    for _ in range(1000):
        v = TangentVector(*rng.normal(size=3))
        r = rng.uniform(-10.0, 10.0)
        expected = abs(r) * mu(v)
        assert abs(mu(v.scaled(r)) - expected) <= 1e-12 * expected


def test_period_is_decreasing_on_a_fine_grid():
    periods = np.array([period_from_a(a) for a in np.linspace(0.01, 0.70, 1000)])
    assert np.all(np.diff(periods) < 0)


def test_holonomy_is_increasing_up_to_fifty():
    values = np.array([holonomy_from_period(L) for L in np.linspace(MIN_PERIOD + 0.01, 50.0, 200)])
    assert np.all(np.diff(values) > 0)
