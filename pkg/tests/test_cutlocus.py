import math

import numpy as np
import pytest

from utils.config import override_settings
from utils.cutlocus import (
    GeodesicClass, Membership, Tag, boundary_membership, classify, cut_locus_curve,
    cut_locus_polar, cut_time, distance, distance_batch, log_map, log_map_batch, log_map_boundary,
    partner, psi_profile, spine_radius, triangle_avoidance, triangle_margin, wavefront,
)
from utils.errors import InvalidInputError
from utils.flow import exp_map, exp_map_batch, perfect_vectors
from utils.sol_core import IDENTITY, Sector, SolPoint, TangentVector, inverse, multiply
from utils.specfun import MIN_PERIOD, holonomy_from_period, level_point, level_set_from_period, mu, period_from_a

WAVEFRONT_PERIODS = [4.6, 5.0, 6.0, 8.0, 12.0]


def small_vectors(rng, count, max_length=6.0):
    """Random vectors with mu between 0.2 pi and 0.9 pi"""
    found = []
    while len(found) < count:
        u = TangentVector(*rng.normal(size=3)).unit()
        value = mu(u)
        if value < 0.15:
            continue
        V = u.scaled(rng.uniform(0.2, 0.9) * math.pi / value)
        if V.norm() <= max_length:
            found.append(V)
    return found


# ==================== Classification ====================

def test_classification_of_reference_vectors():
    small = classify(TangentVector(2.0, 2.0, 0.0))
    assert small.tag is Tag.SMALL and small.mu == pytest.approx(2.0)
    assert classify(TangentVector(math.pi, math.pi, 0.0)).tag is Tag.PERFECT
    vertical = classify(TangentVector(1.0, 0.0, 99.0))
    assert vertical.tag is Tag.SMALL and vertical.mu == 0.0
    large = classify(TangentVector(4.0, 4.0, 0.0))
    assert large.tag is Tag.LARGE and not large.minimizing
    assert large.margin == pytest.approx(4.0 - math.pi)


def test_perfect_band_is_configurable():
    V = TangentVector(3.14159265, 3.14159265, 0.0)
    assert classify(V).tag is Tag.SMALL
    assert classify(V, tol_perfect=1e-8).tag is Tag.PERFECT
    with override_settings(tol_perfect=1e-8):
        assert classify(V).tag is Tag.PERFECT


def test_cut_time():
    assert cut_time(TangentVector(1.0, 0.0, 99.0).unit()) == math.inf
    diagonal = TangentVector(1.0, 1.0, 0.0).unit()
    assert cut_time(diagonal) == pytest.approx(MIN_PERIOD, rel=1e-12)
    assert classify(diagonal.scaled(cut_time(diagonal))).tag is Tag.PERFECT
    with pytest.raises(InvalidInputError):
        cut_time(TangentVector(1.0, 1.0, 0.0))


def test_perfect_vectors_classify_as_perfect():
    for a in (0.2, 0.5, 0.68):
        L = period_from_a(a)
        for V in perfect_vectors(a, np.linspace(0.0, L, 7)):
            result = classify(V)
            assert result.tag is Tag.PERFECT
            assert isinstance(result, GeodesicClass)
            assert classify(partner(V)).tag is Tag.PERFECT


# ==================== Spine ====================

def test_spine_at_the_diagonal():
    f, g = cut_locus_polar(math.pi / 4)
    assert f == pytest.approx(MIN_PERIOD, abs=1e-8)
    assert g == pytest.approx(MIN_PERIOD, abs=1e-8)


def test_spine_curve_properties():
    curve = cut_locus_curve(512)
    assert np.all(curve.g * np.sqrt(np.sin(2 * curve.theta)) >= MIN_PERIOD * (1 - 1e-12))
    assert np.all(curve.f >= MIN_PERIOD * (1 - 1e-12))
    product = curve.x * curve.y
    lower = curve.theta < math.pi / 4
    assert np.all(np.diff(product[lower]) < 0)
    assert np.all(np.diff(product[~lower]) > 0)
    np.testing.assert_allclose(product, curve.g ** 2 * np.sin(2 * curve.theta) / 2, rtol=1e-12)


def test_spine_product_is_the_squared_holonomy():
    for theta in (0.2, 0.6, 1.1):
        f, g = cut_locus_polar(theta)
        assert g * g * math.sin(theta) * math.cos(theta) == pytest.approx(holonomy_from_period(f) ** 2, rel=1e-12)


def test_spine_curve_sectors_and_frame():
    curve = cut_locus_curve(16)
    mirrored = cut_locus_curve(16, sector=Sector(-1, -1))
    np.testing.assert_allclose(mirrored.x, -curve.x)
    np.testing.assert_allclose(mirrored.y, -curve.y)
    assert list(curve.to_frame().columns) == ["theta", "f", "g", "x", "y"]
    with pytest.raises(InvalidInputError):
        cut_locus_polar(0.0)


def test_spine_spline_agrees_with_exact_values():
    for theta in (0.05, 0.1, 0.5, 0.78, 1.3):
        assert spine_radius(theta) == pytest.approx(spine_radius(theta, exact=True), rel=1e-5)
    assert spine_radius(5e-4) == spine_radius(5e-4, exact=True)


# ==================== Membership ====================

def test_boundary_membership():
    assert boundary_membership(SolPoint(1.0, 2.0, 0.5)) is Membership.IN_N
    assert boundary_membership(SolPoint(7.0, 0.0, 0.0)) is Membership.IN_N
    assert boundary_membership(SolPoint(2.0, 2.0, 0.0)) is Membership.IN_N
    assert boundary_membership(SolPoint(math.pi, math.pi, 0.0)) is Membership.ON_SPINE
    assert boundary_membership(SolPoint(4.0, 4.0, 0.0)) is Membership.ON_BOUNDARY
    theta = 0.3
    g = cut_locus_polar(theta)[1]
    on = SolPoint(g * math.cos(theta), g * math.sin(theta), 0.0)
    assert boundary_membership(on) is Membership.ON_SPINE
    beyond = SolPoint(1.001 * on.x, 1.001 * on.y, 0.0)
    assert boundary_membership(beyond) is Membership.ON_BOUNDARY
    inside = SolPoint(0.999 * on.x, 0.999 * on.y, 0.0)
    assert boundary_membership(inside) is Membership.IN_N


# ==================== Wavefronts ====================

@pytest.mark.parametrize("L", WAVEFRONT_PERIODS)
def test_wavefront_stays_inside_its_triangle(L):
    front = wavefront(L, 64)
    a_end, b_end = front.endpoint
    assert a_end > b_end > 0
    margin = triangle_margin(front)
    assert np.all(margin[:-1] > 0)
    assert margin[-1] == pytest.approx(0.0, abs=1e-12)

    profile = psi_profile(front)
    t, psi, dpsi = profile["t"].to_numpy(), profile["psi"].to_numpy(), profile["dpsi"].to_numpy()
    quarter = L / 4
    assert np.all(psi[t <= quarter * (1 + 1e-12)] < 0)
    assert np.all(dpsi[t < quarter - 1e-6] < 0)
    assert np.all(dpsi[t > quarter + 1e-6] > 0)


@pytest.mark.parametrize("L", [4.6, 6.0, 12.0])
def test_wavefront_endpoint_is_on_the_spine(L):
    front = wavefront(L, 64)
    a_end, b_end = front.endpoint
    level = level_set_from_period(L)
    x0, y0, _ = level_point(level.a)
    # initial tangent (2 x0, 2 y0) and the endpoint lie on one ray
    assert a_end * y0 == pytest.approx(b_end * x0, rel=1e-6)
    assert a_end * b_end == pytest.approx(level.H ** 2, rel=1e-6)
    assert boundary_membership(SolPoint(a_end, b_end, 0.0)) is Membership.ON_SPINE


@pytest.mark.parametrize("L", [4.6, 6.0, 12.0])
def test_wavefront_endpoint_is_the_image_of_the_swapped_level_point(L):
    x0, y0, _ = level_point(level_set_from_period(L).a)
    image = exp_map(TangentVector(L * y0, L * x0, 0.0))
    np.testing.assert_allclose(wavefront(L, 64).endpoint, [image.x, image.y], atol=1e-7)
    assert abs(image.z) <= 1e-7


@pytest.mark.parametrize("L", [4.6, 5.0, 8.0])
def test_spine_avoids_the_triangle(L):
    thetas = (np.arange(64) + 0.5) * (math.pi / 2) / 64
    assert triangle_avoidance(L, thetas)


def test_wavefront_validation():
    with pytest.raises(InvalidInputError):
        wavefront(5.0, 1)
    with pytest.raises(InvalidInputError):
        wavefront(4.0, 16)


# ==================== Inverse exponential ====================

def test_log_map_closed_forms():
    assert log_map(IDENTITY).vector == TangentVector(0.0, 0.0, 0.0)
    assert log_map(SolPoint(0.0, 0.0, -3.0)).vector == TangentVector(0.0, 0.0, -3.0)
    plane = SolPoint(math.tanh(1.0), 0.0, -math.log(math.cosh(1.0)))
    np.testing.assert_allclose(log_map(plane).vector.as_array(), [1.0, 0.0, 0.0], atol=1e-12)
    swapped = log_map(SolPoint(0.0, -math.tanh(1.0), math.log(math.cosh(1.0))))
    np.testing.assert_allclose(swapped.vector.as_array(), [0.0, -1.0, 0.0], atol=1e-12)
    assert log_map(SolPoint(1.5, 1.5, 0.0)).vector == TangentVector(1.5, 1.5, 0.0)


def test_log_map_on_the_spine():
    result = log_map(SolPoint(math.pi, math.pi, 0.0))
    assert result.membership is Membership.ON_SPINE
    assert not result.multiple
    np.testing.assert_allclose(result.vector.as_array(), [math.pi, math.pi, 0.0], atol=1e-9)


def test_log_map_beyond_the_spine_returns_partners():
    level = 0.45
    L = period_from_a(level)
    for V in perfect_vectors(level, [0.1 * L, 0.2 * L, 0.35 * L]):
        image = exp_map(V)
        # exp_map leaves integration noise in z; the boundary lives in z = 0
        target = SolPoint(image.x, image.y, 0.0)
        result = log_map(target)
        assert result.membership is Membership.ON_BOUNDARY
        assert result.multiple
        first, second = result.solutions
        assert second == partner(first)
        closest = min(result.solutions, key=lambda W: np.linalg.norm(W.as_array() - V.as_array()))
        np.testing.assert_allclose(closest.as_array(), V.as_array(), atol=1e-6)
        assert distance(IDENTITY, target) == pytest.approx(V.norm(), abs=1e-5)


def test_log_map_boundary_rejects_points_inside():
    with pytest.raises(InvalidInputError):
        log_map_boundary(SolPoint(1.0, 1.0, 0.0))
    with pytest.raises(InvalidInputError):
        log_map_boundary(SolPoint(-4.0, 4.0, 0.0))


def _check_round_trip(V: TangentVector):
    result = log_map(exp_map(V))
    assert result.membership is Membership.IN_N
    assert classify(result.vector).tag is not Tag.LARGE
    np.testing.assert_allclose(result.vector.as_array(), V.as_array(), atol=1e-6)


def test_log_map_round_trips_small_vectors(rng):
    for V in small_vectors(rng, 8):
        _check_round_trip(V)


@pytest.mark.slow
def test_log_map_round_trips_small_vectors_full_corpus(rng):
    for V in small_vectors(rng, 100):
        _check_round_trip(V)


def test_log_map_in_other_sectors():
    for V in (TangentVector(-1.0, 0.7, 0.4), TangentVector(0.9, -1.2, -0.6), TangentVector(-0.5, -1.5, 1.0)):
        _check_round_trip(V)


def test_log_map_picks_the_short_preimage_of_a_large_vector():
    V = perfect_vectors(0.55, [period_from_a(0.55) / 4])[0].scaled(1.15)
    assert classify(V).tag is Tag.LARGE
    result = log_map(exp_map(V))
    assert classify(result.vector).tag is not Tag.LARGE
    assert result.vector.norm() < V.norm() - 1e-4
    np.testing.assert_allclose(exp_map(result.vector).as_array(), exp_map(V).as_array(), atol=1e-6)


# ==================== Distance ====================

def test_distance_reference_values():
    assert distance(IDENTITY, SolPoint(0.0, 0.0, 5.0)) == pytest.approx(5.0, abs=1e-12)
    assert distance(IDENTITY, SolPoint(math.pi, math.pi, 0.0)) == pytest.approx(4.4428829, abs=1e-6)
    assert distance(SolPoint(1.0, 2.0, 3.0), SolPoint(1.0, 2.0, 3.0)) == 0.0


def test_distance_is_symmetric_and_left_invariant(rng):
    for _ in range(3):
        p = SolPoint(*rng.uniform(-1.5, 1.5, size=3))
        q = SolPoint(*rng.uniform(-1.5, 1.5, size=3))
        g = SolPoint(*rng.uniform(-1.0, 1.0, size=3))
        d = distance(p, q)
        assert distance(q, p) == pytest.approx(d, abs=1e-6)
        assert distance(multiply(g, p), multiply(g, q)) == pytest.approx(d, abs=1e-6)
        assert d <= distance(p, IDENTITY) + distance(IDENTITY, q) + 1e-9
        assert distance(IDENTITY, multiply(inverse(p), q)) == pytest.approx(d, abs=1e-12)


# ==================== Batches ====================

def large_vectors(rng, count, max_length=9.0):
    """Random vectors with mu between 1.05 pi and 1.9 pi, every sector"""
    found = []
    while len(found) < count:
        u = TangentVector(*rng.normal(size=3)).unit()
        value = mu(u)
        if value < 0.3:
            continue
        V = u.scaled(rng.uniform(1.05, 1.9) * math.pi / value)
        if V.norm() <= max_length:
            found.append(V)
    return found


def _check_batch_round_trip(vectors):
    V = np.array([W.as_array() for W in vectors])
    recovered = log_map_batch(exp_map_batch(V, dt=2.5e-3))
    np.testing.assert_allclose(recovered, V, atol=1e-6)


def test_log_map_batch_round_trips_small_vectors(rng):
    _check_batch_round_trip(small_vectors(rng, 40))


@pytest.mark.slow
def test_log_map_batch_round_trips_small_vectors_full_corpus(rng):
    _check_batch_round_trip(small_vectors(rng, 100))


def test_log_map_batch_agrees_with_log_map():
    points = np.array([
        [0.0, 0.0, -2.0],
        [math.tanh(1.0), 0.0, -math.log(math.cosh(1.0))],
        [math.pi, math.pi, 0.0],
        [5.0, -5.0, 0.0],
        [-0.8, 1.3, 0.6],
        [2.0, 0.5, -1.0],
    ])
    batch = log_map_batch(points)
    for row, V in zip(points, batch):
        np.testing.assert_allclose(V, log_map(SolPoint(*row)).vector.as_array(), atol=1e-6)
    assert log_map_batch(np.zeros(3)).shape == (1, 3)


def test_distance_batch(rng):
    q = np.array([[0.0, 0.0, 5.0], [math.pi, math.pi, 0.0], [1.0, 2.0, 3.0]])
    np.testing.assert_allclose(distance_batch(np.zeros(3), q)[:2], [5.0, math.pi * math.sqrt(2.0)], atol=1e-6)
    p = rng.uniform(-1.5, 1.5, size=(4, 3))
    q = rng.uniform(-1.5, 1.5, size=(4, 3))
    expected = [distance(SolPoint(*a), SolPoint(*b)) for a, b in zip(p, q)]
    np.testing.assert_allclose(distance_batch(p, q), expected, atol=1e-6)
    np.testing.assert_allclose(distance_batch(p, p), 0.0, atol=1e-12)


def _check_triangle_inequality(rng, count):
    p, q, r = (rng.uniform(-2.0, 2.0, size=(count, 3)) for _ in range(3))
    pq, qr, pr = distance_batch(p, q), distance_batch(q, r), distance_batch(p, r)
    assert np.all(pq + qr - pr >= -1e-6)


def test_triangle_inequality(rng):
    _check_triangle_inequality(rng, 12)


@pytest.mark.slow
def test_triangle_inequality_full_corpus(rng):
    _check_triangle_inequality(rng, 100)


def test_perfect_vectors_are_minimizing():
    vectors = []
    for a in np.linspace(0.2, 0.65, 10):
        L = period_from_a(a)
        vectors.extend(perfect_vectors(a, L * (np.arange(5) + 0.5) / 10))
    V = np.array([W.as_array() for W in vectors])
    images = exp_map_batch(V, dt=2.5e-3)
    # the images lie in z = 0 up to integration noise
    images[:, 2] = 0.0
    np.testing.assert_allclose(distance_batch(np.zeros(3), images), np.linalg.norm(V, axis=1), atol=1e-5)


def _check_large_vectors_are_not_minimizing(vectors):
    V = np.array([W.as_array() for W in vectors])
    d = distance_batch(np.zeros(3), exp_map_batch(V, dt=2.5e-3))
    assert np.all(d < np.linalg.norm(V, axis=1) - 1e-6)


def test_large_vectors_are_not_minimizing(rng):
    _check_large_vectors_are_not_minimizing(large_vectors(rng, 6))


@pytest.mark.slow
def test_large_vectors_are_not_minimizing_full_corpus(rng):
    _check_large_vectors_are_not_minimizing(large_vectors(rng, 50))
