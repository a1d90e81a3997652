import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from muponzi import hyperbolic as hyp
from muponzi.hyperbolic import (
    DiskPoint,
    GeometryError,
    QuadratureError,
    QuadratureSpec,
    angle_from_sides,
    area_integral,
    ball_volume,
    distance,
    integrate_ball,
    lens_geometry,
    polar_point,
    side_from_angle,
    triangle_area,
)

mp.mp.dps = 40

radii = st.floats(0.0, 4.0)
angles = st.floats(0.0, 2 * math.pi)
disk_points = st.builds(lambda r, t: complex(polar_point(r, t)), radii, angles)


def mp_ball(R):
    return 2 * mp.pi * (mp.cosh(R) - 1)


def mp_lens(r):
    r = mp.mpf(r)
    a = mp.acos((mp.cosh(r) ** 2 - mp.cosh(1)) / mp.sinh(r) ** 2)
    b = mp.acos((mp.cosh(r) * mp.cosh(1) - mp.cosh(r)) / (mp.sinh(r) * mp.sinh(1)))
    return a, b, 2 * a * mp.cosh(r) + 2 * b * (mp.cosh(1) + 1) - 2 * mp.pi


# ---------------------------------------------------------------------------
# distances


def test_distance_from_origin_matches_log_formula():
    assert distance(0j, 0.5 + 0j) == pytest.approx(float(mp.log(3)), abs=1e-14)
    for r in (0.1, 0.5, 0.9, 0.999):
        assert distance(0j, r) == pytest.approx(float(mp.log((1 + mp.mpf(r)) / (1 - mp.mpf(r)))), rel=1e-12)


def test_distance_matches_mobius_formula_in_high_precision():
    rng = np.random.default_rng(1)
    for _ in range(50):
        z, w = (complex(polar_point(rng.uniform(0, 5), rng.uniform(0, 6.3))) for _ in range(2))
        delta = abs(mp.mpc(z) - mp.mpc(w)) / abs(1 - mp.conj(mp.mpc(z)) * mp.mpc(w))
        expect = mp.log((1 + delta) / (1 - delta))
        assert distance(z, w) == pytest.approx(float(expect), rel=1e-9, abs=1e-12)


@given(disk_points)
def test_distance_to_self_is_zero(z):
    assert distance(z, z) == 0.0


@given(radii, angles)
def test_polar_roundtrip(r, t):
    assert DiskPoint.from_polar(r, t).r == pytest.approx(r, abs=1e-12 * max(1, r) if r < 4 else 1e-9)


def test_rotation_invariance():
    assert distance(0.3, 0.6) == pytest.approx(distance(0.3 * np.exp(1j), 0.6 * np.exp(1j)), abs=1e-14)


def test_triangle_inequality_random_triples():
    rng = np.random.default_rng(7)
    r = rng.uniform(0, 5, size=(1000, 3))
    t = rng.uniform(0, 2 * np.pi, size=(1000, 3))
    z = polar_point(r, t)
    a, b, c = z[:, 0], z[:, 1], z[:, 2]
    assert np.all(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12)
    assert np.allclose(distance(a, b), distance(b, a), rtol=0, atol=1e-12)


def test_points_outside_disk_rejected():
    with pytest.raises(GeometryError):
        distance(0j, 1.0 + 0j)
    with pytest.raises(GeometryError):
        DiskPoint(0.8, 0.7)


def test_translate_is_isometry():
    rng = np.random.default_rng(3)
    c = complex(polar_point(1.3, 0.4))
    u = polar_point(rng.uniform(0, 3, 100), rng.uniform(0, 6.3, 100))
    v = polar_point(rng.uniform(0, 3, 100), rng.uniform(0, 6.3, 100))
    assert np.allclose(distance(hyp.translate(c, u), hyp.translate(c, v)), distance(u, v), atol=1e-9)
    assert hyp.translate(c, 0j) == pytest.approx(c)


# ---------------------------------------------------------------------------
# trigonometry


def test_ball_volume():
    assert ball_volume(1.0) == pytest.approx(float(mp_ball(1)), abs=1e-14)
    assert ball_volume(1.0) == pytest.approx(3.4122762652849, abs=1e-12)
    assert ball_volume(0.0) == 0.0
    with pytest.raises(GeometryError):
        ball_volume(-1.0)


def test_triangle_area():
    assert triangle_area(0, 0, 0) == pytest.approx(math.pi)
    assert triangle_area(math.pi / 3, math.pi / 3, math.pi / 6) == pytest.approx(math.pi / 6)
    with pytest.raises(GeometryError):
        triangle_area(math.pi / 2, math.pi / 2, 0.1)


@given(st.floats(0.05, 5.0))
def test_equilateral_angle(a):
    g = angle_from_sides(a, a, a)
    assert math.cos(g) == pytest.approx(math.cosh(a) / (math.cosh(a) + 1), abs=1e-10)


def test_degenerate_triangle_is_straight():
    assert angle_from_sides(1.0, 2.0, 3.0) == pytest.approx(math.pi, abs=1e-6)
    with pytest.raises(GeometryError):
        angle_from_sides(1.0, 1.0, 3.0)


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.05, math.pi - 0.05))
def test_side_angle_roundtrip(a, b, gamma):
    c = side_from_angle(a, b, gamma)
    assert angle_from_sides(a, b, c) == pytest.approx(gamma, abs=1e-7)


def test_right_angle_roundtrip_at_unit_sides():
    c = side_from_angle(1.0, 1.0, math.pi / 2)
    assert angle_from_sides(1.0, 1.0, c) == pytest.approx(math.pi / 2, abs=1e-10)


def test_lens_at_unit_radius_matches_high_precision():
    a, b, area = mp_lens(1)
    lg = lens_geometry(1.0)
    assert lg.alpha == pytest.approx(float(a), abs=1e-12)
    assert lg.beta == pytest.approx(float(b), abs=1e-12)
    assert lg.alpha == pytest.approx(lg.beta, abs=1e-12)
    assert lg.alpha == pytest.approx(0.9187979, abs=1e-7)
    assert lg.lens_area == pytest.approx(float(area), abs=1e-12)
    assert lg.lens_area == pytest.approx(1.2255273, abs=1e-7)


@given(st.floats(0.5001, 25.0))
def test_lens_angles_match_law_of_cosines(r):
    lg = lens_geometry(r)
    ca, cb = lg.cosines()
    assert math.cos(lg.alpha) == pytest.approx(ca, abs=1e-10)
    assert math.cos(lg.beta) == pytest.approx(cb, abs=1e-10)
    assert 0 < lg.alpha < math.pi and 0 < lg.beta < math.pi


@pytest.mark.parametrize("r", [0.6, 1.0, 2.0, 5.0])
def test_lens_triangle_satisfies_law_of_cosines_on_all_sides(r):
    lg = lens_geometry(r)
    # triangle (0, z, p+) has sides r (0-z), r (0-p+), 1 (z-p+)
    assert angle_from_sides(r, r, 1.0) == pytest.approx(lg.alpha, abs=1e-10)
    assert angle_from_sides(r, 1.0, r) == pytest.approx(lg.beta, abs=1e-10)
    # isosceles: the angle at p+ equals the angle at z
    p_plus = lg.intersection_points()[0]
    z = complex(polar_point(r, 0.0))
    assert distance(z, p_plus) == pytest.approx(1.0, abs=1e-9)
    assert distance(0j, p_plus) == pytest.approx(r, abs=1e-9)


def test_lens_requires_crossing_circles():
    with pytest.raises(GeometryError):
        lens_geometry(0.5)


def test_lens_large_r_behaviour():
    areas = [lens_geometry(r).lens_area for r in (5.0, 10.0, 20.0)]
    alphas = [lens_geometry(r).alpha for r in (5.0, 10.0, 20.0)]
    assert alphas[0] > alphas[1] > alphas[2] > 0
    # alpha cosh r -> 2 sinh(1/2) and beta -> pi/2 - arctan(sinh 1/2)
    limit = 4 * math.sinh(0.5) + 2 * (math.pi / 2 - math.atan(math.sinh(0.5))) * (math.cosh(1) + 1) - 2 * math.pi
    assert abs(areas[2] - limit) < 1e-6
    assert all(a < ball_volume(1.0) for a in areas)


# ---------------------------------------------------------------------------
# quadrature


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_ball_area_by_quadrature(R):
    q = area_integral(lambda w: distance(0j, w) <= R, 0j, R)
    assert q.value == pytest.approx(ball_volume(R), abs=1e-8)


@pytest.mark.parametrize("r", [0.0, 0.3, 0.8, 1.5])
def test_ball_area_independent_of_center(r):
    c = complex(polar_point(r, 0.7))
    q = area_integral(lambda w: distance(c, w) <= 1.0, c, 1.0, QuadratureSpec(abs_tol=1e-8))
    assert abs(q.value - float(mp_ball(1))) <= 1e-6


def test_empty_region():
    q = area_integral(lambda w: np.zeros(np.shape(w), dtype=bool), 0.3 + 0j, 1.0)
    assert q.value == 0.0


def test_lens_area_by_quadrature():
    z = complex(polar_point(1.0, 0.0))
    q = area_integral(lambda w: (distance(z, w) <= 1.0) & (distance(0j, w) < 1.0), z, 1.0,
                      QuadratureSpec(abs_tol=1e-6))
    assert q.value == pytest.approx(lens_geometry(1.0).lens_area, abs=1e-4)


@pytest.mark.parametrize("r", [0.75, 1.0, 2.0])
def test_lens_decomposition_by_three_quadratures(r):
    """mu(D(z)) = sector at 0 + sector at z - quadrilateral (0, p-, z, p+)."""
    lg = lens_geometry(r)
    z = complex(polar_point(r, 0.0))
    pp, pm = lg.intersection_points()
    spec = QuadratureSpec(abs_tol=1e-6)
    s0 = area_integral(hyp.geodesic_sector(0j, r, 0.0, lg.alpha), 0j, r, spec).value
    sz = area_integral(hyp.geodesic_sector(z, 1.0, hyp.direction_towards(z, 0j), lg.beta), z, 1.0, spec).value
    t1, t2 = hyp.geodesic_triangle(0j, z, pp), hyp.geodesic_triangle(0j, z, pm)
    quad = area_integral(lambda w: t1(w) | t2(w), 0j, r, spec).value
    assert s0 + sz - quad == pytest.approx(lg.lens_area, abs=1e-4)
    # each triangle has angles alpha, beta, beta
    assert quad / 2 == pytest.approx(triangle_area(lg.alpha, lg.beta, lg.beta), abs=1e-4)


def test_monte_carlo_within_three_standard_errors():
    spec = QuadratureSpec(method="monte_carlo", max_evals=200_000, seed=5)
    c = complex(polar_point(0.8, 1.0))
    q = area_integral(lambda w: distance(c, w) <= 1.0, c, 1.0, spec)
    assert q.method == "monte_carlo"
    assert abs(q.value - ball_volume(1.0)) <= 3 * q.error
    again = area_integral(lambda w: distance(c, w) <= 1.0, c, 1.0, spec)
    assert again.value == q.value


def test_adaptive_is_deterministic():
    c = complex(polar_point(1.1, 0.2))
    f = lambda w: (distance(c, w) <= 1.0) & (np.abs(w) < 0.5)
    a = area_integral(f, c, 1.0, QuadratureSpec(abs_tol=1e-6))
    b = area_integral(f, c, 1.0, QuadratureSpec(abs_tol=1e-6))
    assert a == b


def test_unreachable_tolerance_raises():
    with pytest.raises(QuadratureError):
        area_integral(lambda w: distance(0.1, w) <= 1.0, 0.1 + 0j, 1.0, QuadratureSpec(abs_tol=1e-30))


def test_region_outside_bounding_ball_raises():
    with pytest.raises(GeometryError):
        area_integral(lambda w: distance(0j, w) <= 2.0, 0j, 1.0)


def test_weighted_integral_of_radial_function():
    # int_{B(0,R)} cosh(d(0,w)) dmu = 2 pi int_0^R cosh(t) sinh(t) dt = pi sinh(R)^2
    R = 1.5
    q = integrate_ball(lambda w: np.ones(np.shape(w)) * (distance(0j, w) <= R), 0j, R,
                       QuadratureSpec(abs_tol=1e-8), weight=lambda w: np.cosh(hyp.radius_from_origin(w)))
    assert q.value == pytest.approx(math.pi * math.sinh(R) ** 2, abs=1e-7)


@pytest.mark.parametrize("seed", range(6))
def test_difference_of_overlapping_disks_integrates_to_zero(seed):
    """Off-centre unit disks crossing at shallow angles: each has the same area,
    so their difference integrates to zero."""
    rng = np.random.default_rng(seed)
    x = complex(polar_point(rng.uniform(0, 0.5), rng.uniform(0, 6.3)))
    a, b = (complex(polar_point(rng.uniform(0, 1.2), rng.uniform(0, 6.3))) for _ in range(2))
    R = max(distance(x, a), distance(x, b)) + 1.0 + 1e-9
    spec = QuadratureSpec(abs_tol=1e-5)
    q = integrate_ball(lambda w: (distance(w, a) <= 1.0).astype(float) - (distance(w, b) <= 1.0), x, R, spec)
    assert abs(q.value) <= 1e-5
