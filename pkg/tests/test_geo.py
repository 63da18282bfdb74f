import numpy as np
import pytest

from termtraj import geo

KJFK = geo.AirportReference(40.6413, -73.7781, 4.0)

# frozen from a 50-digit-precision evaluation of the standard ellipsoid
# formulas (mpmath), beyond double precision
KJFK_ECEF = (1353946.3875350433, -4653673.9849122409, 4132281.2537237805)


def test_equator_prime_meridian():
    np.testing.assert_allclose(geo.wgs84_to_ecef(0.0, 0.0, 0.0), [geo.WGS84_A, 0.0, 0.0], atol=1e-9)


def test_north_pole():
    p = geo.wgs84_to_ecef(90.0, 0.0, 0.0)
    assert abs(p[0]) < 1e-8 and abs(p[1]) < 1e-8
    assert p[2] == pytest.approx(geo.WGS84_B, abs=1e-8)


def test_kjfk_ecef_matches_high_precision_oracle():
    p = geo.wgs84_to_ecef(40.6413, -73.7781, 4.0)
    np.testing.assert_allclose(p, KJFK_ECEF, atol=1e-3)  # <= 1 mm


def test_surface_points_satisfy_ellipsoid_equation():
    rng = np.random.default_rng(0)
    lat = rng.uniform(-90, 90, 200)
    lon = rng.uniform(-180, 180, 200)
    p = geo.wgs84_to_ecef(lat, lon, 0.0)
    lhs = (p[:, 0] / geo.WGS84_A) ** 2 + (p[:, 1] / geo.WGS84_A) ** 2 + (p[:, 2] / geo.WGS84_B) ** 2
    np.testing.assert_allclose(lhs, 1.0, rtol=0, atol=1e-12)


def test_reference_maps_to_origin():
    np.testing.assert_allclose(geo.ecef_to_enu(KJFK.ecef_origin, KJFK), 0.0, atol=1e-9)


def test_up_displacement_along_normal():
    d = 123.0
    p = geo.wgs84_to_ecef(KJFK.lat_deg, KJFK.lon_deg, KJFK.alt_m + d)
    enu = geo.ecef_to_enu(p, KJFK)
    assert abs(enu[0]) < 1e-6 and abs(enu[1]) < 1e-6
    assert enu[2] == pytest.approx(d, abs=1e-6)


def test_enu_roundtrip_and_isometry():
    rng = np.random.default_rng(1)
    pts = KJFK.ecef_origin + rng.uniform(-2e4, 2e4, (100, 3))
    enu = geo.ecef_to_enu(pts, KJFK)
    back = geo.enu_to_ecef(enu, KJFK)
    np.testing.assert_allclose(back, pts, rtol=0, atol=1e-9)
    np.testing.assert_allclose(
        np.linalg.norm(enu, axis=1),
        np.linalg.norm(pts - KJFK.ecef_origin, axis=1),
        rtol=0,
        atol=1e-6,
    )


def test_wgs84_inverse_roundtrip():
    rng = np.random.default_rng(2)
    lat = rng.uniform(-85, 85, 100)
    lon = rng.uniform(-180, 180, 100)
    alt = rng.uniform(-100, 5000, 100)
    la, lo, al = geo.ecef_to_wgs84(geo.wgs84_to_ecef(lat, lon, alt))
    np.testing.assert_allclose(la, lat, atol=1e-11)
    np.testing.assert_allclose(lo, lon, atol=1e-11)
    np.testing.assert_allclose(al, alt, atol=1e-6)


def test_in_terminal_airspace_examples():
    assert geo.in_terminal_airspace([0.0, 0.0, 0.0], KJFK)
    assert not geo.in_terminal_airspace([9300.0, 0.0, 100.0], KJFK)
    assert geo.in_terminal_airspace([9000.0, -9000.0, 900.0], KJFK)


def test_in_terminal_airspace_two_sided_up():
    assert geo.in_terminal_airspace([0.0, 0.0, -50.0], KJFK)
    assert not geo.in_terminal_airspace([0.0, 0.0, -915.0], KJFK)


def test_membership_monotone_under_shrinking():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1.2, 1.2, (300, 3)) * [9260, 9260, 914.4]
    inside = geo.in_terminal_airspace(pts, KJFK)
    shrunk = pts * rng.uniform(0.0, 1.0, (300, 1))
    assert np.all(geo.in_terminal_airspace(shrunk, KJFK)[inside])


def test_geodetic_validation():
    with pytest.raises(ValueError):
        geo.GeodeticPosition(91.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        geo.GeodeticPosition(0.0, 181.0, 0.0)
    p = geo.GeodeticPosition(40.6413, -73.7781, 4.0)
    np.testing.assert_allclose(p.to_ecef(), KJFK_ECEF, atol=1e-3)


def test_airport_reference_validation():
    with pytest.raises(ValueError):
        geo.AirportReference(0.0, 0.0, 0.0, runway_radius_m=-1.0)
    with pytest.raises(ValueError):
        geo.AirportReference(0.0, 0.0, 0.0, lateral_bound_m=0.0)
