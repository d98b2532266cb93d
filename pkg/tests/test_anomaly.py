import numpy as np
import pytest

from renormvol.anomaly import (
    anomaly_report,
    anomaly_route_b,
    anomaly_route_closed,
    b_from_upsilon,
    conformal_jets,
    constant_jets,
    quadratic_part,
    random_omega,
    route_b_terms,
    scaled,
)


@pytest.mark.parametrize(
    "omega",
    ["0.1*z", "0.2*x + 0.1*y*z + 0.3*z^2", "0.1*cos(u)*sin(v) + 0.2*r + 0.3*r^2*cos(v)"],
)
def test_two_routes_agree(ellipsoid, omega):
    d = ellipsoid.data
    cj = conformal_jets(omega, d.surface, d)
    rep = anomaly_report(cj, ellipsoid.volume, d)
    assert rep.difference < 1e-11


def test_constant_law(ellipsoid):
    k = 0.3
    d = ellipsoid.data
    val = anomaly_route_b(constant_jets(k, d), ellipsoid.volume, d)
    assert val == pytest.approx(-k * ellipsoid.energy, abs=1e-12)


def test_b_series_matches_upsilon_inversion(ellipsoid):
    d = ellipsoid.data
    cj = conformal_jets("0.2*x - 0.1*z^2", d.surface, d)
    assert route_b_terms(cj).mismatch < 1e-13
    np.testing.assert_allclose(b_from_upsilon(cj).a, cj.b_series().a, atol=1e-14)


def test_quadratic_part_scaling(unit_sphere):
    d = unit_sphere.data
    cj = conformal_jets("0.2*x + 0.1*y*z", d.surface, d)
    lin_plus_quad = anomaly_route_closed(cj, d)
    doubled = anomaly_route_closed(scaled(cj, 2.0), d)
    assert doubled - 2 * lin_plus_quad == pytest.approx(2 * quadratic_part(cj, d), abs=1e-12)


def test_ambient_and_collar_forms_agree_on_linear_omega(unit_sphere):
    # on the unit sphere z = cos(v) and the inward normal derivative of z is -z
    d = unit_sphere.data
    a = conformal_jets("0.3*z", d.surface, d)
    b = conformal_jets("0.3*cos(v)*(1 - r)", d.surface, d)
    np.testing.assert_allclose(a.omega, b.omega, atol=1e-14)
    np.testing.assert_allclose(a.omega_r, b.omega_r, atol=1e-14)
    np.testing.assert_allclose(a.grad2, b.grad2, atol=1e-12)


def test_random_omega_is_seeded():
    a = random_omega(np.random.default_rng(5))
    b = random_omega(np.random.default_rng(5))
    assert a == b
