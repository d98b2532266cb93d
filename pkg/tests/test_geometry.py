from math import pi, sinh, tanh

import numpy as np
import pytest

from renormvol import surfaces
from renormvol.expr import parse_expr
from renormvol.geometry import (
    ConformalFlat,
    Euclidean,
    GeometryError,
    SpaceForm,
    build_surface,
    euler_characteristic,
    fundamental_forms,
    homogeneous_sphere,
    surface_integrate,
    tangential_laplacian,
)
from renormvol.grid import GridSpec


def test_unit_sphere_forms(sphere_data):
    d = sphere_data
    np.testing.assert_allclose(d.H, 2.0, atol=1e-12)
    np.testing.assert_allclose(d.R, 2.0, atol=1e-11)
    np.testing.assert_allclose(d.Lo2, 0.0, atol=1e-12)
    assert surface_integrate(1.0, d) == pytest.approx(4 * pi, abs=1e-12)
    assert euler_characteristic(d)[0] == 2


def test_sphere_laplacian_eigenfunction_fourth_order():
    errs = []
    for shape in [(32, 16), (64, 32), (128, 64)]:
        d = fundamental_forms(surfaces.sphere(shape=shape), Euclidean(3))
        z = d.surface.X[2]
        errs.append(np.max(np.abs(tangential_laplacian(z, d) + 2 * z)))
    assert errs[-1] < 1e-6
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.7)


def test_torus_mean_curvature_and_topology():
    d = fundamental_forms(surfaces.torus(2.0, 1.0), Euclidean(3))
    v = d.surface.params[1]
    np.testing.assert_allclose(d.H, 1 + np.cos(v) / (2 + np.cos(v)), atol=1e-12)
    assert surface_integrate(1.0, d) == pytest.approx(8 * pi**2, abs=1e-10)
    assert euler_characteristic(d)[0] == 0


def test_trace_free_part_is_nonnegative():
    d = fundamental_forms(surfaces.ellipsoid(1.0, 1.3, 0.7), Euclidean(3))
    assert d.Lo2.min() > -1e-12
    assert euler_characteristic(d)[0] == 2


def test_orientation_makes_sphere_convex_inward():
    # reversing the parametrisation must not flip the sign of H
    emb = ["cos(u)*sin(v)", "-sin(u)*sin(v)", "cos(v)"]
    s = build_surface(Euclidean(3), emb, GridSpec((64, 32), "sphere"))
    d = fundamental_forms(s, Euclidean(3))
    np.testing.assert_allclose(d.H, 2.0, atol=1e-12)


def test_hyperbolic_geodesic_sphere():
    s, amb = surfaces.geodesic_sphere(1.0, -1.0)
    d = fundamental_forms(s, amb)
    np.testing.assert_allclose(d.H, 2 / tanh(1.0), atol=1e-10)
    np.testing.assert_allclose(d.R, 2 / sinh(1.0) ** 2, atol=1e-9)
    assert surface_integrate(1.0, d) == pytest.approx(4 * pi * sinh(1.0) ** 2, rel=1e-12)


def test_homogeneous_matches_grid(sphere_data):
    h = homogeneous_sphere(2)
    assert float(h.H) == 2.0
    assert float(h.dA) == pytest.approx(4 * pi)
    assert float(h.R) == pytest.approx(2.0)


def test_homogeneous_rejects_conformal_ambient():
    amb = ConformalFlat(3, parse_expr("0.1*x", ("x", "y", "z")))
    with pytest.raises(GeometryError):
        homogeneous_sphere(2, amb)


def test_degenerate_immersion_is_rejected():
    emb = ["cos(u)", "sin(u)", "0*v"]
    with pytest.raises(GeometryError):
        build_surface(Euclidean(3), emb, GridSpec((32, 32), "torus"))


def test_space_form_chart_check():
    # a 3-vector embedding cannot live in the 4-dimensional chart of S^3
    with pytest.raises(GeometryError):
        build_surface(SpaceForm(3, 1.0), surfaces.sphere_embedding(0.5), GridSpec((64, 32), "sphere"))
