from math import tan

import numpy as np
import pytest

from renormvol import surfaces
from renormvol.collar import (
    CollarError,
    CollarJets,
    collar_consistency_check,
    euclidean_collar,
    exact_collar,
    numeric_collar,
    spaceform_collar,
)
from renormvol.expr import parse_expr
from renormvol.geometry import ConformalFlat, Euclidean, fundamental_forms

STEREO = "log(2/(1 + x^2 + y^2 + z^2))"


def test_sphere_tube_metric_is_exact(sphere_data):
    jets = euclidean_collar(sphere_data)
    # unit sphere: h_r = (1 - r)^2 h_0
    r = 0.1
    np.testing.assert_allclose(jets.metric_at(r), (1 - r) ** 2 * sphere_data.h, atol=1e-15)
    assert collar_consistency_check(jets, sphere_data).passed


def test_space_form_tube_reduces_to_euclidean(sphere_data):
    a = euclidean_collar(sphere_data, K=5)
    b = spaceform_collar(sphere_data, c=0.0, K=5)
    np.testing.assert_array_equal(a.h, b.h)


def test_order_must_reach_n_plus_one(sphere_data):
    with pytest.raises(CollarError):
        exact_collar(sphere_data, K=2)


def test_record_round_trip(sphere_data):
    jets = exact_collar(sphere_data)
    back = CollarJets.loads(jets.dumps())
    np.testing.assert_array_equal(back.h, jets.h)
    np.testing.assert_array_equal(back.rbar, jets.rbar)
    assert back.kind == jets.kind


def test_malformed_records():
    with pytest.raises(CollarError):
        CollarJets.from_record({"h": [[1.0]]})
    bad = np.zeros((4, 2, 2))
    bad[0] = -np.eye(2)
    with pytest.raises(CollarError):
        CollarJets.from_record({"h": bad[:, None].tolist(), "rbar": [[0.0]], "ric_nn": [0.0]})


def test_numeric_collar_flat_chart_matches_tube():
    amb = ConformalFlat(3, parse_expr("0", ("x", "y", "z")))
    s = surfaces.sphere(shape=(32, 16), ambient=amb)
    d = fundamental_forms(s, amb)
    jn = numeric_collar(amb, s, K=4, data=d)
    je = euclidean_collar(fundamental_forms(surfaces.sphere(shape=(32, 16)), Euclidean(3)), K=4)
    err = np.max(np.abs(jn.h - je.h), axis=tuple(range(1, jn.h.ndim)))
    # finite-difference jets lose accuracy with the derivative order
    assert np.all(err[:3] < 1e-10)
    assert err[3] < 1e-8
    assert err[4] < 1e-5
    assert collar_consistency_check(jn, d).passed


def test_numeric_collar_stereographic_matches_spherical_tube():
    rho = 1.0
    g, amb3 = surfaces.geodesic_sphere(rho, 1.0, shape=(32, 16))
    js = spaceform_collar(fundamental_forms(g, amb3), K=4)
    amb = ConformalFlat(3, parse_expr(STEREO, ("x", "y", "z")))
    s = surfaces.sphere(tan(rho / 2), shape=(32, 16), ambient=amb)
    jn = numeric_collar(amb, s, K=4)
    err = np.max(np.abs(jn.h - js.h), axis=tuple(range(1, jn.h.ndim)))
    assert err[2] < 1e-9
    assert err[4] < 1e-5


def test_numeric_collar_order_cap():
    amb = ConformalFlat(3, parse_expr("0.1*z", ("x", "y", "z")))
    s = surfaces.sphere(shape=(32, 16), ambient=amb)
    with pytest.raises(CollarError):
        numeric_collar(amb, s, K=5)
