from math import pi

import numpy as np
import pytest

from renormvol import surfaces
from renormvol.geometry import Euclidean, SpaceForm
from renormvol.pipeline import analyze, analyze_homogeneous
from renormvol.renvol import (
    VolumeError,
    closed_form_v12,
    energy_n2_split,
    minimal_area_compare,
)


def test_unit_sphere_volume(unit_sphere):
    v = unit_sphere.volume
    np.testing.assert_allclose(v.v[1], -0.5, atol=1e-12)
    np.testing.assert_allclose(v.v[2], -0.5, atol=1e-12)
    assert v.c[0] == pytest.approx(2 * pi, abs=1e-12)
    assert v.c[1] == pytest.approx(-2 * pi, abs=1e-12)
    assert v.energy == pytest.approx(-2 * pi, abs=1e-12)


def test_recompute_matches(ellipsoid):
    c, e = ellipsoid.volume.recompute()
    np.testing.assert_allclose(c, ellipsoid.volume.c, rtol=1e-13)
    assert e == pytest.approx(ellipsoid.energy, rel=1e-13)


def test_closed_forms_on_torus(clifford_torus_like):
    a = clifford_torus_like
    v1, v2 = closed_form_v12(a.data)
    assert np.max(np.abs(a.volume.v[1] - v1)) < 1e-12
    assert np.max(np.abs(a.volume.v[2] - v2)) < 1e-11


def test_energy_split_and_minimal_area(ellipsoid):
    split = energy_n2_split(ellipsoid.data, ellipsoid.energy)
    assert split.chi == 2
    assert split.residual < 1e-10
    ma = minimal_area_compare(ellipsoid.data, energy=ellipsoid.energy)
    assert ma.pointwise_residual < 1e-10
    assert ma.global_residual < 1e-6


def test_torus_energy_closed_form(clifford_torus_like):
    # 1/4 of the trace-free Willmore integral for R/a = 2
    assert clifford_torus_like.energy == pytest.approx(pi**2 * 4 / (2 * np.sqrt(3)), abs=1e-10)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_circles_have_no_energy(a):
    r = analyze(surfaces.circle(a), Euclidean(2))
    assert np.max(np.abs(r.obstruction)) < 1e-12
    assert np.max(np.abs(r.volume.v[1])) < 1e-12
    assert abs(r.energy) < 1e-12


def test_v2_closed_form_needs_surfaces():
    r = analyze(surfaces.circle(1.0), Euclidean(2))
    with pytest.raises(VolumeError):
        closed_form_v12(r.data)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_homogeneous_closed_forms(n):
    h = analyze_homogeneous(n, SpaceForm(n + 1, -1.0), 0.8)
    v1, v2 = closed_form_v12(h.data)
    assert abs(float(h.volume.v[1] - v1)) < 1e-12
    assert abs(float(h.volume.v[2] - v2)) < 1e-12


@pytest.mark.parametrize("n", [4, 7, 8, 10])
def test_homogeneous_energy_is_conformally_invariant(n):
    energies = [
        analyze_homogeneous(n, amb, rho).energy
        for amb in (Euclidean(n + 1), SpaceForm(n + 1, 1.0), SpaceForm(n + 1, -1.0))
        for rho in (0.5, 1.1)
    ]
    scale = max(1.0, max(abs(e) for e in energies))
    assert max(energies) - min(energies) < 1e-8 * scale
    if n % 2:
        assert max(abs(e) for e in energies) < 1e-8
