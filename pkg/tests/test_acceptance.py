"""Acceptance criteria, one test each; every test prints a PASS/FAIL line with
the measured residual and the tolerance it is held to."""
import time
from math import pi, sqrt, tan

import numpy as np

from conftest import ACCEPTANCE_LINES
from renormvol import surfaces
from renormvol.anomaly import anomaly_report, anomaly_route_b, conformal_jets, constant_jets, random_omega
from renormvol.expr import parse_expr
from renormvol.geometry import ConformalFlat, Euclidean, SpaceForm
from renormvol.pipeline import analyze, analyze_homogeneous
from renormvol.renvol import closed_form_v12, minimal_area_compare
from renormvol.sweep import ratio_ladder, torus_minimum, torus_sweep
from renormvol.variation import energy_variation_fd, variation_rhs
from renormvol.volprobe import closed_form_expansion, fit_expansion, get_model
from renormvol.yamabe import closed_form_phis, indicial_self_test, residual_scan

STEREO = "log(2/(1 + x^2 + y^2 + z^2))"


def report(number: int, title: str, ok: bool, detail: str):
    line = f"[{number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _maxabs(x) -> float:
    return float(np.max(np.abs(x)))


def _sphere_errors(a) -> float:
    e, v = a.expansion, a.volume
    return max(
        _maxabs(e.phi_coeff(0) + 0.5),
        _maxabs(e.phi_coeff(1)),
        _maxabs(e.obstruction),
        _maxabs(v.v[1] + 0.5),
        _maxabs(v.v[2] + 0.5),
        abs(v.energy + 2 * pi),
    )


def test_01_sphere_exactness():
    t0 = time.perf_counter()
    grid = _sphere_errors(analyze(surfaces.sphere(shape=(64, 32)), Euclidean(3)))
    hom = _sphere_errors(analyze_homogeneous(2))
    elapsed = time.perf_counter() - t0
    ok = grid < 1e-8 and hom < 1e-12 and elapsed < 5
    report(1, "sphere exactness", ok,
           f"grid {grid:.2e} (tol 1e-8), homogeneous {hom:.2e} (tol 1e-12), {elapsed:.2f}s (limit 5s)")


def _closed_form_gap(a) -> float:
    d, e, v = a.data, a.expansion, a.volume
    cf = closed_form_phis(d)
    v1, v2 = closed_form_v12(d)
    return max(
        _maxabs(e.phi_coeff(0) - cf.phi0),
        _maxabs(e.phi_coeff(1) - cf.phi1),
        _maxabs(cf.phi1 - cf.phi1_intermediate),
        _maxabs(v.v[1] - v1),
        _maxabs(v.v[2] - v2),
    )


def test_02_closed_form_fleet():
    t0 = time.perf_counter()
    fleet = {
        "sphere": analyze(surfaces.sphere(), Euclidean(3)),
        "torus(2,1)": analyze(surfaces.torus(2.0, 1.0), Euclidean(3)),
        "ellipsoid(1,1.3,0.7)": analyze(surfaces.ellipsoid(1.0, 1.3, 0.7), Euclidean(3)),
        "S3 geodesic sphere": analyze(*surfaces.geodesic_sphere(1.0, 1.0)),
        "H3 geodesic sphere": analyze(*surfaces.geodesic_sphere(1.0, -1.0)),
    }
    for n in range(3, 7):
        for c in (0.0, 1.0, -1.0):
            amb = Euclidean(n + 1) if c == 0 else SpaceForm(n + 1, c)
            fleet[f"homogeneous n={n} c={c:+g}"] = analyze_homogeneous(n, amb, 0.8)
    gaps = {name: _closed_form_gap(a) for name, a in fleet.items()}
    assert all(a.jets.kind == "exact" for a in fleet.values())
    elapsed = time.perf_counter() - t0
    worst = max(gaps, key=gaps.get)
    ok = gaps[worst] < 1e-11 and elapsed < 30
    report(2, "closed-form cross-checks", ok,
           f"{len(gaps)} cases, worst {gaps[worst]:.2e} on {worst} (tol 1e-11), {elapsed:.2f}s (limit 30s)")


def test_03_curve_degeneration():
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        r = analyze(surfaces.circle(a), Euclidean(2))
        worst = max(worst, _maxabs(r.obstruction), _maxabs(r.volume.v[1]), abs(r.energy))
    report(3, "n=1 degeneration", worst < 1e-12, f"max |L|, |v1|, |E| over circles {worst:.2e} (tol 1e-12)")


def test_04_conformal_invariance():
    cases = {}
    for rho in (pi / 4, pi / 2, 2.0):
        a = analyze(*surfaces.geodesic_sphere(rho, 1.0))
        cases[f"S3 rho={rho:.4f} ({a.jets.kind} collar)"] = a.energy
    for radius in (0.5, 1.0, 3.0):
        a = analyze(surfaces.sphere(radius), Euclidean(3))
        cases[f"R3 a={radius} ({a.jets.kind} collar)"] = a.energy
    amb = ConformalFlat(3, parse_expr(STEREO, ("x", "y", "z")))
    a = analyze(surfaces.sphere(tan(0.5), ambient=amb), amb)
    cases[f"stereographic S3 rho=1 ({a.jets.kind} collar)"] = a.energy
    devs = {k: abs(e + 2 * pi) for k, e in cases.items()}
    worst = max(devs, key=devs.get)
    report(4, "conformal invariance of the energy", devs[worst] < 1e-8,
           f"worst |E + 2 pi| {devs[worst]:.2e} on {worst} (tol 1e-8)")


def test_05_first_variation():
    t0 = time.perf_counter()
    s = surfaces.ellipsoid(1.0, 1.3, 0.7, shape=(96, 96))
    a = analyze(s, Euclidean(3))
    gaps = {}
    for f in ("1", "z", "x^2 - y^2"):
        est = energy_variation_fd(s, a.data, f)
        rhs = variation_rhs(f, a.expansion, a.data)
        gaps[f] = abs(est.estimate - rhs) / max(abs(rhs), 1e-6)
    elapsed = time.perf_counter() - t0
    worst = max(gaps.values())
    ok = worst < 2e-3 and elapsed < 300
    detail = ", ".join(f"f={k}: {v:.2e}" for k, v in gaps.items())
    report(5, "first variation vs 4 int f L", ok, f"{detail} (tol 2e-3), {elapsed:.1f}s (limit 300s)")


def test_06_anomaly_two_routes():
    rng = np.random.default_rng(20240611)
    makers = [
        lambda: surfaces.sphere(rng.uniform(0.5, 2.0)),
        lambda: surfaces.torus(rng.uniform(1.5, 3.0), rng.uniform(0.5, 1.0)),
        lambda: surfaces.ellipsoid(*rng.uniform(0.6, 1.5, 3)),
    ]
    diffs, laws = [], []
    for i in range(10):
        a = analyze(makers[i % 3](), Euclidean(3))
        d = a.data
        rep = anomaly_report(conformal_jets(random_omega(rng), d.surface, d), a.volume, d)
        diffs.append(rep.difference)
        k = rng.uniform(-1, 1)
        laws.append(abs(anomaly_route_b(constant_jets(k, d), a.volume, d) + k * a.energy))
    ok = max(diffs) < 1e-9 and max(laws) < 1e-10
    report(6, "anomaly two-route agreement", ok,
           f"max difference {max(diffs):.2e} (tol 1e-9), constant law {max(laws):.2e} (tol 1e-10)")


def test_07_volume_probe():
    ball = get_model("hyperbolic-ball")
    fit = fit_expansion(ball)
    ref = closed_form_expansion(ball)
    errs = [abs(fit.c[0] - ref["c"][0]), abs(fit.c[1] - ref["c"][1]),
            abs(fit.energy - ref["energy"]), abs(fit.V - ref["V"])]
    disc = fit_expansion(get_model("hyperbolic-disc"))
    ok = max(errs) < 1e-4 and abs(disc.energy) < 1e-5
    report(7, "end-to-end volume probe", ok,
           f"ball (c0, c1, E, V) errors max {max(errs):.2e} (tol 1e-4), disc |log coeff| {abs(disc.energy):.2e} (tol 1e-5)")


def test_08_torus_sweep():
    recs = torus_sweep(ratio_ladder(1.1, 3.0, 39))
    dev = max(r.deviation for r in recs)
    m = torus_minimum(1.1, 3.0)
    ok = dev < 1e-6 and abs(m.t - sqrt(2)) < 1e-3 and abs(m.energy - pi**2) < 1e-5
    report(8, "torus ratio sweep", ok,
           f"oracle deviation {dev:.2e} (tol 1e-6), argmin {m.t:.7f} vs sqrt2 (tol 1e-3), "
           f"min {m.energy:.10f} vs pi^2 off {abs(m.energy - pi**2):.2e} (tol 1e-5)")


def test_09_residual_decay():
    amb = ConformalFlat(3, parse_expr(STEREO, ("x", "y", "z")))
    cases = {
        "ellipsoid(1,1.3,0.7)": analyze(surfaces.ellipsoid(1.0, 1.3, 0.7), Euclidean(3)),
        "ellipsoid(1.2,0.9,0.8)": analyze(surfaces.ellipsoid(1.2, 0.9, 0.8), Euclidean(3)),
        "torus(2,1)": analyze(surfaces.torus(2.0, 1.0), Euclidean(3)),
        "torus(3,1.2)": analyze(surfaces.torus(3.0, 1.2), Euclidean(3)),
        "S3 geodesic sphere": analyze(*surfaces.geodesic_sphere(1.0, 1.0)),
        "H3 geodesic sphere": analyze(*surfaces.geodesic_sphere(1.0, -1.0)),
        "stereographic sphere": analyze(surfaces.sphere(0.5, ambient=amb), amb),
        "unit sphere": analyze(surfaces.sphere(), Euclidean(3)),
        "circle": analyze(surfaces.circle(1.0), Euclidean(2)),
    }
    margins, exact = {}, []
    for name, a in cases.items():
        scan = residual_scan(a.expansion, a.jets, a.data)
        if scan.exact:
            exact.append(name)
        else:
            margins[name] = (scan.exponent, a.data.n + 1.7)
    worst = min(margins, key=lambda k: margins[k][0] - margins[k][1])
    p, need = margins[worst]
    ok = all(p >= q for p, q in margins.values())
    report(9, "residual decay", ok,
           f"{len(margins)} non-exact surfaces, smallest exponent {p:.2f} on {worst} (need >= {need:.1f}); "
           f"exact: {', '.join(exact)}")


def test_10_minimal_area_identities():
    point, glob = 0.0, 0.0
    for s in (surfaces.sphere(), surfaces.torus(2.0, 1.0), surfaces.ellipsoid(1.0, 1.3, 0.7)):
        a = analyze(s, Euclidean(3))
        m = minimal_area_compare(a.data, energy=a.energy)
        point, glob = max(point, m.pointwise_residual), max(glob, m.global_residual)
    ok = point < 1e-10 and glob < 1e-6
    report(10, "minimal-area identities", ok, f"pointwise {point:.2e} (tol 1e-10), global {glob:.2e} (tol 1e-6)")


def test_11_indicial_self_test():
    problems = indicial_self_test(nmax=6, tol=1e-12)
    report(11, "indicial self-test n=1..6", not problems, "clean" if not problems else "; ".join(problems))
