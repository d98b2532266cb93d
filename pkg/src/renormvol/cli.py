"""Command-line runner: one config in, one JSON record (plus CSV tables) out.

Exit status is 0 when every check passes, 1 on a failed check and 2 on a
configuration or domain error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Optional

import numpy as np

from . import surfaces
from .anomaly import (
    AnomalyError,
    anomaly_report,
    anomaly_route_b,
    conformal_jets,
    constant_jets,
    random_omega,
)
from .collar import CollarError, CollarJets, collar_consistency_check
from .config import ConfigError, RunConfig, load_config
from .expr import ExprError, parse_expr
from .geometry import (
    AMBIENT_VARS,
    ConformalFlat,
    Euclidean,
    GeometryError,
    SpaceForm,
    build_surface,
    euler_characteristic,
    fundamental_forms,
)
from .grid import GridSpec
from .pipeline import Analysis, analyze_data, analyze_homogeneous
from .renvol import VolumeError, closed_form_v12, energy_n2_split, minimal_area_compare
from .sweep import SweepError, ratio_ladder, torus_minimum, torus_sweep
from .variation import VariationError, energy_variation_fd, normal_speed, variation_rhs
from .volprobe import ProbeError, check_model, closed_form_expansion, fit_expansion, get_model
from .yamabe import YamabeError, closed_form_phis, indicial_self_test, residual_scan

DOMAIN_ERRORS = (
    ConfigError,
    ExprError,
    GeometryError,
    CollarError,
    YamabeError,
    VolumeError,
    AnomalyError,
    VariationError,
    ProbeError,
    SweepError,
)

DEFAULT_TOLS = {
    "yamabe.indicial": 1e-12,
    "geometry.gauss_bonnet": 1e-6,
    "yamabe.phi0_closed_form": 1e-11,
    "yamabe.phi1_closed_form": 1e-11,
    "yamabe.phi1_intermediate_form": 1e-11,
    "yamabe.residual_decay": 0.0,
    "renvol.v1_closed_form": 1e-11,
    "renvol.v2_closed_form": 1e-11,
    "renvol.energy_split": 1e-10,
    "renvol.min_area_pointwise": 1e-10,
    "renvol.min_area_global": 1e-6,
    "renvol.round_sphere_energy": 1e-8,
    "renvol.curve_degeneration": 1e-12,
    "anomaly.two_route": 1e-9,
    "anomaly.constant_law": 1e-10,
    "variation.relative_gap": 2e-3,
    "volprobe.model_residual": 1e-12,
    "volprobe.c": 1e-4,
    "volprobe.energy": 1e-4,
    "volprobe.V": 1e-4,
    "volprobe.log_coefficient": 1e-5,
    "sweep.oracle": 1e-6,
    "sweep.argmin": 1e-3,
    "sweep.minimum": 1e-5,
}
# closed-form agreement on numerically integrated collars
NUMERIC_COLLAR_TOL = 1e-6


@dataclass
class Check:
    name: str
    residual: float
    tol: float
    module: str = ""
    node: Optional[list] = None

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual <= self.tol

    def to_record(self) -> dict:
        rec = {"name": self.name, "residual": _num(self.residual), "tol": self.tol, "pass": self.passed}
        if self.module:
            rec["module"] = self.module
        if self.node is not None:
            rec["node"] = self.node
        return rec


@dataclass
class RunResult:
    config: RunConfig
    fields: dict = field(default_factory=dict)
    globals: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_record(self) -> dict:
        return {
            "config_echo": self.config.to_dict(),
            "fields": {k: _jsonable(v) for k, v in self.fields.items()},
            "globals": {k: _jsonable(v) for k, v in self.globals.items()},
            "checks": [c.to_record() for c in self.checks],
        }


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _jsonable(v):
    if isinstance(v, (str, bool)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return _num(arr)
    if np.all(np.isfinite(arr)):
        return arr.tolist()
    return [_jsonable(x) for x in arr]


class Checker:
    def __init__(self, result: RunResult, tol_scale: float = 1.0, overrides: Optional[dict] = None):
        self.result = result
        self.scale = tol_scale
        self.overrides = overrides or {}

    def tol(self, name: str, default: Optional[float] = None) -> float:
        base = self.overrides.get(name, DEFAULT_TOLS.get(name) if default is None else default)
        return base * self.scale

    def add(self, name: str, residual: float, default_tol: Optional[float] = None, node=None) -> Check:
        chk = Check(name, float(residual), self.tol(name, default_tol), name.split(".")[0], node)
        self.result.checks.append(chk)
        return chk

    def field(self, name: str, values, default_tol: Optional[float] = None) -> Check:
        """Max-node residual of an array, recording the worst node index."""
        arr = np.abs(np.asarray(values, dtype=float))
        if arr.ndim == 0:
            return self.add(name, float(arr), default_tol)
        idx = np.unravel_index(int(np.argmax(arr)), arr.shape)
        return self.add(name, float(arr[idx]), default_tol, [int(i) for i in idx])


# ------------------------------------------------------------ construction


def make_ambient(cfg: RunConfig, default_dim: int):
    sec = cfg.section("ambient")
    kind = sec.get("kind", "euclidean")
    dim = sec.get("dimension", default_dim)
    if kind == "euclidean":
        return Euclidean(dim)
    if kind == "spaceform":
        if "c" not in sec:
            raise ConfigError("[ambient] spaceform needs c")
        return SpaceForm(dim, sec["c"])
    if "omega" not in sec:
        raise ConfigError("[ambient] conformal needs omega")
    return ConformalFlat(dim, parse_expr(sec["omega"], AMBIENT_VARS[:dim]))


_DEFAULT_GRIDS = {"sphere": (64, 32), "ellipsoid": (64, 32), "torus": (64, 64), "geodesic-sphere": (64, 32)}


def make_surface(cfg: RunConfig):
    """Return (surface, ambient) for the configured preset or parametric surface."""
    sec = cfg.section("surface")
    preset = sec.get("preset")
    if preset is None:
        raise ConfigError("[surface] needs a preset (or preset = parametric with an embedding)")
    grid = tuple(sec.get("grid", _DEFAULT_GRIDS.get(preset, (64,))))
    if preset == "circle":
        amb = make_ambient(cfg, 2)
        if len(grid) != 1:
            raise ConfigError("circle grids have one dimension")
        return surfaces.circle(sec.get("radius", 1.0), grid[0], amb), amb
    if preset == "geodesic-sphere":
        if cfg.get("ambient", "kind") != "spaceform":
            raise ConfigError("geodesic-sphere needs a spaceform ambient")
        c = cfg.get("ambient", "c")
        if c is None or c == 0:
            raise ConfigError("geodesic-sphere needs nonzero ambient curvature c")
        return surfaces.geodesic_sphere(sec.get("rho", 1.0), c, grid)
    if preset == "parametric":
        emb = sec.get("embedding")
        topo = sec.get("topology")
        if not emb or not topo:
            raise ConfigError("parametric surfaces need embedding and topology")
        spherical = cfg.get("ambient", "kind") == "spaceform" and cfg.get("ambient", "c", 0.0) > 0
        amb = make_ambient(cfg, len(emb) - 1 if spherical else len(emb))
        label = cfg.get("run", "label", "parametric")
        return build_surface(amb, emb, GridSpec(grid, topo), label), amb
    amb = make_ambient(cfg, 3)
    if preset == "sphere":
        return surfaces.sphere(sec.get("radius", 1.0), grid, tuple(sec.get("center", (0.0, 0.0, 0.0))), amb), amb
    if preset == "ellipsoid":
        axes = sec.get("axes", [1.0, 1.3, 0.7])
        if len(axes) != 3:
            raise ConfigError("ellipsoid axes need three values")
        return surfaces.ellipsoid(*axes, shape=grid, ambient=amb), amb
    if preset == "torus":
        return surfaces.torus(sec.get("R", 2.0), sec.get("a", 1.0), grid, amb), amb
    raise ConfigError(f"unknown surface preset {preset!r}")


def _analysis(cfg: RunConfig) -> Analysis:
    K = cfg.get("run", "order")
    if cfg.get("run", "mode", "grid") == "homogeneous":
        n = cfg.get("run", "n", 2)
        sec = cfg.section("ambient")
        kind = sec.get("kind", "euclidean")
        if kind == "conformal":
            raise ConfigError("homogeneous mode needs a flat or space-form ambient")
        amb = Euclidean(n + 1) if kind == "euclidean" else SpaceForm(n + 1, sec.get("c", 0.0))
        return analyze_homogeneous(n, amb, cfg.get("run", "radius", 1.0), K)
    surface, amb = make_surface(cfg)
    data = fundamental_forms(surface, amb, cfg.get("surface", "orientation"))
    jets = None
    path = cfg.get("surface", "collar")
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                jets = CollarJets.loads(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read collar {path}: {exc}") from None
        if jets.node_shape != data.shape or jets.n != data.n:
            raise ConfigError("imported collar does not match the surface grid")
    return analyze_data(data, jets, K)


# --------------------------------------------------------------- commands


def _basic_fields(res: RunResult, a: Analysis):
    d = a.data
    res.fields.update({"H": d.H, "Lo2": d.Lo2, "R": d.R})
    for k, p in enumerate(a.expansion.phis):
        res.fields[f"phi_{k}"] = p
    res.fields["obstruction"] = a.obstruction
    for k, vk in enumerate(a.volume.v):
        res.fields[f"v_{k}"] = vk
    for k, ck in enumerate(a.volume.c):
        res.globals[f"c_{k}"] = ck
    res.globals["energy"] = a.energy
    res.globals["n"] = d.n
    res.globals["collar"] = a.jets.kind


def cmd_compute(cfg, res, chk, opts):
    a = _analysis(cfg)
    _basic_fields(res, a)
    if a.data.n == 2 and not a.data.homogeneous:
        chi, chi_res = euler_characteristic(a.data)
        res.globals["euler_characteristic"] = chi
    rep = collar_consistency_check(a.jets, a.data)
    chk.add("collar.consistency", max(rep.first_order, rep.second_order), rep.tol)
    _export_collar(cfg, a, opts)
    return a


def _export_collar(cfg, a, opts):
    path = cfg.get("output", "collar")
    if path:
        os.makedirs(opts.out, exist_ok=True)
        with open(os.path.join(opts.out, path), "w", encoding="utf-8") as fh:
            fh.write(a.jets.dumps())


def cmd_verify(cfg, res, chk, opts):
    a = cmd_compute(cfg, res, chk, opts)
    d, exp, vol = a.data, a.expansion, a.volume
    n = d.n
    cf_tol = None if a.jets.kind == "exact" else NUMERIC_COLLAR_TOL
    cf = closed_form_phis(d, want_phi1=n >= 2)
    chk.field("yamabe.phi0_closed_form", exp.phi_coeff(0) - cf.phi0, cf_tol)
    v1, v2 = closed_form_v12(d, want_v2=n >= 2)
    chk.field("renvol.v1_closed_form", vol.v[1] - v1, cf_tol)
    if n >= 2:
        chk.field("yamabe.phi1_closed_form", exp.phi_coeff(1) - cf.phi1, cf_tol)
        chk.field("yamabe.phi1_intermediate_form", cf.phi1_intermediate - cf.phi1, cf_tol)
        chk.field("renvol.v2_closed_form", vol.v[2] - v2, cf_tol)
    if n == 1:
        worst = max(float(np.max(np.abs(exp.obstruction))), float(np.max(np.abs(vol.v[1]))), abs(a.energy))
        chk.add("renvol.curve_degeneration", worst)
    if not d.homogeneous:
        scan = residual_scan(exp, a.jets, d)
        res.globals["residual_exponent"] = scan.exponent
        res.globals["residual_exact"] = scan.exact
        chk.add("yamabe.residual_decay", 0.0 if scan.exact else max(0.0, (n + 1.7) - scan.exponent))
    if n == 2 and not d.homogeneous:
        chi, chi_res = euler_characteristic(d)
        chk.add("geometry.gauss_bonnet", chi_res)
        split = energy_n2_split(d, a.energy)
        res.globals["willmore_part"] = split.willmore
        chk.add("renvol.energy_split", split.residual)
        ma = minimal_area_compare(d, energy=a.energy)
        res.globals["energy_min_area"] = ma.energy_min_area
        chk.add("renvol.min_area_pointwise", ma.pointwise_residual)
        chk.add("renvol.min_area_global", ma.global_residual)
    preset = cfg.get("surface", "preset")
    round_sphere = preset == "geodesic-sphere" or (
        preset == "sphere" and cfg.get("ambient", "kind", "euclidean") != "conformal"
    )
    if n == 2 and (round_sphere or d.homogeneous):
        chk.add("renvol.round_sphere_energy", abs(a.energy + 2 * pi))
    if n == 2 and not d.homogeneous and d.surface.chart_dim == 3:
        rng = np.random.default_rng(opts.seed)
        count = cfg.get("anomaly", "random", 3)
        for i in range(count):
            w = random_omega(rng)
            rep = anomaly_report(conformal_jets(w, d.surface, d), vol, d)
            chk.add(f"anomaly.two_route[{i}]", rep.difference, DEFAULT_TOLS["anomaly.two_route"])
        k = 0.3
        law = anomaly_route_b(constant_jets(k, d), vol, d)
        chk.add("anomaly.constant_law", abs(law + k * a.energy))
    return a


def cmd_anomaly(cfg, res, chk, opts):
    a = _analysis(cfg)
    d = a.data
    if d.n != 2 or d.homogeneous:
        raise ConfigError("anomaly runs on surface grids (n = 2, grid mode)")
    w = cfg.get("anomaly", "omega")
    if w is None:
        raise ConfigError("[anomaly] needs omega")
    cj = conformal_jets(w, d.surface, d)
    rep = anomaly_report(cj, a.volume, d)
    res.fields.update({"omega": cj.omega, "omega_r": cj.omega_r, "omega_rr": cj.omega_rr})
    res.globals.update({
        "energy": a.energy,
        "anomaly_route_b": rep.route_b,
        "anomaly_route_closed": rep.route_closed,
        "difference": rep.difference,
        "min_area_anomaly": rep.min_area,
    })
    chk.add("anomaly.two_route", rep.difference)
    k = 0.3
    chk.add("anomaly.constant_law", abs(anomaly_route_b(constant_jets(k, d), a.volume, d) + k * a.energy))
    return a


def cmd_vary(cfg, res, chk, opts):
    a = _analysis(cfg)
    d = a.data
    if d.homogeneous:
        raise ConfigError("vary needs a surface grid")
    f = cfg.get("vary", "f")
    if f is None:
        raise ConfigError("[vary] needs f")
    est = energy_variation_fd(d.surface, d, f, cfg.get("vary", "t0"))
    rhs = variation_rhs(f, a.expansion, d)
    gap = abs(est.estimate - rhs) / max(abs(rhs), 1e-6)
    res.fields.update({"f": normal_speed(f, d.surface), "obstruction": a.obstruction})
    res.globals.update({
        "energy": a.energy,
        "fd_estimate": est.estimate,
        "fd_error": est.error,
        "t0": est.t0,
        "rhs": rhs,
        "relative_gap": gap,
    })
    chk.add("variation.relative_gap", gap)
    return a


def cmd_probe(cfg, res, chk, opts):
    sec = cfg.section("probe")
    model = get_model(sec.get("model", "hyperbolic-ball"))
    eps = np.geomspace(sec.get("eps_min", 1e-3), sec.get("eps_max", 1e-1), sec.get("samples", 24))
    chk.add("volprobe.model_residual", check_model(model, seed=opts.seed))
    fit = fit_expansion(model, eps, sec.get("tail_powers", 4))
    ref = closed_form_expansion(model)
    n = model.n
    for k in range(n):
        res.globals[f"c_{k}"] = fit.c[k]
        chk.add(f"volprobe.c_{k}", abs(fit.c[k] - ref["c"][k]), DEFAULT_TOLS["volprobe.c"])
    res.globals.update({
        "energy": fit.energy,
        "V": fit.V,
        "fit_residual": fit.residual,
        "condition": fit.condition,
        "closed_form_energy": ref["energy"],
        "closed_form_V": ref["V"],
    })
    chk.add("volprobe.energy", abs(fit.energy - ref["energy"]))
    chk.add("volprobe.V", abs(fit.V - ref["V"]))
    if n == 1:
        chk.add("volprobe.log_coefficient", abs(fit.energy))
    res.fields.update({"eps": fit.eps, "volume": fit.volumes})
    res.tables["probe"] = (["eps", "volume"], list(zip(fit.eps.tolist(), fit.volumes.tolist())))


def cmd_sweep(cfg, res, chk, opts):
    sec = cfg.section("sweep")
    if sec.get("parameter", "torus-ratio") != "torus-ratio":
        raise ConfigError("only the torus-ratio sweep is available")
    lo, hi = sec.get("start", 1.1), sec.get("stop", 3.0)
    if not 1 < lo < hi:
        raise ConfigError(f"torus ratio range must satisfy 1 < start < stop, got [{lo}, {hi}]")
    shape = tuple(sec.get("grid", (64, 64)))
    a = sec.get("a", 1.0)
    ts = ratio_ladder(lo, hi, sec.get("count", 39))
    recs = torus_sweep(ts, a, shape, opts.threads)
    res.fields.update({
        "t": [r.t for r in recs],
        "energy": [r.energy for r in recs],
        "oracle": [r.oracle for r in recs],
    })
    dev = np.array([r.deviation for r in recs])
    chk.field("sweep.oracle", dev)
    res.tables["sweep"] = (["t", "energy", "oracle"], [(r.t, r.energy, r.oracle) for r in recs])
    i = int(np.argmin([r.energy for r in recs]))
    res.globals.update({"ladder_argmin": recs[i].t, "ladder_min": recs[i].energy})
    if sec.get("refine", True):
        m = torus_minimum(lo, hi, a, shape)
        res.globals.update({"t_min": m.t, "energy_min": m.energy, "evaluations": m.evaluations})
        chk.add("sweep.argmin", abs(m.t - sqrt(2)))
        chk.add("sweep.minimum", abs(m.energy - pi**2))


COMMANDS = {
    "compute": cmd_compute,
    "verify": cmd_verify,
    "anomaly": cmd_anomaly,
    "vary": cmd_vary,
    "probe": cmd_probe,
    "sweep": cmd_sweep,
}


# ------------------------------------------------------------------ driver


@dataclass
class Options:
    out: str = "."
    tol_scale: float = 1.0
    threads: int = 1
    seed: int = 0


def run(cfg: RunConfig, opts: Optional[Options] = None) -> RunResult:
    """Execute the configured command; raises domain errors unchanged."""
    opts = opts or Options()
    if opts.tol_scale <= 0:
        raise ConfigError("--tol-scale must be positive")
    if opts.threads < 1:
        raise ConfigError("--threads must be at least 1")
    res = RunResult(cfg)
    chk = Checker(res, opts.tol_scale, cfg.section("tolerances"))
    problems = indicial_self_test()
    chk.add("yamabe.indicial", 0.0 if not problems else 1.0)
    if problems:
        res.globals["indicial_problems"] = "; ".join(problems)
        return res
    COMMANDS[cfg.command](cfg, res, chk, opts)
    return res


def write_outputs(res: RunResult, opts: Options) -> list[str]:
    os.makedirs(opts.out, exist_ok=True)
    cfg = res.config
    paths = []
    jpath = os.path.join(opts.out, cfg.get("output", "json", "result.json"))
    with open(jpath, "w", encoding="utf-8") as fh:
        json.dump(res.to_record(), fh, indent=1)
        fh.write("\n")
    paths.append(jpath)
    for name, (header, rows) in res.tables.items():
        cpath = os.path.join(opts.out, cfg.get("output", "csv", f"{name}.csv"))
        with open(cpath, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(x)) for x in row])
        paths.append(cpath)
    return paths


def _report(res: RunResult, stream) -> None:
    for c in res.checks:
        status = "PASS" if c.passed else "FAIL"
        where = f" [{c.module}" + (f" node {tuple(c.node)}" if c.node is not None else "") + "]"
        print(f"{status} {c.name}: residual {c.residual:.3g} (tol {c.tol:.3g}){where}", file=stream)
    bad = [c for c in res.checks if not c.passed]
    if bad:
        worst = max(bad, key=lambda c: c.residual / c.tol if c.tol > 0 else np.inf)
        node = f" at node {tuple(worst.node)}" if worst.node is not None else ""
        print(f"worst residual: {worst.name} in module {worst.module}{node}", file=stream)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="renormvol", description="Renormalized volume and energy of hypersurfaces.")
    p.add_argument("command", nargs="?", choices=sorted(COMMANDS), help="overrides [run] command")
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every check tolerance")
    p.add_argument("--threads", type=int, default=1, help="worker pool cap for sweeps")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = Options(args.out, args.tol_scale, args.threads, args.seed)
    try:
        cfg = load_config(args.config)
        if args.command:
            cfg.set("run", "command", args.command)
        res = run(cfg, opts)
        paths = write_outputs(res, opts)
    except DOMAIN_ERRORS as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error writing outputs: {exc}", file=sys.stderr)
        return 2
    _report(res, sys.stderr)
    for path in paths:
        print(path)
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
