"""First variation of the energy under normal deformations, by finite
differences of the full pipeline, compared with ``(n+2)(n-1) int f L``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .expr import ExprAst, ExprError, eval_jet, eval_value, parse_expr
from .geometry import (
    AMBIENT_VARS,
    PARAM_VARS,
    GeometryError,
    HypersurfaceData,
    SurfaceGrid,
    _generalized_cross,
    fundamental_forms,
    is_flat,
    surface_from_samples,
    surface_integrate,
    tangential_laplacian,
)
from .pipeline import analyze_data
from .yamabe import YamabeExpansion

SpeedLike = Union[str, ExprAst, Callable, np.ndarray, float]


class VariationError(ValueError):
    pass


def _as_speed_fn(f: SpeedLike, N: int, n: int):
    """Return ``fn(X, P) -> values`` for ambient points X and parameters P."""
    if callable(f) and not isinstance(f, ExprAst):
        return f
    if isinstance(f, (int, float)):
        return lambda X, P: np.full(X.shape[1:], float(f))
    if isinstance(f, np.ndarray):
        return None
    ast = f
    if isinstance(f, str):
        try:
            ast = parse_expr(f, AMBIENT_VARS[:N])
        except ExprError:
            ast = parse_expr(f, PARAM_VARS[:n])
    if any(v in AMBIENT_VARS for v in ast.variables):

        def fn(X, P):
            pt = {v: X[a] for a, v in enumerate(AMBIENT_VARS[:N]) if v in ast.variables}
            return np.broadcast_to(eval_value(ast, pt), X.shape[1:]).copy()

    else:

        def fn(X, P):
            pt = {v: p for v, p in zip(PARAM_VARS, P) if v in ast.variables}
            return np.broadcast_to(eval_value(ast, pt), X.shape[1:]).copy()

    return fn


def normal_speed(f: SpeedLike, surface: SurfaceGrid) -> np.ndarray:
    fn = _as_speed_fn(f, surface.chart_dim, surface.n)
    if fn is None:
        arr = np.asarray(f, dtype=float)
        if arr.shape != surface.shape:
            raise VariationError("per-node speed does not match the grid")
        return arr
    return np.asarray(fn(surface.X, surface.params), dtype=float)


def _evaluate_embedding(surface: SurfaceGrid, P: tuple):
    n, N = surface.n, surface.chart_dim
    params = PARAM_VARS[:n]
    point = dict(zip(params, P))
    X = np.empty((N,) + P[0].shape)
    dX = np.empty((n, N) + P[0].shape)
    for a, ast in enumerate(surface.embedding):
        jet = eval_jet(ast, {p: point[p] for p in ast.variables})
        X[a] = jet.value
        for i, p in enumerate(params):
            dX[i, a] = jet.d(p) if p in ast.variables else 0.0
    return X, dX


def offset_surface(
    surface: SurfaceGrid,
    data: HypersurfaceData,
    f: SpeedLike,
    t: float,
    drift: Optional[Callable] = None,
    check: bool = True,
) -> SurfaceGrid:
    """Sample ``X + t f nu`` on the same grid (nu the inward unit normal).

    ``drift(P)`` optionally displaces the parameters first, which resamples the
    same offset hypersurface at other points.
    """
    if not is_flat(data.ambient):
        raise VariationError("offset surfaces are implemented for Euclidean ambients")
    if check:
        radius = data.min_curvature_radius()
        fmax = float(np.max(np.abs(normal_speed(f, surface)))) if not isinstance(f, np.ndarray) else float(np.max(np.abs(f)))
        if abs(t) * fmax >= 0.1 * radius:
            raise VariationError(
                f"offset |t| max|f| = {abs(t) * fmax:.3g} exceeds 0.1 x min curvature radius {radius:.3g}"
            )
    if drift is None:
        X, nu, P = surface.X, data.normal, surface.params
        fv = normal_speed(f, surface)
    else:
        if surface.embedding is None:
            raise VariationError("drifted offsets need an expression embedding")
        if isinstance(f, np.ndarray):
            raise VariationError("drifted offsets need f as a function or expression")
        disp = drift(surface.params)
        P = tuple(p + t * d for p, d in zip(surface.params, disp))
        X, dX = _evaluate_embedding(surface, P)
        cross = _generalized_cross(dX)
        nu = cross / np.sqrt(np.sum(cross**2, axis=0))
        if np.sum(nu * data.normal) < 0:
            nu = -nu
        fv = _as_speed_fn(f, surface.chart_dim, surface.n)(X, P)
    Xt = X + t * fv * nu
    return surface_from_samples(Xt, surface.grid, label=f"{surface.label}+offset(t={t:g})")


def pipeline_energy(surface: SurfaceGrid, ambient) -> float:
    data = fundamental_forms(surface, ambient)
    return analyze_data(data).energy


@dataclass
class VariationEstimate:
    estimate: float
    error: float
    t0: float
    energies: dict = field(default_factory=dict)


def default_step(data: HypersurfaceData) -> float:
    return 1e-3 * data.min_curvature_radius()


def energy_variation_fd(
    surface: SurfaceGrid,
    data: HypersurfaceData,
    f: SpeedLike,
    t0: Optional[float] = None,
    energy: Optional[Callable] = None,
    drift: Optional[Callable] = None,
) -> VariationEstimate:
    """Richardson-extrapolated central difference of the energy at t = 0 from
    offsets ``+-t0`` and ``+-t0/2``; the error indicator is the gap between the
    two central-difference levels."""
    if data.n != 2:
        raise VariationError("the finite-difference variation runs on surface grids (n = 2)")
    if t0 is None:
        t0 = default_step(data)
    energy = energy or (lambda s: pipeline_energy(s, data.ambient))
    E = {}
    for t in (t0, -t0, 0.5 * t0, -0.5 * t0):
        try:
            E[t] = energy(offset_surface(surface, data, f, t, drift))
        except (GeometryError, ValueError) as exc:
            raise VariationError(f"pipeline failed on the offset t={t:g}: {exc}") from exc
    d1 = (E[t0] - E[-t0]) / (2 * t0)
    d2 = (E[0.5 * t0] - E[-0.5 * t0]) / t0
    return VariationEstimate((4 * d2 - d1) / 3, abs(d2 - d1), t0, E)


def variation_rhs(f: SpeedLike, exp: YamabeExpansion, data: HypersurfaceData, n: Optional[int] = None) -> float:
    n = data.n if n is None else n
    fv = normal_speed(f, data.surface) if data.surface is not None else np.asarray(f, dtype=float)
    return (n + 2) * (n - 1) * surface_integrate(fv * exp.obstruction, data)


# ------------------------------------------------------------ Willmore link


def willmore_operator(data: HypersurfaceData) -> np.ndarray:
    """``Delta H + 2 H (H^2/4 - K)`` with K = R/2 the Gauss curvature."""
    if data.n != 2:
        raise VariationError("the Willmore operator is defined here for surfaces")
    H = data.H
    return tangential_laplacian(H, data) + 2 * H * (H**2 / 4 - data.R / 2)


@dataclass
class WillmoreRatio:
    constant: float
    max_deviation: float


def willmore_ratio(obstruction: np.ndarray, data: HypersurfaceData) -> WillmoreRatio:
    """Least-squares constant c with L ~ c W and the max deviation relative to max|W|."""
    W = willmore_operator(data)
    c = float(np.sum(obstruction * W) / np.sum(W * W))
    return WillmoreRatio(c, float(np.max(np.abs(obstruction - c * W)) / np.max(np.abs(W))))
