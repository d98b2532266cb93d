"""Hypersurfaces in model backgrounds: fundamental forms, intrinsic curvature via
the Gauss equation, quadrature and the tangential Laplacian.

Conventions
-----------
* The unit normal points into the enclosed region; with ``L_ij = <X_ij, nu>``
  the unit sphere bounding the unit ball has ``L = h`` and ``H = +2``, and the
  normal collar satisfies ``h'_r = -2 L`` at r = 0.
* A space form of curvature c > 0 is charted as the sphere of radius
  ``1/sqrt(c)`` in R^(n+2); c < 0 uses the ball model ``4|dx|^2/(1 + c|x|^2)^2``.
  c = 0 takes exactly the Euclidean code path.
* Matrix-valued node fields keep the (n, n) axes last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as gamma_fn
from math import pi, sqrt
from typing import Optional, Sequence, Union

import numpy as np

from . import grid as gridmod
from .expr import ExprAst, eval_jet, parse_expr
from .grid import GridSpec

__all__ = [
    "Euclidean",
    "SpaceForm",
    "ConformalFlat",
    "GeometryError",
    "SurfaceGrid",
    "HypersurfaceData",
    "AMBIENT_VARS",
    "build_surface",
    "surface_from_samples",
    "fundamental_forms",
    "intrinsic_scalar",
    "surface_integrate",
    "tangential_laplacian",
    "metric_laplacian",
    "gradient_norm",
    "euler_characteristic",
    "homogeneous_sphere",
    "chart_conformal_factor",
]

AMBIENT_VARS = ("x", "y", "z", "w", "t")
PARAM_VARS = ("u", "v")


class GeometryError(ValueError):
    pass


# ------------------------------------------------------------------ ambients


@dataclass(frozen=True)
class Euclidean:
    dim: int


@dataclass(frozen=True)
class SpaceForm:
    dim: int
    c: float


@dataclass(frozen=True)
class ConformalFlat:
    """Metric ``exp(2 omega) |dx|^2`` on a chart of R^dim."""

    dim: int
    omega: ExprAst


AmbientSpec = Union[Euclidean, SpaceForm, ConformalFlat]


def is_flat(ambient) -> bool:
    return isinstance(ambient, Euclidean) or (isinstance(ambient, SpaceForm) and ambient.c == 0)


def chart_dim(ambient) -> int:
    if isinstance(ambient, SpaceForm) and ambient.c > 0:
        return ambient.dim + 1
    return ambient.dim


def chart_conformal_factor(ambient) -> Optional[ExprAst]:
    """Conformal factor of the chart metric, or None when the chart is flat."""
    if isinstance(ambient, ConformalFlat):
        return ambient.omega
    if isinstance(ambient, SpaceForm) and ambient.c < 0:
        names = AMBIENT_VARS[: ambient.dim]
        sq = " + ".join(f"{v}^2" for v in names)
        return parse_expr(f"log(2/(1 + ({ambient.c!r})*({sq})))", names)
    return None


# ------------------------------------------------------------------ surfaces


@dataclass
class SurfaceGrid:
    """Sampled immersion of a closed n-manifold.

    ``X`` has shape ``(N, *grid)``; ``dX`` ``(n, N, *grid)``; ``ddX``
    ``(n, n, N, *grid)`` (symmetric in the first two axes).
    """

    n: int
    grid: GridSpec
    params: tuple
    X: np.ndarray
    dX: np.ndarray
    ddX: np.ndarray
    label: str = ""
    embedding: Optional[tuple] = None

    @property
    def chart_dim(self) -> int:
        return self.X.shape[0]

    @property
    def shape(self) -> tuple:
        return self.grid.shape


def _check_immersion(dX: np.ndarray, label: str):
    gram = np.einsum("ia...,ja...->...ij", dX, dX)
    det = np.linalg.det(gram)
    scale = np.max(np.abs(dX)) ** (2 * dX.shape[0])
    bad = det <= 1e-12 * scale
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise GeometryError(f"{label or 'embedding'}: Jacobian rank deficient at node {idx}")


def _check_chart(X: np.ndarray, ambient, label: str):
    if isinstance(ambient, SpaceForm) and ambient.c > 0:
        rad = np.sqrt(np.sum(X**2, axis=0))
        if np.max(np.abs(rad - 1 / sqrt(ambient.c))) > 1e-10:
            raise GeometryError(f"{label}: points do not lie on the sphere of radius 1/sqrt(c)")
    if isinstance(ambient, SpaceForm) and ambient.c < 0:
        if np.max(np.sum(X**2, axis=0)) * (-ambient.c) >= 1:
            raise GeometryError(f"{label}: points leave the ball model of H^(n+1)")


def build_surface(ambient, embedding: Sequence, grid: GridSpec, label: str = "") -> SurfaceGrid:
    """Evaluate an expression embedding with exact jets on ``grid``.

    ``embedding`` holds one expression (string or ExprAst) per chart coordinate
    in the parameters ``u`` (and ``v``).
    """
    n = grid.n
    params = PARAM_VARS[:n]
    N = chart_dim(ambient)
    if len(embedding) != N:
        raise GeometryError(f"embedding needs {N} components for this ambient, got {len(embedding)}")
    asts = [e if isinstance(e, ExprAst) else parse_expr(str(e), params) for e in embedding]
    P = grid.params()
    point = dict(zip(params, P))
    X = np.empty((N,) + grid.shape)
    dX = np.empty((n, N) + grid.shape)
    ddX = np.empty((n, n, N) + grid.shape)
    for a, ast in enumerate(asts):
        jet = eval_jet(ast, {p: point.get(p, 0.0) for p in ast.variables})
        X[a] = jet.value
        for i, p in enumerate(params):
            dX[i, a] = jet.d(p) if p in ast.variables else 0.0
            for j, q in enumerate(params):
                if p in ast.variables and q in ast.variables:
                    ddX[i, j, a] = jet.d2(p, q)
                else:
                    ddX[i, j, a] = 0.0
    _check_immersion(dX, label)
    _check_chart(X, ambient, label)
    return SurfaceGrid(n, grid, P, X, dX, ddX, label, tuple(asts))


def surface_from_samples(X: np.ndarray, grid: GridSpec, ambient=None, label: str = "") -> SurfaceGrid:
    """Immersion known only by node positions; derivatives are spectral."""
    N = X.shape[0]
    n = grid.n
    dX = np.empty((n, N) + grid.shape)
    ddX = np.empty((n, n, N) + grid.shape)
    for a in range(N):
        d, dd = gridmod.spectral_derivatives(X[a], grid)
        dX[:, a] = d
        ddX[:, :, a] = dd
    _check_immersion(dX, label)
    if ambient is not None:
        _check_chart(X, ambient, label)
    return SurfaceGrid(n, grid, grid.params(), X.copy(), dX, ddX, label)


# ----------------------------------------------------------- fundamental forms


@dataclass
class HypersurfaceData:
    n: int
    ambient: object
    h: np.ndarray
    hinv: np.ndarray
    L: np.ndarray
    H: np.ndarray
    L2: np.ndarray
    Lo2: np.ndarray
    R: np.ndarray
    sqrt_det: np.ndarray
    dA: np.ndarray
    gamma_trace: np.ndarray
    rbar: np.ndarray
    rbar_0i0j: np.ndarray
    ric_nn: np.ndarray
    ambient_trace: np.ndarray
    schouten_trace: np.ndarray
    normal: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    surface: Optional[SurfaceGrid] = None
    homogeneous: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def grid(self) -> Optional[GridSpec]:
        return None if self.surface is None else self.surface.grid

    @property
    def shape(self) -> tuple:
        return self.H.shape

    def principal_curvatures(self) -> np.ndarray:
        A = np.linalg.solve(self.h, self.L)
        return np.sort(np.real(np.linalg.eigvals(A)), axis=-1)

    def min_curvature_radius(self) -> float:
        kmax = np.max(np.abs(self.principal_curvatures()))
        return float("inf") if kmax == 0 else 1.0 / kmax


def _generalized_cross(vectors: np.ndarray) -> np.ndarray:
    """Vector orthogonal to N-1 vectors in R^N; ``vectors`` is ``(N-1, N, *g)``."""
    m, N = vectors.shape[:2]
    mat = np.moveaxis(vectors, (0, 1), (-2, -1))  # (*g, N-1, N)
    out = np.empty((N,) + vectors.shape[2:])
    for k in range(N):
        minor = np.delete(mat, k, axis=-1)
        out[k] = (-1) ** (m + k) * np.linalg.det(minor)
    return out


def _orient(nu: np.ndarray, surface: SurfaceGrid, ambient, orientation, hd_sqrt: np.ndarray):
    w = surface.grid.weights() * hd_sqrt
    X = surface.X
    if orientation is None:
        orientation = "enclosed" if not (isinstance(ambient, SpaceForm) and ambient.c > 0) else "pole"
    if isinstance(orientation, str):
        if orientation == "enclosed":
            score = -np.sum(np.sum(X * nu, axis=0) * w)
        elif orientation == "pole":
            pole = np.zeros(X.shape[0])
            pole[-1] = 1.0
            score = np.sum(np.tensordot(pole, nu, axes=(0, 0)) * w)
        else:
            raise GeometryError(f"unknown orientation selector {orientation!r}")
    else:
        p = np.asarray(orientation, dtype=float).reshape((-1,) + (1,) * surface.grid.n)
        score = np.sum(np.sum((p - X) * nu, axis=0) * w)
    if score == 0:
        raise GeometryError("orientation selector is undecided for this surface")
    if score < 0:
        nu = -nu
    field_last = np.moveaxis(nu, 0, -1)
    for f, g in gridmod.neighbour_pairs(field_last, surface.grid):
        if np.min(np.sum(f * g, axis=-1)) <= 0:
            raise GeometryError("normal field flips between neighbouring nodes (non-orientable input?)")
    return nu


def fundamental_forms(surface: SurfaceGrid, ambient, orientation=None) -> HypersurfaceData:
    """First and second fundamental forms with respect to the inward unit normal.

    ``orientation`` selects the inward side: ``"enclosed"`` (bounded region of
    the chart; default for R^(n+1) charts), ``"pole"`` (towards the last chart
    axis; default for spherical charts) or an explicit ambient point.
    """
    n = surface.n
    N = surface.chart_dim
    if chart_dim(ambient) != N:
        raise GeometryError("surface chart dimension does not match the ambient")
    X, dX, ddX = surface.X, surface.dX, surface.ddX
    hd = np.einsum("ia...,ja...->...ij", dX, dX)
    if isinstance(ambient, SpaceForm) and ambient.c > 0:
        cross = _generalized_cross(np.concatenate([X[None], dX]))
    else:
        cross = _generalized_cross(dX)
    nu = cross / np.sqrt(np.sum(cross**2, axis=0))
    nu = _orient(nu, surface, ambient, orientation, np.sqrt(np.linalg.det(hd)))
    Ld = np.einsum("ija...,a...->...ij", ddX, nu)

    ast = chart_conformal_factor(ambient)
    shape = surface.shape
    if ast is None:
        om = np.zeros(shape)
        grad_om = np.zeros((N,) + shape)
        hess_om = np.zeros((N, N) + shape)
    else:
        jet = eval_jet(ast, {name: X[a] for a, name in enumerate(AMBIENT_VARS[:N])})
        om = jet.value
        grad_om = jet.grad
        hess_om = jet.hessian_matrix()
    e2 = np.exp(2 * om)
    dnu_om = np.sum(grad_om * nu, axis=0)
    h = e2[..., None, None] * hd
    L = np.exp(om)[..., None, None] * (Ld - hd * dnu_om[..., None, None])
    hinv = np.linalg.inv(h)
    A = hinv @ L
    H = np.trace(A, axis1=-2, axis2=-1)
    L2 = np.einsum("...ij,...ji->...", A, A)
    Lo2 = L2 - H**2 / n

    # d_k h_ij for the Christoffel contraction
    om_k = np.einsum("a...,ka...->...k", grad_om, dX)
    cross_term = np.einsum("kia...,ja...->...kij", ddX, dX)
    dh = e2[..., None, None, None] * (
        2 * om_k[..., :, None, None] * hd[..., None, :, :]
        + cross_term
        + np.swapaxes(cross_term, -1, -2)
    )
    gamma_trace = _gamma_trace(hinv, dh)
    sqrt_det = np.sqrt(np.linalg.det(h))

    curv = _ambient_curvature(ambient, n, h, hd, nu, dX, om, grad_om, hess_om)
    data = HypersurfaceData(
        n=n,
        ambient=ambient,
        h=h,
        hinv=hinv,
        L=L,
        H=H,
        L2=L2,
        Lo2=Lo2,
        R=np.zeros(shape),
        sqrt_det=sqrt_det,
        dA=sqrt_det * surface.grid.weights(),
        gamma_trace=gamma_trace,
        normal=nu,
        omega=om,
        surface=surface,
        **curv,
    )
    data.R = intrinsic_scalar(data, ambient)
    return data


def _gamma_trace(hinv: np.ndarray, dh: np.ndarray) -> np.ndarray:
    """``h^ij Gamma^k_ij`` from ``dh[..., k, i, j] = d_k h_ij``; shape ``(n, *g)``."""
    t = np.einsum("...ij,...ijl->...l", hinv, dh)
    s = np.einsum("...ij,...lij->...l", hinv, dh)
    g = np.einsum("...kl,...l->...k", hinv, t - 0.5 * s)
    return np.moveaxis(g, -1, 0)


def _ambient_curvature(ambient, n, h, hd, nu, dX, om, grad_om, hess_om) -> dict:
    shape = h.shape[:-2]
    if is_flat(ambient):
        z = np.zeros(shape)
        return dict(rbar=z, rbar_0i0j=np.zeros_like(h), ric_nn=z.copy(),
                    ambient_trace=z.copy(), schouten_trace=z.copy())
    if isinstance(ambient, SpaceForm):
        c = ambient.c
        full = np.ones(shape)
        return dict(
            rbar=n * (n + 1) * c * full,
            rbar_0i0j=c * h,
            ric_nn=n * c * full,
            ambient_trace=c * n * (n - 1) * full,
            schouten_trace=0.5 * c * n * full,
        )
    # exp(2 omega)|dx|^2 with T = D^2 omega - d omega (x) d omega + |d omega|^2/2 delta
    N = grad_om.shape[0]
    g2 = np.sum(grad_om**2, axis=0)
    T = hess_om - grad_om[:, None] * grad_om[None, :] + 0.5 * g2 * np.eye(N).reshape((N, N) + (1,) * len(shape))
    Tnn = np.einsum("a...,ab...,b...->...", nu, T, nu)
    Tij = np.einsum("ia...,ab...,jb...->...ij", dX, T, dX)
    rbar_0i0j = -(Tnn[..., None, None] * hd + Tij)
    lap = np.trace(hess_om, axis1=0, axis2=1)
    # conformal change of scalar curvature with u = exp(-omega)
    rbar = np.exp(-2 * om) * (-n * (n - 1) * g2 - 2 * n * lap)
    hinv = np.linalg.inv(h)
    ric_nn = np.einsum("...ij,...ij->...", hinv, rbar_0i0j)
    schouten = -np.einsum("...ij,...ij->...", hinv, Tij)
    return dict(
        rbar=rbar,
        rbar_0i0j=rbar_0i0j,
        ric_nn=ric_nn,
        ambient_trace=rbar - 2 * ric_nn,
        schouten_trace=schouten,
    )


def intrinsic_scalar(data: HypersurfaceData, ambient=None) -> np.ndarray:
    """Scalar curvature of the induced metric from the traced Gauss equation,
    ``R = h^ij h^kl Rbar_ikjl - |L|^2 + H^2``."""
    if data.n == 1:
        return np.zeros_like(data.H)
    return data.ambient_trace - data.L2 + data.H**2


# ------------------------------------------------------------------ integrals


def surface_integrate(values, data: HypersurfaceData) -> float:
    """Integral of a node field against the area element (fixed summation order)."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise GeometryError("integrand is not finite at every node")
    return float(np.sum(np.broadcast_to(values, data.dA.shape) * data.dA))


def euler_characteristic(data: HypersurfaceData) -> tuple[int, float]:
    """Gauss–Bonnet Euler characteristic and the distance of the raw value from
    the nearest integer."""
    if data.n != 2:
        raise GeometryError("Euler characteristic is implemented for surfaces (n = 2)")
    raw = surface_integrate(data.R, data) / (4 * pi)
    chi = int(round(raw))
    residual = abs(raw - chi)
    if residual > 0.01:
        raise GeometryError(f"Gauss–Bonnet residual {residual:.3g}: surface is under-resolved")
    return chi, residual


# ------------------------------------------------------------------ operators


def _roundoff_constant(values: np.ndarray) -> bool:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return float(np.ptp(values)) <= 64 * np.finfo(float).eps * max(scale, 1e-300)


def _laplacian(values, hinv, gamma_trace, grid: GridSpec) -> np.ndarray:
    if _roundoff_constant(values):
        # difference stencils would only amplify rounding noise by 1/step^2
        return np.zeros_like(values)
    d = gridmod.fd_gradient(values, grid)
    dd = gridmod.fd_hessian(values, grid)
    hinv_first = np.moveaxis(hinv, (-2, -1), (0, 1))
    return np.einsum("ij...,ij...->...", hinv_first, dd) - np.einsum("k...,k...->...", gamma_trace, d)


def tangential_laplacian(values, data: HypersurfaceData) -> np.ndarray:
    """Laplace–Beltrami operator of the induced metric,
    ``h^ij (d_i d_j f - Gamma^k_ij d_k f)``, with fourth-order centred differences
    and Christoffel symbols from the exact embedding jets."""
    values = np.asarray(values, dtype=float)
    if data.surface is None:
        if np.ptp(values) > 1e-12 * max(1.0, np.max(np.abs(values))):
            raise GeometryError("homogeneous data carries no grid for a non-constant field")
        return np.zeros_like(values)
    return _laplacian(values, data.hinv, data.gamma_trace, data.grid)


def metric_laplacian(values, h: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Laplacian for a metric known only by node values (Christoffels by finite
    differences, pole rule for tensor components)."""
    hinv = np.linalg.inv(h)
    dh = gridmod.fd_tensor_gradient(h, grid)
    return _laplacian(np.asarray(values, dtype=float), hinv, _gamma_trace(hinv, dh), grid)


def gradient_norm(values, hinv: np.ndarray, grid: GridSpec) -> np.ndarray:
    d = gridmod.fd_gradient(np.asarray(values, dtype=float), grid)
    return np.einsum("...ij,i...,j...->...", hinv, d, d)


# -------------------------------------------------------------- homogeneous


def sphere_area(n: int) -> float:
    return 2 * pi ** ((n + 1) / 2) / gamma_fn((n + 1) / 2)


def _sn_cot(c: float, rho: float) -> tuple[float, float]:
    if c > 0:
        s = sqrt(c)
        return np.sin(s * rho) / s, s / np.tan(s * rho)
    if c < 0:
        s = sqrt(-c)
        return np.sinh(s * rho) / s, s / np.tanh(s * rho)
    return rho, 1.0 / rho


def homogeneous_sphere(n: int, ambient=None, radius: float = 1.0) -> HypersurfaceData:
    """Pointwise data of a geodesic sphere of geodesic radius ``radius`` in a
    flat or space-form ambient, in an orthonormal frame (no grid)."""
    if ambient is None:
        ambient = Euclidean(n + 1)
    if isinstance(ambient, ConformalFlat):
        raise GeometryError("homogeneous spheres need a flat or space-form ambient")
    c = 0.0 if isinstance(ambient, Euclidean) else float(ambient.c)
    sn, kappa = _sn_cot(c, radius)
    eye = np.eye(n)
    h = eye.copy()
    L = kappa * eye
    area = sphere_area(n) * sn**n
    one = np.array(1.0)
    curv = _ambient_curvature(ambient, n, h, None, None, None, None, None, None)
    data = HypersurfaceData(
        n=n,
        ambient=ambient,
        h=h,
        hinv=eye.copy(),
        L=L,
        H=n * kappa * one,
        L2=n * kappa**2 * one,
        Lo2=0.0 * one,
        R=np.zeros(()),
        sqrt_det=one.copy(),
        dA=area * one,
        gamma_trace=np.zeros((n,)),
        homogeneous=True,
        **{k: np.asarray(v) for k, v in curv.items()},
    )
    data.R = np.asarray(intrinsic_scalar(data, ambient))
    return data
