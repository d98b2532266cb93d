"""Renormalized-volume anomaly for surfaces (n = 2) under a conformal change
``gbar -> exp(2 omega) gbar``, by two independent routes.

Route B expands ``b(x, eps)`` (with ``r = rhat * b``) and reads off the constant
term of ``-1/2 eps^-2 b^-2 - eps^-1 v1 b^-1 + v2 log b``.  The closed route
integrates ``-1/8 [2(|L°|^2 - R) w - H w_r + (4 w_rr - 4 |dw|^2 + w_r^2)/3]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import ExprAst, ExprError, eval_jet, parse_expr
from .geometry import (
    AMBIENT_VARS,
    HypersurfaceData,
    SpaceForm,
    SurfaceGrid,
    chart_conformal_factor,
    is_flat,
    surface_integrate,
)
from .renvol import VolumeData
from .series import LogSeries

COLLAR_VARS = ("u", "v", "r")


class AnomalyError(ValueError):
    pass


@dataclass
class ConformalJets:
    omega: np.ndarray
    omega_r: np.ndarray
    omega_rr: np.ndarray
    omega_t: np.ndarray  # tangential partials, shape (n, *nodes)
    grad2: np.ndarray  # h^ij w_i w_j

    @property
    def upsilon(self) -> tuple:
        """Jets (value, d/dr, d^2/dr^2) at r = 0 of Upsilon with rhat = exp(Upsilon) r."""
        return (
            self.omega,
            0.5 * self.omega_r,
            (self.omega_rr + 0.25 * self.omega_r**2 - self.grad2) / 3.0,
        )

    def b_coefficients(self) -> tuple:
        """Taylor coefficients (b0, b1, b2) of b(x, rhat)."""
        e = np.exp(-self.omega)
        return (
            e,
            -0.5 * self.omega_r * e**2,
            (self.omega_r**2 / 3 + self.grad2 / 6 - self.omega_rr / 6) * e**3,
        )

    def b_series(self) -> LogSeries:
        return LogSeries(np.stack(np.broadcast_arrays(*self.b_coefficients())))


def b_from_upsilon(cj: ConformalJets) -> LogSeries:
    """Invert ``rhat = r exp(Upsilon(x, r))`` to second order by series arithmetic."""
    y0, y1, y2 = cj.upsilon
    # rhat / r = exp(Y) =: s(r); r = rhat b(rhat) with b = 1/s(r(rhat)); fixed point
    ups = LogSeries(np.stack(np.broadcast_arrays(y0, y1, 0.5 * y2)))
    s = ups.exp()
    b = LogSeries(np.stack(np.broadcast_arrays(np.exp(-y0), 0 * y0, 0 * y0)))
    for _ in range(3):
        # r(rhat) = rhat * b(rhat); s evaluated along r as a series in rhat
        rb = b.shift(1).truncate(2)
        comp = LogSeries.constant(s.a[0], 2)
        power = LogSeries.constant(np.ones_like(y0), 2)
        for k in range(1, 3):
            power = power * rb
            comp = comp + power * s.a[k]
        b = comp.pow(-1.0)
    return b


def conformal_jets(omega, surface: SurfaceGrid, data: HypersurfaceData) -> ConformalJets:
    """Jets of omega at r = 0.

    ``omega`` is an expression in collar coordinates (u[, v], r) or in the ambient
    chart coordinates (x, y, z[, w]).  Ambient expressions are differentiated along
    the inward normal geodesic by the chain rule.
    """
    n = surface.n
    if isinstance(omega, str):
        omega = _parse_omega(omega, n, surface.chart_dim)
    names = omega.variables
    params = COLLAR_VARS[:n]
    if "r" in names:
        point = {p: P for p, P in zip(params, surface.params)}
        point["r"] = np.zeros(surface.shape)
        jet = eval_jet(omega, {k: point.get(k, 0.0) for k in names})
        val = np.broadcast_to(jet.value, surface.shape).copy()
        w_r = np.broadcast_to(jet.d("r"), surface.shape).copy()
        w_rr = np.broadcast_to(jet.d2("r", "r"), surface.shape).copy()
        w_t = np.stack([
            np.broadcast_to(jet.d(p) if p in names else 0.0, surface.shape) for p in params
        ])
    else:
        N = surface.chart_dim
        X = surface.X
        jet = eval_jet(omega, {v: X[a] for a, v in enumerate(AMBIENT_VARS[:N]) if v in names})
        grad = np.zeros((N,) + surface.shape)
        hess = np.zeros((N, N) + surface.shape)
        idx = [AMBIENT_VARS.index(v) for v in names]
        for i, a in enumerate(idx):
            grad[a] = jet.grad[i]
        Hm = jet.hessian_matrix()
        for i, a in enumerate(idx):
            for j, b in enumerate(idx):
                hess[a, b] = Hm[i, j]
        V, A = _geodesic_jet(surface, data)
        val = np.broadcast_to(jet.value, surface.shape).copy()
        w_r = np.sum(grad * V, axis=0)
        w_rr = np.einsum("a...,ab...,b...->...", V, hess, V) + np.sum(grad * A, axis=0)
        w_t = np.einsum("a...,ia...->i...", grad, surface.dX)
    hinv = np.moveaxis(data.hinv, (-2, -1), (0, 1))
    grad2 = np.einsum("ij...,i...,j...->...", hinv, w_t, w_t)
    return ConformalJets(val, w_r, w_rr, w_t, grad2)


def _parse_omega(text: str, n: int, N: int) -> ExprAst:
    try:
        return parse_expr(text, COLLAR_VARS[:n] + ("r",))
    except ExprError:
        return parse_expr(text, AMBIENT_VARS[:N])


def _geodesic_jet(surface: SurfaceGrid, data: HypersurfaceData):
    """Chart velocity and acceleration at r = 0 of the unit-speed inward normal geodesic."""
    amb = data.ambient
    nu = data.normal
    if is_flat(amb):
        return nu, np.zeros_like(nu)
    if isinstance(amb, SpaceForm) and amb.c > 0:
        return nu, -amb.c * surface.X
    ast = chart_conformal_factor(amb)
    N = surface.chart_dim
    jet = eval_jet(ast, {v: surface.X[a] for a, v in enumerate(AMBIENT_VARS[:N])})
    V = np.exp(-jet.value) * nu
    g = jet.grad
    A = -2 * np.sum(g * V, axis=0) * V + np.sum(V * V, axis=0) * g
    return V, A


def constant_jets(k: float, data: HypersurfaceData) -> ConformalJets:
    shape = np.shape(data.H)
    z = np.zeros(shape)
    return ConformalJets(np.full(shape, float(k)), z, z.copy(), np.zeros((data.n,) + shape), z.copy())


# ------------------------------------------------------------------ routes

def stated_inv_b_eps(cj: ConformalJets) -> np.ndarray:
    return 0.5 * cj.omega_r


def stated_inv_b2_eps2(cj: ConformalJets) -> np.ndarray:
    return cj.omega_r**2 / 12 - cj.grad2 / 3 + cj.omega_rr / 3


@dataclass
class RouteBTerms:
    inv_b_eps: np.ndarray
    inv_b2_eps2: np.ndarray
    log_b_const: np.ndarray
    mismatch: float


def route_b_terms(cj: ConformalJets) -> RouteBTerms:
    b = cj.b_series()
    inv1 = b.pow(-1.0).coeff(1)
    inv2 = b.pow(-2.0).coeff(2)
    derived = b_from_upsilon(cj)
    mismatch = max(
        float(np.max(np.abs(inv1 - stated_inv_b_eps(cj)))),
        float(np.max(np.abs(inv2 - stated_inv_b2_eps2(cj)))),
        float(np.max(np.abs(derived.a - b.a))),
    )
    return RouteBTerms(inv1, inv2, -cj.omega, mismatch)


def anomaly_route_b(cj: ConformalJets, vd: VolumeData, data: HypersurfaceData, tol: float = 1e-12) -> float:
    if data.n != 2 or vd.n != 2:
        raise AnomalyError("the anomaly is implemented for n = 2")
    t = route_b_terms(cj)
    scale = 1.0 + float(np.max(np.abs(cj.omega_r)) ** 2 + np.max(np.abs(cj.omega_rr)) + np.max(cj.grad2))
    if t.mismatch > tol * scale * max(1.0, float(np.max(np.exp(-2 * cj.omega)))):
        raise AnomalyError(f"series-derived b coefficients disagree with the stated ones by {t.mismatch:.3g}")
    integrand = -0.5 * t.inv_b2_eps2 - vd.v[1] * t.inv_b_eps + vd.v[2] * t.log_b_const
    return surface_integrate(integrand, data)


def anomaly_route_closed(cj: ConformalJets, data: HypersurfaceData) -> float:
    if data.n != 2:
        raise AnomalyError("the anomaly is implemented for n = 2")
    w, wr, wrr, g2 = cj.omega, cj.omega_r, cj.omega_rr, cj.grad2
    integrand = 2 * (data.Lo2 - data.R) * w - data.H * wr + (4 * wrr - 4 * g2 + wr**2) / 3
    return -0.125 * surface_integrate(integrand, data)


def quadratic_part(cj: ConformalJets, data: HypersurfaceData) -> float:
    """Part of the anomaly quadratic in omega."""
    return -0.125 * surface_integrate((-4 * cj.grad2 + cj.omega_r**2) / 3, data)


def scaled(cj: ConformalJets, s: float) -> ConformalJets:
    return ConformalJets(s * cj.omega, s * cj.omega_r, s * cj.omega_rr, s * cj.omega_t, s * s * cj.grad2)


def min_area_anomaly(cj: ConformalJets, data: HypersurfaceData) -> float:
    """Anomaly of the renormalized minimal-surface area (reported for comparison only)."""
    P = data.H**2 + 4 * data.schouten_trace
    return 0.125 * surface_integrate(P * cj.omega - 2 * data.H * cj.omega_r + 2 * cj.grad2, data)


@dataclass
class AnomalyReport:
    route_b: float
    route_closed: float
    difference: float
    min_area: float


def anomaly_report(cj: ConformalJets, vd: VolumeData, data: HypersurfaceData) -> AnomalyReport:
    b = anomaly_route_b(cj, vd, data)
    c = anomaly_route_closed(cj, data)
    return AnomalyReport(b, c, abs(b - c), min_area_anomaly(cj, data))


def random_omega(rng: np.random.Generator, scale: float = 0.3) -> str:
    """A random quadratic polynomial in the ambient coordinates x, y, z."""
    names = ("x", "y", "z")
    terms = [f"{rng.uniform(-scale, scale):.6f}"]
    terms += [f"{rng.uniform(-scale, scale):.6f}*{v}" for v in names]
    terms += [
        f"{rng.uniform(-scale, scale):.6f}*{a}*{b}" for i, a in enumerate(names) for b in names[i:]
    ]
    return " + ".join(terms).replace("+ -", "- ")
