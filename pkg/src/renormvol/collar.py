"""r-jets of the geodesic collar metric h_r and of the ambient scalar curvature
along inward normal geodesics.

Jets are stored as r-derivatives at r = 0: ``h[m]`` is d^m h_r / dr^m.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np

from .expr import ExprDomainError, eval_jet
from .geometry import (
    AMBIENT_VARS,
    ConformalFlat,
    Euclidean,
    GeometryError,
    HypersurfaceData,
    SpaceForm,
    SurfaceGrid,
    chart_conformal_factor,
    fundamental_forms,
    is_flat,
)
from .series import MatrixSeries

EXACT_TOL = 1e-13
NUMERIC_TOL = 1e-7


class CollarError(RuntimeError):
    pass


@dataclass
class CollarJets:
    """Per-node collar data; ``h`` has shape ``(K+1, *nodes, n, n)`` and
    ``rbar`` shape ``(K+1, *nodes)``."""

    h: np.ndarray
    rbar: np.ndarray
    ric_nn: np.ndarray
    kind: str = "exact"
    residual: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.h.shape[0] - 1

    @property
    def n(self) -> int:
        return self.h.shape[-1]

    @property
    def node_shape(self) -> tuple:
        return self.h.shape[1:-2]

    def metric_series(self, order: Optional[int] = None) -> MatrixSeries:
        s = MatrixSeries.from_derivatives(self.h)
        return s if order is None else s.truncate(order)

    def metric_at(self, r: float) -> np.ndarray:
        """Truncated Taylor polynomial of h_r."""
        return self.metric_series().evaluate(r)

    def rbar_taylor(self) -> np.ndarray:
        scale = np.array([1.0 / factorial(m) for m in range(self.rbar.shape[0])])
        return self.rbar * scale.reshape((-1,) + (1,) * (self.rbar.ndim - 1))

    # ------------------------------------------------------------ records
    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "order": self.order,
            "node_shape": list(self.node_shape),
            "h": self.h.tolist(),
            "rbar": self.rbar.tolist(),
            "ric_nn": np.asarray(self.ric_nn).tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CollarJets":
        try:
            h = np.asarray(rec["h"], dtype=float)
            rbar = np.asarray(rec["rbar"], dtype=float)
            ric = np.asarray(rec["ric_nn"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise CollarError(f"malformed collar record: {exc}") from exc
        n = int(rec.get("n", h.shape[-1]))
        if h.ndim < 3 or h.shape[-1] != n or h.shape[-2] != n:
            raise CollarError("collar record metric jets have the wrong shape")
        if rbar.shape[1:] != h.shape[1:-2]:
            raise CollarError("collar record curvature jets do not match the node layout")
        if rbar.shape[0] < h.shape[0]:
            pad = np.zeros((h.shape[0] - rbar.shape[0],) + rbar.shape[1:])
            rbar = np.concatenate([rbar, pad])
        out = cls(h, rbar[: h.shape[0]], ric, kind=str(rec.get("kind", "external")))
        out.validate()
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_record())

    @classmethod
    def loads(cls, text: str) -> "CollarJets":
        return cls.from_record(json.loads(text))

    def validate(self):
        try:
            np.linalg.cholesky(self.h[0])
        except np.linalg.LinAlgError as exc:
            raise CollarError("order-0 collar metric is not positive definite") from exc


def _check_order(K: int, n: int):
    if K < n + 1:
        raise CollarError(f"collar order K={K} is below the minimum n+1={n + 1}")


# ------------------------------------------------------------------ exact


def _tube_jets(h, L, c: float, K: int) -> np.ndarray:
    """Derivatives of ``C^2 h - 2 C S L + S^2 L h^-1 L`` with C = cos(sqrt(c) r),
    S = sin(sqrt(c) r)/sqrt(c); each coefficient is a polynomial in c, so c = 0
    is the Euclidean collar and c < 0 the hyperbolic tube."""
    LhL = L @ np.linalg.inv(h) @ L
    out = np.zeros((K + 1,) + h.shape)
    q = -4.0 * c
    for m in range(K + 1):
        if m == 0:
            out[0] = h
        elif m % 2:
            out[m] = -2.0 * q ** ((m - 1) // 2) * L
        else:
            out[m] = 0.5 * q ** (m // 2) * h + 2.0 * q ** (m // 2 - 1) * LhL
    return out


def euclidean_collar(data: HypersurfaceData, K: Optional[int] = None) -> CollarJets:
    """Exact collar ``h - 2rL + r^2 L h^-1 L`` of a hypersurface in flat space."""
    if not is_flat(data.ambient):
        raise CollarError("euclidean_collar needs a flat ambient")
    K = data.n + 2 if K is None else K
    _check_order(K, data.n)
    h = _tube_jets(data.h, data.L, 0.0, K)
    zeros = np.zeros((K + 1,) + np.shape(data.H))
    return CollarJets(h, zeros, np.zeros(np.shape(data.H)), kind="exact")


def spaceform_collar(data: HypersurfaceData, c: Optional[float] = None, K: Optional[int] = None) -> CollarJets:
    """Closed-form tube collar in the space form of curvature c."""
    if c is None:
        if not isinstance(data.ambient, SpaceForm):
            raise CollarError("spaceform_collar needs a space-form ambient or an explicit c")
        c = data.ambient.c
    K = data.n + 2 if K is None else K
    _check_order(K, data.n)
    n = data.n
    h = _tube_jets(data.h, data.L, float(c), K)
    rbar = np.zeros((K + 1,) + np.shape(data.H))
    rbar[0] = n * (n + 1) * c
    return CollarJets(h, rbar, n * c * np.ones(np.shape(data.H)), kind="exact")


def exact_collar(data: HypersurfaceData, K: Optional[int] = None) -> CollarJets:
    if isinstance(data.ambient, Euclidean):
        return euclidean_collar(data, K)
    if isinstance(data.ambient, SpaceForm):
        return spaceform_collar(data, data.ambient.c, K)
    raise CollarError("no closed-form collar for this ambient; use numeric_collar")


# ---------------------------------------------------------------- numeric


class _Flow:
    """Geodesic and Jacobi-field right-hand side for exp(2 omega)|dx|^2."""

    def __init__(self, omega, N: int):
        self.omega = omega
        self.names = AMBIENT_VARS[:N]

    def jets(self, x):
        if self.omega is None:
            z = np.zeros_like(x)
            return np.zeros(x.shape[1:]), z, np.zeros((x.shape[0],) + x.shape)
        jet = eval_jet(self.omega, {v: x[a] for a, v in enumerate(self.names)})
        return jet.value, jet.grad, jet.hessian_matrix()

    def rhs(self, state):
        x, xd, J, Jd = state
        _, g, Hs = self.jets(x)
        gx = np.sum(g * xd, axis=0)
        sp = np.sum(xd * xd, axis=0)
        acc = -2 * gx * xd + sp * g
        # linearisation of the geodesic equation along J
        HJ = np.einsum("ab...,ib...->ia...", Hs, J)
        xHJ = np.einsum("a...,ia...->i...", xd, HJ)
        gJd = np.einsum("a...,ia...->i...", g, Jd)
        xJd = np.einsum("a...,ia...->i...", xd, Jd)
        Jacc = (
            -2 * xHJ[:, None] * xd[None]
            + sp[None, None] * HJ
            - 2 * gJd[:, None] * xd[None]
            - 2 * gx[None, None] * Jd
            + 2 * xJd[:, None] * g[None]
        )
        return (xd, acc, Jd, Jacc)


def _rk4(flow: _Flow, state, t: float, steps: int):
    dt = t / steps
    for _ in range(steps):
        k1 = flow.rhs(state)
        k2 = flow.rhs(tuple(s + 0.5 * dt * k for s, k in zip(state, k1)))
        k3 = flow.rhs(tuple(s + 0.5 * dt * k for s, k in zip(state, k2)))
        k4 = flow.rhs(tuple(s + dt * k for s, k in zip(state, k3)))
        state = tuple(s + dt / 6 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4))
    return state


def _advance(flow: _Flow, state, t: float, steps: int, tol: float):
    """RK4 with step-doubling control: halve the step until two resolutions agree."""
    coarse = _rk4(flow, state, t, steps)
    for _ in range(12):
        fine = _rk4(flow, state, t, 2 * steps)
        err = max(float(np.max(np.abs(a - b))) for a, b in zip(coarse, fine))
        if err <= tol:
            return fine, steps
        coarse, steps = fine, 2 * steps
    raise CollarError(f"geodesic integration did not reach tolerance {tol:g} (last change {err:.3g})")


def _central_derivative(samples: dict, m: int, s: int) -> np.ndarray:
    """Second-order central difference for the m-th derivative with spacing s
    (in units of the base step; samples keyed by integer offsets)."""
    f = samples
    if m == 1:
        return (f[s] - f[-s]) / 2
    if m == 2:
        return f[s] - 2 * f[0] + f[-s]
    if m == 3:
        return (f[2 * s] - 2 * f[s] + 2 * f[-s] - f[-2 * s]) / 2
    if m == 4:
        return f[2 * s] - 4 * f[s] + 6 * f[0] - 4 * f[-s] + f[-2 * s]
    raise CollarError("numeric collar jets are limited to K <= 4")


def _richardson_jets(samples: dict, K: int, delta: float):
    out, err = [samples[0]], [np.zeros_like(samples[0])]
    for m in range(1, K + 1):
        D = {s: _central_derivative(samples, m, s) / (s * delta) ** m for s in (1, 2, 4)}
        R1 = {s: (4 * D[s] - D[2 * s]) / 3 for s in (1, 2)}
        R2 = (16 * R1[1] - R1[2]) / 15
        out.append(R2)
        err.append(np.abs(R2 - R1[1]))
    return np.stack(out), np.stack(err)


def numeric_collar(
    ambient,
    surface: SurfaceGrid,
    K: int = 4,
    data: Optional[HypersurfaceData] = None,
    delta: Optional[float] = None,
    tol: float = 1e-13,
) -> CollarJets:
    """Collar jets by integrating normal geodesics and Jacobi fields of
    ``exp(2 omega)|dx|^2`` node by node, followed by Richardson-extrapolated
    central differences on a symmetric stencil in r."""
    if K > 4:
        raise CollarError("numeric collar jets are limited to K <= 4")
    if isinstance(ambient, SpaceForm) and ambient.c > 0:
        raise CollarError("numeric collar works in conformally flat charts of R^(n+1)")
    if data is None:
        data = fundamental_forms(surface, ambient)
    n = surface.n
    if K < n + 1:
        raise CollarError(f"collar order K={K} is below the minimum n+1={n + 1}")
    omega = chart_conformal_factor(ambient)
    flow = _Flow(omega, surface.chart_dim)
    nu = data.normal
    X, dX, ddX = surface.X, surface.dX, surface.ddX
    om = data.omega
    Ld = np.einsum("ija...,a...->...ij", ddX, nu)
    hd = np.einsum("ia...,ja...->...ij", dX, dX)
    W = np.linalg.solve(hd, Ld)  # (h^delta)^-1 L^delta, shape (*g, i, k) -> sum_j hd^{kj} L_ji
    _, g0, _ = flow.jets(X)
    dom = np.einsum("a...,ia...->i...", g0, dX)
    e = np.exp(-om)
    xd0 = e * nu
    Jd0 = e[None, None] * (-dom[:, None] * nu[None] - np.einsum("...ki,ka...->ia...", W, dX))
    state0 = (X.copy(), xd0, dX.copy(), Jd0)

    if delta is None:
        radius = data.min_curvature_radius()
        delta = 1e-2 * min(radius, 1.0)
    steps = 4
    offsets = list(range(-8, 9))
    h_samples, r_samples = {}, {}
    for sign in (1, -1):
        state = state0
        for j in range(1, 9):
            try:
                state, steps = _advance(flow, state, sign * delta, steps, tol)
            except (ExprDomainError, FloatingPointError) as exc:
                raise CollarError(f"geodesic left the domain of omega at r = {sign * j * delta:g}: {exc}") from exc
            h_samples[sign * j], r_samples[sign * j] = _pullback(flow, state, n)
    h_samples[0], r_samples[0] = _pullback(flow, state0, n)
    assert sorted(h_samples) == offsets

    h_jets, h_err = _richardson_jets(h_samples, K, delta)
    r_jets, _ = _richardson_jets(r_samples, K, delta)
    h_jets = np.moveaxis(h_jets, (1, 2), (-2, -1))
    h_err = np.moveaxis(h_err, (1, 2), (-2, -1))
    h_jets = 0.5 * (h_jets + np.swapaxes(h_jets, -1, -2))
    return CollarJets(
        h_jets,
        r_jets,
        data.ric_nn.copy(),
        kind="numeric",
        residual=np.max(np.abs(h_err), axis=(-2, -1)),
        meta={"delta": delta, "rk4_steps": steps},
    )


def _pullback(flow: _Flow, state, n: int):
    x, _, J, _ = state
    om, g, Hs = flow.jets(x)
    h = np.exp(2 * om) * np.einsum("ia...,ja...->ij...", J, J)
    N = x.shape[0]
    lap = np.trace(Hs, axis1=0, axis2=1)
    g2 = np.sum(g * g, axis=0)
    dim = N - 1
    rbar = np.exp(-2 * om) * (-dim * (dim - 1) * g2 - 2 * dim * lap)
    return h, rbar


# ------------------------------------------------------------ consistency


@dataclass
class ConsistencyReport:
    first_order: float
    second_order: float
    tol: float
    passed: bool
    kind: str


def collar_consistency_check(jets: CollarJets, data: HypersurfaceData, ambient=None, tol: Optional[float] = None):
    """Max-norm residuals of ``h' = -2L`` and ``h'' = -2 Rbar_0i0j + 2 L h^-1 L`` at r = 0."""
    L = data.L
    LhL = L @ data.hinv @ L
    r1 = float(np.max(np.abs(jets.h[1] + 2 * L)))
    r2 = float(np.max(np.abs(jets.h[2] - (-2 * data.rbar_0i0j + 2 * LhL))))
    if tol is None:
        tol = EXACT_TOL if jets.kind == "exact" else NUMERIC_TOL
    scale = max(1.0, float(np.max(np.abs(jets.h[0]))))
    return ConsistencyReport(r1, r2, tol, max(r1, r2) <= tol * scale, jets.kind)


def collar_for(data: HypersurfaceData, surface: Optional[SurfaceGrid] = None, K: Optional[int] = None) -> CollarJets:
    """Exact collar where one exists, numeric otherwise."""
    if isinstance(data.ambient, (Euclidean, SpaceForm)):
        return exact_collar(data, K)
    if isinstance(data.ambient, ConformalFlat):
        if surface is None:
            surface = data.surface
        return numeric_collar(data.ambient, surface, K=min(K or 4, 4), data=data)
    raise GeometryError("unsupported ambient")
