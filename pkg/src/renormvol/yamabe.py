"""Formal solution of the singular Yamabe problem near a hypersurface.

With ``u = r + r^2 phi`` the constant-scalar-curvature condition for
``u^-2 gbar`` becomes a nonlinear equation for phi whose r^k coefficient is
linear in phi_k with the indicial factor (k + 2)(k - n).  The equation is solved
order by order on truncated log series; at k = n the factor vanishes and the
residual is absorbed by a term ``L r^n log r`` in phi, where L is the
obstruction density.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .collar import CollarError, CollarJets
from .geometry import HypersurfaceData, gradient_norm, metric_laplacian, tangential_laplacian
from .series import LogSeries, MatrixSeries, matrix_series_inverse


class YamabeError(ValueError):
    pass


@dataclass
class YamabeExpansion:
    """``phi`` carries phi_0..phi_n with the obstruction in its order-n log slot
    (phi_n itself is gauge-fixed to zero)."""

    n: int
    phi: LogSeries
    obstruction: np.ndarray
    residual: LogSeries
    mode: str
    tangential: Optional[LogSeries] = None
    meta: dict = field(default_factory=dict)

    def phi_coeff(self, k: int) -> np.ndarray:
        return self.phi.coeff(k)

    @property
    def phis(self) -> list:
        return [self.phi.coeff(k) for k in range(self.n)]

    def u_coeff(self, k: int) -> np.ndarray:
        """Coefficient u^(k) of r^k in u, 2 <= k <= n + 1."""
        if not 2 <= k <= self.n + 1:
            raise IndexError("u^(k) is determined for 2 <= k <= n+1")
        return self.phi.coeff(k - 2)

    def u_series(self) -> LogSeries:
        return self.phi.shift(2) + LogSeries.monomial(1, self.n + 2, np.ones_like(self.obstruction))


# ------------------------------------------------------------- residual


def _metric_trace_series(jets: CollarJets, order: int) -> LogSeries:
    """``1/2 h^ij h'_ij`` as a series in r, truncated at ``order``."""
    hs = MatrixSeries.from_derivatives(jets.h[: order + 2])
    hinv = matrix_series_inverse(hs)
    return (hinv @ hs.deriv()).trace() * 0.5


def _rbar_series(jets: CollarJets, order: int) -> LogSeries:
    tay = jets.rbar_taylor()
    m = min(order + 1, tay.shape[0])
    a = np.zeros((order + 1,) + tay.shape[1:])
    a[:m] = tay[:m]
    return LogSeries(a)


def fe_residual(
    phi: LogSeries,
    n: int,
    half_trace: LogSeries,
    rbar: LogSeries,
    tangential: Optional[LogSeries] = None,
    gradient_sq: Optional[LogSeries] = None,
) -> LogSeries:
    """Series of the left-hand side of the phi-equation, truncated at ``phi.order``.

    ``tangential`` is the series of ``Delta_{h_r} phi`` and ``gradient_sq`` that of
    ``h^ij d_i phi d_j phi``; both default to zero.
    """
    K = phi.order
    one = np.ones(np.broadcast_shapes(phi.batch_shape, half_trace.batch_shape))
    rphi = phi.shift(1)
    r_dphi = phi.euler()
    r2_ddphi = r_dphi.euler() - r_dphi
    inner = r2_ddphi + r_dphi * 4 + phi * 2
    inner = inner + half_trace * (1 + rphi * 2 + r_dphi.shift(1))
    if tangential is not None:
        inner = inner + tangential.shift(2)
    first = (1 + rphi) * inner.truncate(K)
    q = r_dphi + phi * 2
    second = q * 2 + (q * q).shift(1)
    if gradient_sq is not None:
        second = second + gradient_sq.shift(3)
    third = ((1 + rphi) * (1 + rphi) * rbar).shift(1) * (1.0 / (2 * n))
    out = first - second * ((n + 1) / 2) + third
    return out.truncate(K) * one


# ------------------------------------------------------------- indicial


def indicial_coefficients(n: int, k: int) -> tuple[float, float, float]:
    """Apply the linear part of the phi-equation to ``r^k`` and ``r^n log r``.

    Returns ``(c_k, c_log_smooth, c_log_log)``: the r^k coefficient for phi = r^k,
    and the r^n coefficients in the smooth and log slots for phi = r^n log r.
    """
    K = max(n, k)
    zero = LogSeries.zeros(K)

    def linear(phi: LogSeries) -> LogSeries:
        return fe_residual(phi, n, zero, zero) - fe_residual(zero, n, zero, zero)

    # nonlinear terms of a single monomial only reach orders above its own
    ck = linear(LogSeries.monomial(k, K)).coeff(k)
    lg = linear(LogSeries.monomial(n, K, log=True))
    return float(ck), float(lg.coeff(n)), float(lg.coeff(n, log=True))


def indicial_self_test(nmax: int = 6, tol: float = 1e-12) -> list[str]:
    """Check the constants the solver divides by; returns failure messages."""
    problems = []
    for n in range(1, nmax + 1):
        for k in range(0, n + 1):
            ck, _, _ = indicial_coefficients(n, k)
            if abs(ck - (k + 2) * (k - n)) > tol:
                problems.append(f"n={n}, k={k}: indicial coefficient {ck} != {(k + 2) * (k - n)}")
        _, smooth, logc = indicial_coefficients(n, n)
        if abs(smooth - (n + 2)) > tol or abs(logc) > tol:
            problems.append(f"n={n}: r^n log r gives ({smooth}, {logc}) instead of ({n + 2}, 0)")
    return problems


_SELF_TESTED = False


def _ensure_self_test():
    global _SELF_TESTED
    if not _SELF_TESTED:
        problems = indicial_self_test()
        if problems:
            raise YamabeError("indicial self-test failed: " + "; ".join(problems))
        _SELF_TESTED = True


# ------------------------------------------------------------- solver


def _is_constant(data: HypersurfaceData) -> bool:
    fields = (data.H, data.L2, data.R, data.rbar, data.ric_nn)
    for f in fields:
        f = np.asarray(f)
        if f.size > 1 and np.ptp(f) > 1e-10 * max(1.0, float(np.max(np.abs(f)))):
            return False
    return True


def solve_yamabe(
    jets: CollarJets,
    data: HypersurfaceData,
    n: Optional[int] = None,
    mode: Optional[str] = None,
) -> YamabeExpansion:
    """Solve the phi-equation through order n and extract the obstruction."""
    _ensure_self_test()
    n = data.n if n is None else n
    if jets.n != n:
        raise YamabeError(f"collar jets are for n={jets.n}, expected n={n}")
    if jets.order < n + 1:
        raise CollarError(f"collar order {jets.order} is below n+1 = {n + 1}")
    if mode is None:
        mode = "homogeneous" if data.homogeneous or data.surface is None else "grid"
    if mode == "homogeneous":
        if not _is_constant(data):
            raise YamabeError("homogeneous mode needs node-wise constant data")
    elif mode == "grid":
        if n > 2:
            raise YamabeError("grid mode supports n <= 2; use homogeneous mode for larger n")
        if data.surface is None:
            raise YamabeError("grid mode needs a surface grid")
    else:
        raise YamabeError(f"unknown mode {mode!r}")

    K = n
    half_trace = _metric_trace_series(jets, K)
    rbar = _rbar_series(jets, K)
    batch = half_trace.batch_shape
    phi = LogSeries.zeros(K, batch)
    tangential = None
    for k in range(n):
        res = fe_residual(phi, n, half_trace, rbar, tangential)
        phi.a[k] = -res.coeff(k) / ((k + 2) * (k - n))
        if mode == "grid" and k + 2 <= K:
            # Delta_{h_r} phi enters at r^(k+2); only phi_0 reaches order n <= 2
            tangential = LogSeries.zeros(K - 2, batch)
            for j in range(0, min(k, K - 2) + 1):
                tangential.a[j] = tangential_laplacian(phi.a[j], data)
    res = fe_residual(phi, n, half_trace, rbar, tangential)
    obstruction = -res.coeff(n) / (n + 2)
    phi.b[n] = obstruction
    final = fe_residual(phi, n, half_trace, rbar, tangential)
    return YamabeExpansion(n, phi, obstruction, final, mode, tangential)


# ------------------------------------------------------------- closed forms


@dataclass
class ClosedFormPhis:
    phi0: np.ndarray
    phi1: Optional[np.ndarray]
    phi1_intermediate: Optional[np.ndarray]


def closed_form_phis(data: HypersurfaceData, ambient=None, n: Optional[int] = None, want_phi1: bool = True):
    """phi|_0 = -H/2n and, for n >= 2, phi_r|_0 from both the intermediate form
    (with h^ij Rbar_0i0j) and the final form in R, |L°|^2, H and Rbar."""
    n = data.n if n is None else n
    H = np.asarray(data.H)
    phi0 = -H / (2 * n)
    if not want_phi1:
        return ClosedFormPhis(phi0, None, None)
    if n == 1:
        raise YamabeError("phi_r at r=0 is not determined by the n=1 equation (it reads 0 = 0)")
    R, L2, Lo2, Rb = data.R, data.L2, data.Lo2, data.rbar
    tr_rb = 0.5 * (Rb - R - L2 + H**2)
    inter = (H**2 / n - L2 - tr_rb + Rb / (2 * n)) / (3 * (n - 1))
    final = ((1 - n) / (2 * n) * (Rb + H**2) + 0.5 * (R - Lo2)) / (3 * (n - 1))
    return ClosedFormPhis(phi0, final, inter)


# ------------------------------------------------------------- residual scan


@dataclass
class ResidualScan:
    r: np.ndarray
    residual: np.ndarray
    exponent: float
    constant: float
    exact: bool
    fit_rms: float


def scalar_curvature_along_collar(exp: YamabeExpansion, jets: CollarJets, data: HypersurfaceData, r: float):
    """``R_g`` for ``g = u^-2 (dr^2 + h_r)`` from the truncated collar and u, via
    ``R_g = -n(n+1)|du|^2 + 2n u Delta u + u^2 Rbar``."""
    n = exp.n
    u = exp.u_series()
    ur = u.deriv()
    urr = ur.deriv()
    uv, urv, urrv = u.evaluate(r), ur.evaluate(r), urr.evaluate(r)
    hs = jets.metric_series()
    h = hs.evaluate(r)
    hp = hs.deriv().evaluate(r)
    hinv = np.linalg.inv(h)
    half_tr = 0.5 * np.einsum("...ij,...ji->...", hinv, hp)
    rbar = np.zeros_like(uv) + _rbar_series(jets, jets.rbar.shape[0] - 1).evaluate(r)
    lap_t = np.zeros_like(uv)
    grad2 = np.zeros_like(uv)
    if exp.mode == "grid":
        grid = data.grid
        lap_t = metric_laplacian(uv, h, grid)
        grad2 = gradient_norm(uv, hinv, grid)
    lap = urrv + half_tr * urv + lap_t
    du2 = urv**2 + grad2
    return -n * (n + 1) * du2 + 2 * n * uv * lap + uv**2 * rbar


def residual_scan(
    exp: YamabeExpansion,
    jets: CollarJets,
    data: HypersurfaceData,
    r_samples: Optional[Sequence[float]] = None,
    noise: float = 1e-13,
) -> ResidualScan:
    """Sup-norm of ``R_g + n(n+1)`` over nodes at each sample r and a fit
    ``C r^p |log r|``."""
    if r_samples is None:
        r_samples = np.geomspace(1e-3, 1e-1, 13)
    r = np.asarray(r_samples, dtype=float)
    n = exp.n
    res = np.array([
        float(np.max(np.abs(scalar_curvature_along_collar(exp, jets, data, ri) + n * (n + 1)))) for ri in r
    ])
    keep = res > noise
    if np.count_nonzero(keep) < 3:
        return ResidualScan(r, res, float("inf"), 0.0, True, 0.0)
    rk = r[keep]
    A = np.column_stack([np.ones_like(rk), np.log(rk)])
    y = np.log(res[keep] / np.abs(np.log(rk)))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return ResidualScan(r, res, float(coef[1]), float(np.exp(coef[0])), False, rms)
