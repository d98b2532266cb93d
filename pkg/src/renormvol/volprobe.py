"""Direct volume probes for models with an exact singular Yamabe solution.

Both models live in the closed unit ball of R^(n+1) with the flat metric and
``u = (1 - |x|^2)/2``, so ``u^-2 |dx|^2`` is hyperbolic and ``r = 1 - |x|``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma, log, pi
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .expr import ExprAst, eval_jet, parse_expr
from .geometry import AMBIENT_VARS


class ProbeError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProbeModel:
    name: str
    n: int
    u: ExprAst

    @property
    def sphere_area(self) -> float:
        """Area of the unit sphere S^n bounding the model."""
        return 2 * pi ** ((self.n + 1) / 2) / gamma((self.n + 1) / 2)


def _model(name: str, n: int) -> ProbeModel:
    names = AMBIENT_VARS[: n + 1]
    sq = " + ".join(f"{v}^2" for v in names)
    return ProbeModel(name, n, parse_expr(f"(1 - ({sq}))/2", names))


MODELS = {
    "hyperbolic-ball": _model("hyperbolic-ball", 2),
    "hyperbolic-disc": _model("hyperbolic-disc", 1),
}


def get_model(name: str) -> ProbeModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ProbeError(f"unknown probe model {name!r}; choose from {sorted(MODELS)}") from None


def check_model(model: ProbeModel, samples: int = 100, seed: int = 0) -> float:
    """Max of ``|R_g + n(n+1)|`` at random interior points, with
    ``R_g = -n(n+1)|du|^2 + 2n u Delta u`` for the flat background."""
    rng = np.random.default_rng(seed)
    d = model.n + 1
    pts = rng.normal(size=(d, samples))
    pts *= rng.uniform(0, 0.95, samples) ** (1 / d) / np.linalg.norm(pts, axis=0)
    jet = eval_jet(model.u, {v: pts[a] for a, v in enumerate(AMBIENT_VARS[:d])})
    n = model.n
    grad2 = np.sum(jet.grad**2, axis=0)
    lap = np.trace(jet.hessian_matrix(), axis1=0, axis2=1)
    R = -n * (n + 1) * grad2 + 2 * n * jet.value * lap
    return float(np.max(np.abs(R + n * (n + 1))))


def probe_volume(model: ProbeModel, eps: float, check_range: bool = True) -> float:
    """``Vol_g({r > eps})`` by adaptive radial quadrature in ``log r``."""
    if check_range and not 1e-4 <= eps <= 0.3:
        if eps >= 1:
            return 0.0
        raise ProbeError(f"eps = {eps:g} outside the probe range [1e-4, 0.3]")
    if eps >= 1:
        return 0.0
    n = model.n
    area = model.sphere_area

    def integrand(tau):
        r = np.exp(tau)
        s = 1 - r
        return area * s**n * (0.5 * r * (2 - r)) ** (-(n + 1)) * r

    val, err = integrate.quad(integrand, log(eps), 0.0, epsabs=0.0, epsrel=1e-13, limit=200)
    if not np.isfinite(val) or err > 1e-11 * abs(val):
        raise ProbeError(f"radial quadrature did not converge at eps={eps:g} (error estimate {err:.3g})")
    return float(val)


@dataclass
class ProbeFit:
    c: list
    energy: float
    V: float
    tail: list
    residual: float
    condition: float
    eps: np.ndarray
    volumes: np.ndarray


def fit_expansion(
    model: ProbeModel,
    eps: Optional[Sequence[float]] = None,
    tail_powers: int = 4,
    max_condition: float = 1e12,
) -> ProbeFit:
    """Least squares on ``{eps^-n .. eps^-1, log(1/eps), 1}`` plus ``eps^1 .. eps^m``
    for the o(1) remainder, with every power scaled by the middle sample."""
    if eps is None:
        eps = np.geomspace(1e-3, 1e-1, 24)
    eps = np.asarray(eps, dtype=float)
    if eps.size < 12:
        raise ProbeError("the expansion fit needs at least 12 samples")
    vols = np.array([probe_volume(model, e) for e in eps])
    n = model.n
    mid = float(np.exp(np.mean(np.log(eps))))
    x = eps / mid
    cols = [x ** (-(n - k)) for k in range(n)] + [np.log(1 / eps), np.ones_like(eps)]
    cols += [x**p for p in range(1, tail_powers + 1)]
    A = np.column_stack(cols)
    scale = np.linalg.norm(A, axis=0)
    As = A / scale
    cond = float(np.linalg.cond(As))
    if cond > max_condition:
        raise ProbeError(f"expansion fit is ill-conditioned (condition number {cond:.3g})")
    coef, *_ = np.linalg.lstsq(As, vols, rcond=None)
    coef = coef / scale
    resid = float(np.max(np.abs(A @ coef - vols)))
    c = [float(coef[k]) * mid ** (n - k) for k in range(n)]
    tail = [float(coef[n + 1 + p]) * mid ** (-p) for p in range(1, tail_powers + 1)]
    return ProbeFit(c, float(coef[n]), float(coef[n + 1]), tail, resid, cond, eps, vols)


def closed_form_expansion(model: ProbeModel) -> dict:
    """Divergent coefficients, energy and constant term derived by hand."""
    if model.name == "hyperbolic-ball":
        return {"c": [2 * pi, -2 * pi], "energy": -2 * pi, "V": pi / 2 - 2 * pi * log(2)}
    if model.name == "hyperbolic-disc":
        return {"c": [2 * pi], "energy": 0.0, "V": -3 * pi}
    raise ProbeError(f"no closed form for {model.name}")


def ball_volume_closed(eps: float) -> float:
    """Antiderivative oracle for the n = 2 model."""
    s = 1 - eps
    return 2 * pi * ((2 * s**3 + 2 * s) / (1 - s * s) ** 2 + log((1 - s) / (1 + s)))


def disc_volume_closed(eps: float) -> float:
    return 4 * pi * (1 / (2 * eps - eps * eps) - 1)
