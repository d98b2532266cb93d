"""Renormalized volume coefficients v^(k), divergent coefficients c_k and the
energy E, with closed-form cross-checks."""
from __future__ import annotations

from dataclasses import dataclass
from math import pi
from typing import Optional

import numpy as np

from .collar import CollarJets
from .geometry import HypersurfaceData, euler_characteristic, surface_integrate
from .series import LogSeries, sqrt_det_ratio
from .yamabe import YamabeExpansion


class VolumeError(ValueError):
    pass


@dataclass
class VolumeData:
    n: int
    v: list
    c: list
    energy: float
    dA: np.ndarray

    def recompute(self) -> tuple[list, float]:
        """Integrals recomputed from the stored fields."""
        n = self.n
        c = [float(np.sum(np.broadcast_to(self.v[k], self.dA.shape) * self.dA)) / (n - k) for k in range(n)]
        return c, float(np.sum(np.broadcast_to(self.v[n], self.dA.shape) * self.dA))


def volume_series(exp: YamabeExpansion, jets: CollarJets) -> LogSeries:
    """``(1 + r phi)^(-n-1) sqrt(det h_r / det h_0)`` truncated at order n."""
    n = exp.n
    rphi = exp.phi.shift(1).truncate(n)
    sdet = sqrt_det_ratio(jets.metric_series(n))
    return (1 + rphi).pow(-(n + 1)) * sdet


def volume_coefficients(exp: YamabeExpansion, jets: CollarJets, data: HypersurfaceData) -> VolumeData:
    n = exp.n
    ser = volume_series(exp, jets)
    if ser.has_log(n):
        raise VolumeError("log r term inside the volume expansion through order n")
    v = [np.array(ser.coeff(k)) for k in range(n + 1)]
    if not np.allclose(v[0], 1.0, rtol=0, atol=1e-14):
        raise VolumeError("v^(0) differs from 1")
    c = [surface_integrate(v[k], data) / (n - k) for k in range(n)]
    energy = surface_integrate(v[n], data)
    return VolumeData(n, v, c, energy, np.asarray(data.dA))


def closed_form_v12(data: HypersurfaceData, ambient=None, n: Optional[int] = None, want_v2: bool = True):
    """``v1 = (1-n)/(2n) H`` and, for n >= 2,
    ``v2 = (n-5)/(12(n-1)) (R - |L°|^2) + (n-2)/(24 n^2) ((n-3) H^2 - 2n Rbar)``."""
    n = data.n if n is None else n
    H = np.asarray(data.H)
    v1 = (1 - n) / (2 * n) * H
    if not want_v2:
        return v1, None
    if n == 1:
        raise VolumeError("v^(2) closed form needs n >= 2")
    R, Lo2, Rb = data.R, data.Lo2, data.rbar
    v2 = (n - 5) / (12 * (n - 1)) * (R - Lo2) + (n - 2) / (24 * n * n) * ((n - 3) * H**2 - 2 * n * Rb)
    return v1, v2


@dataclass
class EnergySplit:
    energy: float
    willmore: float
    topological: float
    chi: int
    chi_residual: float
    residual: float


def energy_n2_split(data: HypersurfaceData, energy: Optional[float] = None) -> EnergySplit:
    """For n = 2: E = 1/4 int (|L°|^2 - R) = 1/4 int |L°|^2 - pi chi."""
    if data.n != 2:
        raise VolumeError("the energy split is for surfaces (n = 2)")
    chi, chi_res = euler_characteristic(data)
    direct = 0.25 * surface_integrate(data.Lo2 - data.R, data)
    willmore = 0.25 * surface_integrate(data.Lo2, data)
    topo = -pi * chi
    e = direct if energy is None else energy
    return EnergySplit(e, willmore, topo, chi, chi_res, abs(e - (willmore + topo)))


@dataclass
class MinimalAreaReport:
    energy_min_area: float
    pointwise_residual: float
    global_residual: float
    chi: int


def minimal_area_compare(data: HypersurfaceData, ambient=None, energy: Optional[float] = None) -> MinimalAreaReport:
    """``E_min = -1/8 int (H^2 + 4 h^ij P_ij)``, the pointwise identity
    ``H^2 + 4 tr P = 2(|L°|^2 + R)`` and the relation ``E_min = -E - 2 pi chi``."""
    if data.n != 2:
        raise VolumeError("the minimal-area comparison is for surfaces (n = 2)")
    lhs = data.H**2 + 4 * data.schouten_trace
    e_min = -0.125 * surface_integrate(lhs, data)
    point = float(np.max(np.abs(lhs - 2 * (data.Lo2 + data.R))))
    chi, _ = euler_characteristic(data)
    if energy is None:
        energy = 0.25 * surface_integrate(data.Lo2 - data.R, data)
    return MinimalAreaReport(e_min, point, abs(e_min - (-energy - 2 * pi * chi)), chi)
