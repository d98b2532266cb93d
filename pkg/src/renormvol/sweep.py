"""Parameter sweeps of the energy, with the 1D oracle for tori of revolution."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import cos, pi, sqrt
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .geometry import Euclidean
from .pipeline import analyze
from .surfaces import torus


class SweepError(ValueError):
    pass


def torus_energy_oracle(t: float) -> float:
    """``1/8 int (k1 - k2)^2 dA`` for the torus with R/a = t, reduced to a
    single quadrature over the meridian angle (the energy is scale invariant)."""
    if t <= 1:
        raise SweepError(f"torus ratio must exceed 1, got {t}")

    def integrand(v):
        k1 = 1.0
        k2 = cos(v) / (t + cos(v))
        return (k1 - k2) ** 2 * (t + cos(v))

    val, _ = integrate.quad(integrand, 0.0, 2 * pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return 2 * pi * val / 8


def torus_energy_closed(t: float) -> float:
    return pi**2 * t * t / (2 * sqrt(t * t - 1))


def torus_energy(t: float, a: float = 1.0, shape=(64, 64)) -> float:
    return analyze(torus(t * a, a, tuple(shape)), Euclidean(3)).energy


@dataclass
class SweepRecord:
    t: float
    energy: float
    oracle: float

    @property
    def deviation(self) -> float:
        return abs(self.energy - self.oracle)


@dataclass
class SweepMinimum:
    t: float
    energy: float
    evaluations: int


def torus_sweep(ts: Sequence[float], a: float = 1.0, shape=(64, 64), threads: int = 1) -> list[SweepRecord]:
    """Energies along the ratio ladder; results keep the input order."""
    ts = [float(t) for t in ts]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            energies = list(pool.map(lambda t: torus_energy(t, a, shape), ts))
    else:
        energies = [torus_energy(t, a, shape) for t in ts]
    return [SweepRecord(t, e, torus_energy_oracle(t)) for t, e in zip(ts, energies)]


def torus_minimum(lo: float, hi: float, a: float = 1.0, shape=(64, 64), xatol: float = 1e-7) -> SweepMinimum:
    """Bounded scalar minimisation of the pipeline energy over the ratio."""
    if not 1 < lo < hi:
        raise SweepError(f"invalid ratio bracket [{lo}, {hi}]")
    res = optimize.minimize_scalar(
        lambda t: torus_energy(t, a, shape), bounds=(lo, hi), method="bounded", options={"xatol": xatol}
    )
    if not res.success:
        raise SweepError(f"ratio minimisation failed: {res.message}")
    return SweepMinimum(float(res.x), float(res.fun), int(res.nfev))


def ratio_ladder(start: float, stop: float, count: int, include: Optional[Sequence[float]] = None) -> np.ndarray:
    ts = np.linspace(start, stop, count)
    if include:
        ts = np.unique(np.concatenate([ts, [x for x in include if start <= x <= stop]]))
    return ts
