"""End-to-end evaluation: surface -> fundamental forms -> collar -> expansion -> volume."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .collar import CollarJets, collar_for, exact_collar
from .geometry import HypersurfaceData, SurfaceGrid, fundamental_forms, homogeneous_sphere
from .renvol import VolumeData, volume_coefficients
from .yamabe import YamabeExpansion, solve_yamabe


@dataclass
class Analysis:
    data: HypersurfaceData
    jets: CollarJets
    expansion: YamabeExpansion
    volume: VolumeData

    @property
    def energy(self) -> float:
        return self.volume.energy

    @property
    def obstruction(self):
        return self.expansion.obstruction


def analyze_data(data: HypersurfaceData, jets: Optional[CollarJets] = None, K: Optional[int] = None) -> Analysis:
    if jets is None:
        jets = collar_for(data, data.surface, K)
    exp = solve_yamabe(jets, data)
    vol = volume_coefficients(exp, jets, data)
    return Analysis(data, jets, exp, vol)


def analyze(surface: SurfaceGrid, ambient, K: Optional[int] = None, orientation=None,
            jets: Optional[CollarJets] = None) -> Analysis:
    data = fundamental_forms(surface, ambient, orientation)
    return analyze_data(data, jets, K)


def analyze_homogeneous(n: int, ambient=None, radius: float = 1.0, K: Optional[int] = None) -> Analysis:
    data = homogeneous_sphere(n, ambient, radius)
    return analyze_data(data, exact_collar(data, K))
