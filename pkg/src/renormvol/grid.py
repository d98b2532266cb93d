"""Parameter grids, pole extension, finite-difference and spectral stencils,
and quadrature weights for closed curves and surfaces.

Topologies
----------
``curve``   u in [0, 2pi), periodic, n = 1.
``torus``   (u, v) in [0, 2pi)^2, biperiodic.
``sphere``  u in [0, 2pi) periodic, polar v_j = (j + 1/2) pi / Nv (poles excluded).

Across a pole a sphere-like grid is continued to a doubled grid in v of period
2pi: the node at polar index ``2Nv-1-j`` of the doubled grid is the original node
``(u + pi, v_j)``.  Covariant tensor components pick up a factor -1 per v index.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

TOPOLOGIES = ("curve", "torus", "sphere")


@dataclass(frozen=True)
class GridSpec:
    shape: tuple
    topology: str

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        shape = tuple(int(s) for s in self.shape)
        object.__setattr__(self, "shape", shape)
        want = 1 if self.topology == "curve" else 2
        if len(shape) != want:
            raise ValueError(f"{self.topology} grid needs {want} dimension(s), got {shape}")
        if min(shape) < 16:
            raise ValueError(f"grid dimensions must be >= 16 per direction, got {shape}")
        if self.topology == "sphere" and shape[0] % 2:
            raise ValueError("sphere-like grids need an even azimuthal count for the pole rule")

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def steps(self) -> tuple:
        if self.topology == "sphere":
            return (2 * pi / self.shape[0], pi / self.shape[1])
        return tuple(2 * pi / s for s in self.shape)

    def axes(self) -> tuple:
        nu = self.shape[0]
        u = 2 * pi * np.arange(nu) / nu
        if self.topology == "curve":
            return (u,)
        nv = self.shape[1]
        if self.topology == "torus":
            v = 2 * pi * np.arange(nv) / nv
        else:
            v = (np.arange(nv) + 0.5) * pi / nv
        return (u, v)

    def params(self) -> tuple:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def weights(self) -> np.ndarray:
        """Quadrature weights for integrals in parameter space, d(params)."""
        if self.topology == "curve":
            return np.full(self.shape, 2 * pi / self.shape[0])
        nu, nv = self.shape
        if self.topology == "torus":
            return np.full(self.shape, (2 * pi / nu) * (2 * pi / nv))
        _, v = self.axes()
        # Fejér's first rule integrates F(arccos x)/sin dx on the staggered
        # Chebyshev nodes x = cos v_j; F = sin(v) * smooth is spectrally exact
        wv = fejer_weights(nv) / np.sin(v)
        return np.outer(np.full(nu, 2 * pi / nu), wv)


def fejer_weights(n: int) -> np.ndarray:
    """Fejér's first rule on x_k = cos((2k+1)pi/(2n)) for integrals over [-1, 1]."""
    theta = (2 * np.arange(n) + 1) * pi / (2 * n)
    j = np.arange(1, n // 2 + 1)
    s = np.cos(2 * np.outer(theta, j)) / (4 * j**2 - 1)
    return (2.0 / n) * (1 - 2 * s.sum(axis=1))


# --------------------------------------------------------------- pole extension


def extend(field: np.ndarray, grid: GridSpec, sign: float = 1.0) -> np.ndarray:
    """Continue a sphere-grid field (leading axes = grid) to the doubled grid."""
    if grid.topology != "sphere":
        return field
    nu = grid.shape[0]
    mirrored = np.roll(field[:, ::-1], -(nu // 2), axis=0)
    return np.concatenate([field, sign * mirrored], axis=1)


def restrict(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    if grid.topology != "sphere":
        return field
    return field[:, : grid.shape[1]]


def _v_parity(idx: tuple) -> float:
    return -1.0 if sum(1 for i in idx if i == 1) % 2 else 1.0


# ---------------------------------------------------------- finite differences


def _d1(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (
        -np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis) - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)
    ) / (12 * h)


def _d2(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (
        -np.roll(f, -2, axis)
        + 16 * np.roll(f, -1, axis)
        - 30 * f
        + 16 * np.roll(f, 1, axis)
        - np.roll(f, 2, axis)
    ) / (12 * h * h)


def fd_gradient(field: np.ndarray, grid: GridSpec, sign: float = 1.0) -> np.ndarray:
    """Fourth-order centred first partials, shape ``(n, *grid.shape)``.

    ``sign`` is the pole-extension parity of ``field`` (+1 for scalars).
    """
    f = extend(field, grid, sign)
    out = [restrict(_d1(f, a, h), grid) for a, h in enumerate(grid.steps)]
    return np.stack(out)


def fd_hessian(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Fourth-order centred second partials of a scalar, shape ``(n, n, *grid.shape)``."""
    f = extend(field, grid)
    n = grid.n
    steps = grid.steps
    out = np.empty((n, n) + grid.shape)
    for a in range(n):
        out[a, a] = restrict(_d2(f, a, steps[a]), grid)
    if n == 2:
        mixed = restrict(_d1(_d1(f, 0, steps[0]), 1, steps[1]), grid)
        out[0, 1] = out[1, 0] = mixed
    return out


def fd_tensor_gradient(tensor: np.ndarray, grid: GridSpec) -> np.ndarray:
    """First partials of a covariant 2-tensor field ``(*grid, n, n)``.

    Returns ``(*grid, n, n, n)`` with ``out[..., k, i, j] = d_k T_ij``.
    """
    n = grid.n
    out = np.empty(grid.shape + (n, n, n))
    for i in range(n):
        for j in range(n):
            g = fd_gradient(tensor[..., i, j], grid, _v_parity((i, j)))
            for k in range(n):
                out[..., k, i, j] = g[k]
    return out


# -------------------------------------------------------- spectral derivatives


def _spectral(f: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    m = f.shape[axis]
    k = 2 * pi * np.fft.fftfreq(m, d=h)
    shape = [1] * f.ndim
    shape[axis] = m
    k = k.reshape(shape)
    F = np.fft.fft(f, axis=axis)
    if order == 1:
        mult = 1j * k
        if m % 2 == 0:
            nyq = [slice(None)] * f.ndim
            nyq[axis] = m // 2
            mult = mult.copy()
            mult[tuple(nyq)] = 0.0
    else:
        mult = -(k**2)
    return np.real(np.fft.ifft(F * mult, axis=axis))


def spectral_derivatives(field: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Spectral first and second partials of a smooth scalar sampled on ``grid``.

    Returns ``(d, dd)`` with shapes ``(n, *grid)`` and ``(n, n, *grid)``.
    """
    f = extend(field, grid)
    n = grid.n
    steps = grid.steps
    d = np.stack([restrict(_spectral(f, a, steps[a], 1), grid) for a in range(n)])
    dd = np.empty((n, n) + grid.shape)
    for a in range(n):
        dd[a, a] = restrict(_spectral(f, a, steps[a], 2), grid)
    if n == 2:
        mixed = restrict(_spectral(_spectral(f, 0, steps[0], 1), 1, steps[1], 1), grid)
        dd[0, 1] = dd[1, 0] = mixed
    return d, dd


def neighbour_pairs(field: np.ndarray, grid: GridSpec):
    """Yield (field, neighbour-field) pairs along every grid direction including
    periodic wrap and pole crossings.  Grid axes lead; trailing axes ride along."""
    f = extend(field, grid)
    for a in range(grid.n):
        yield f, np.roll(f, -1, axis=a)
