"""Preset embeddings used by the tests, the CLI and the examples."""
from __future__ import annotations

from math import cos, sin, sqrt, tan, tanh

from .geometry import Euclidean, SpaceForm, build_surface
from .grid import GridSpec


def _f(x: float) -> str:
    return repr(float(x))


def sphere_embedding(a: float = 1.0, center=(0.0, 0.0, 0.0)) -> list[str]:
    cx, cy, cz = (_f(c) for c in center)
    a = _f(a)
    return [f"{cx} + {a}*cos(u)*sin(v)", f"{cy} + {a}*sin(u)*sin(v)", f"{cz} + {a}*cos(v)"]


def ellipsoid_embedding(a: float, b: float, c: float) -> list[str]:
    return [f"{_f(a)}*cos(u)*sin(v)", f"{_f(b)}*sin(u)*sin(v)", f"{_f(c)}*cos(v)"]


def torus_embedding(R: float, a: float) -> list[str]:
    R, a = _f(R), _f(a)
    return [f"({R} + {a}*cos(v))*cos(u)", f"({R} + {a}*cos(v))*sin(u)", f"{a}*sin(v)"]


def circle_embedding(a: float = 1.0) -> list[str]:
    return [f"{_f(a)}*cos(u)", f"{_f(a)}*sin(u)"]


def geodesic_sphere_s3_embedding(rho: float, c: float = 1.0) -> list[str]:
    """Geodesic sphere of radius ``rho`` about the pole (0, 0, 0, 1/sqrt(c)) of
    the sphere of radius 1/sqrt(c) in R^4."""
    k = sqrt(c)
    s = _f(sin(k * rho) / k)
    co = _f(cos(k * rho) / k)
    return [f"{s}*cos(u)*sin(v)", f"{s}*sin(u)*sin(v)", f"{s}*cos(v)", f"{co} + 0*u"]


def geodesic_sphere_ball_radius(rho: float, c: float) -> float:
    """Euclidean radius in the ball model of the geodesic sphere of radius rho."""
    if c < 0:
        k = sqrt(-c)
        return tanh(k * rho / 2) / k
    if c > 0:
        k = sqrt(c)
        return tan(k * rho / 2) / k
    return rho


def sphere(a: float = 1.0, shape=(64, 32), center=(0.0, 0.0, 0.0), ambient=None):
    ambient = ambient or Euclidean(3)
    return build_surface(ambient, sphere_embedding(a, center), GridSpec(shape, "sphere"), f"sphere(a={a})")


def ellipsoid(a: float, b: float, c: float, shape=(64, 32), ambient=None):
    ambient = ambient or Euclidean(3)
    return build_surface(ambient, ellipsoid_embedding(a, b, c), GridSpec(shape, "sphere"), "ellipsoid")


def torus(R: float = 2.0, a: float = 1.0, shape=(64, 64), ambient=None):
    ambient = ambient or Euclidean(3)
    return build_surface(ambient, torus_embedding(R, a), GridSpec(shape, "torus"), f"torus(R={R}, a={a})")


def circle(a: float = 1.0, N: int = 64, ambient=None):
    ambient = ambient or Euclidean(2)
    return build_surface(ambient, circle_embedding(a), GridSpec((N,), "curve"), f"circle(a={a})")


def geodesic_sphere(rho: float, c: float, shape=(64, 32)):
    """Geodesic sphere in the space form of curvature c (standard chart)."""
    ambient = SpaceForm(3, c)
    if c > 0:
        emb = geodesic_sphere_s3_embedding(rho, c)
    else:
        emb = sphere_embedding(geodesic_sphere_ball_radius(rho, c))
    return build_surface(ambient, emb, GridSpec(shape, "sphere"), f"geodesic_sphere(rho={rho}, c={c})"), ambient
