"""Uniform sampling in spherical and axis-aligned ellipsoidal layers.

A point is drawn as ``center + r * u`` where ``u`` is an isotropic unit
direction (a normalized standard Gaussian vector) and ``r`` follows the
power law of a uniform volume, ``P(r <= t) = (t^d - a0^d) / (a1^d - a0^d)``.

The ellipsoidal layers are the contours of the weighted-sum cost
``||e - x||^2 + lam * ||e - x||^2_{unknown}``. Scaling the unknown axes of a
spherical layer by ``1 / sqrt(1 + lam)`` maps the sphere of radius
``sqrt(nu)`` onto the contour ``cost = nu``, and a linear map preserves
volume uniformity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Instance, KnowledgeSet, as_vector

RNG_ALGORITHM = "PCG64"

RandomSource = Union[int, np.random.Generator]


def make_rng(seed: RandomSource) -> np.random.Generator:
    """A PCG64 generator; an existing Generator is passed through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed)))


def unit_layer_offsets(d: int, a0: float, a1: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, d)`` offsets uniform in the origin-centred shell ``a0 <= r <= a1``."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if n < 1:
        raise ValueError("need at least one sample")
    if not (0 <= a0 < a1) or not np.isfinite(a1):
        raise ValueError(f"need 0 <= a0 < a1 < inf, got a0={a0}, a1={a1}")
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    # a zero Gaussian draw has probability zero, but guard the division anyway
    norms[norms == 0] = 1.0
    u = rng.random(n)
    # radius written relative to a1 so large d cannot overflow a1**d
    q = (a0 / a1) ** d
    r = a1 * (q + (1.0 - q) * u) ** (1.0 / d)
    np.clip(r, a0, a1, out=r)
    return g * (r / norms)[:, None]


def sample_sphere_layer(center, a0: float, a1: float, n: int, rng: RandomSource) -> np.ndarray:
    """n points uniform in the spherical layer of radii [a0, a1] around center."""
    c = as_vector(center)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("center must be a non-empty vector")
    return c + unit_layer_offsets(c.size, a0, a1, n, make_rng(rng))


@dataclass(frozen=True)
class LayerSpec:
    """Region ``nu_lo <= cost(e) <= nu_hi`` of the weighted-sum cost around center."""

    center: Instance
    nu_lo: float
    nu_hi: float
    lam: float
    knowledge: KnowledgeSet

    def __post_init__(self) -> None:
        if not isinstance(self.center, Instance):
            object.__setattr__(self, "center", Instance(self.center))
        if not (0 <= self.nu_lo < self.nu_hi) or not np.isfinite(self.nu_hi):
            raise ValueError(f"need 0 <= nu_lo < nu_hi < inf, got [{self.nu_lo}, {self.nu_hi}]")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be finite and >= 0")
        if self.knowledge.dimension != self.center.d:
            raise ValueError("knowledge dimension does not match the center")

    def axis_scale(self) -> np.ndarray:
        """Per-feature factor mapping the unit-cost sphere onto the cost ellipsoid."""
        s = np.ones(self.center.d)
        s[~self.knowledge.mask()] = 1.0 / np.sqrt(1.0 + self.lam)
        return s

    def semi_axes(self, nu: float) -> np.ndarray:
        return np.sqrt(nu) * self.axis_scale()


def sample_ellipsoid_layer(layer: LayerSpec, n: int, rng: RandomSource) -> np.ndarray:
    """n points uniform in the ellipsoidal layer; returns an ``(n, d)`` array."""
    y = unit_layer_offsets(layer.center.d, np.sqrt(layer.nu_lo), np.sqrt(layer.nu_hi), n, make_rng(rng))
    return layer.center.values + y * layer.axis_scale()


def transformed_radius(layer: LayerSpec, points: np.ndarray) -> np.ndarray:
    """Radius of points after undoing the axis scaling, i.e. sqrt(cost)."""
    y = (np.asarray(points) - layer.center.values) / layer.axis_scale()
    return np.linalg.norm(y, axis=-1)


def radial_cdf(r, a0: float, a1: float, d: int):
    """CDF of the radius of a uniform point in a d-dimensional shell."""
    r = np.clip(np.asarray(r, dtype=float), a0, a1)
    q = (a0 / a1) ** d
    return ((r / a1) ** d - q) / (1.0 - q)
