"""Equal-area mapping between the unit sphere and the unit square.

The sphere is first sent to the unit disk with the Lambert azimuthal
equal-area projection centred on the north pole, then the disk is sent to
the square with Shirley's concentric map. Both steps preserve area, so a
uniform point in ``[0, 1]^2`` is a uniform direction on the sphere.

Conventions used by every module of this package:

* directions are ``(..., 3)`` float64 arrays, ``z`` is up;
* ``theta`` is latitude in ``[-pi/2, pi/2]`` (measured from the equator);
* ``phi`` is longitude, canonical range ``[0, 2*pi)``.

All functions are vectorised and accept scalars or arrays.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi
QUARTER_PI = 0.25 * np.pi


class LatLon(NamedTuple):
    theta: np.ndarray
    phi: np.ndarray


class DiskPoint(NamedTuple):
    r: np.ndarray
    alpha: np.ndarray


class SquarePoint(NamedTuple):
    u: np.ndarray
    v: np.ndarray


def normalize(v) -> np.ndarray:
    """Return ``v`` scaled to unit length along the last axis."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


def make_direction(x, y, z) -> np.ndarray:
    return normalize(np.stack(np.broadcast_arrays(x, y, z), axis=-1))


def canonical_phi(phi) -> np.ndarray:
    """Reduce longitudes to ``[0, 2*pi)``."""
    phi = np.mod(phi, TWO_PI)
    # np.mod of a tiny negative number rounds up to exactly 2*pi
    return np.where(phi >= TWO_PI, 0.0, phi)


def latlon_to_direction(a: LatLon) -> np.ndarray:
    theta = np.asarray(a.theta, dtype=np.float64)
    phi = np.asarray(a.phi, dtype=np.float64)
    ct = np.cos(theta)
    return np.stack(np.broadcast_arrays(ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)), axis=-1)


def direction_to_latlon(d) -> LatLon:
    d = np.asarray(d, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    rho = np.hypot(x, y)
    theta = np.arctan2(z, rho)
    phi = np.where(rho == 0.0, 0.0, canonical_phi(np.arctan2(y, x)))
    return LatLon(theta, phi)


def latlon_to_disk(a: LatLon) -> DiskPoint:
    """Lambert azimuthal equal-area projection onto the unit disk."""
    theta = np.asarray(a.theta, dtype=np.float64)
    phi = np.asarray(a.phi, dtype=np.float64)
    r = np.sin(0.5 * (0.5 * np.pi - theta))
    return DiskPoint(r, canonical_phi(phi) - 0.5 * np.pi)


def disk_to_square(p: DiskPoint) -> SquarePoint:
    """Concentric disk-to-square map; ``alpha`` may be any angle in ``[-pi/2, 3*pi/2)``."""
    r = np.asarray(p.r, dtype=np.float64)
    alpha = np.asarray(p.alpha, dtype=np.float64)
    a = np.where(alpha >= -QUARTER_PI, alpha, alpha + TWO_PI)
    k = r / QUARTER_PI

    b1 = a < QUARTER_PI
    b2 = ~b1 & (a < 3.0 * QUARTER_PI)
    b3 = ~b1 & ~b2 & (a < 5.0 * QUARTER_PI)

    up = np.where(b1, r, np.where(b2, -(a - 0.5 * np.pi) * k, np.where(b3, -r, (a - 1.5 * np.pi) * k)))
    vp = np.where(b1, a * k, np.where(b2, r, np.where(b3, -(a - np.pi) * k, -r)))
    return SquarePoint(0.5 * (up + 1.0), 0.5 * (vp + 1.0))


def square_to_disk(p: SquarePoint) -> DiskPoint:
    """Inverse concentric map with the radius kept nonnegative."""
    up = 2.0 * np.asarray(p.u, dtype=np.float64) - 1.0
    vp = 2.0 * np.asarray(p.v, dtype=np.float64) - 1.0
    horizontal = up * up > vp * vp
    centre = (up == 0.0) & (vp == 0.0)

    safe_u = np.where(horizontal, up, 1.0)
    safe_v = np.where(horizontal | centre, 1.0, vp)
    r = np.where(horizontal, up, vp)
    alpha = np.where(
        horizontal,
        QUARTER_PI * (vp / safe_u),
        0.5 * np.pi - QUARTER_PI * (up / safe_v),
    )
    negative = r < 0.0
    r = np.where(negative, -r, r)
    alpha = np.where(negative, alpha + np.pi, alpha)
    r = np.where(centre, 0.0, r)
    alpha = np.where(centre, 0.0, alpha)
    # |u'|, |v'| <= 1 bounds r mathematically; clip away rounding
    return DiskPoint(np.minimum(r, 1.0), alpha)


def disk_to_latlon(p: DiskPoint) -> LatLon:
    r = np.asarray(p.r, dtype=np.float64)
    theta = 0.5 * np.pi - 2.0 * np.arcsin(r)
    return LatLon(theta, canonical_phi(np.asarray(p.alpha) + 0.5 * np.pi))


def sphere_to_square(a: LatLon) -> SquarePoint:
    """Forward equal-area map ``(theta, phi) -> (u, v)``; the north pole lands on (0.5, 0.5)."""
    u, v = disk_to_square(latlon_to_disk(a))
    return SquarePoint(np.clip(u, 0.0, 1.0), np.clip(v, 0.0, 1.0))


def square_to_sphere(p: SquarePoint) -> LatLon:
    return disk_to_latlon(square_to_disk(p))


def direction_to_square(d) -> SquarePoint:
    return sphere_to_square(direction_to_latlon(d))


def square_to_direction(p: SquarePoint) -> np.ndarray:
    return latlon_to_direction(square_to_sphere(p))


def angle_between(a, b) -> np.ndarray:
    """Great-circle angle between unit vectors, accurate for tiny angles."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


def uniform_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` directions uniformly distributed on the sphere."""
    z = 1.0 - 2.0 * rng.random(n)
    phi = TWO_PI * rng.random(n)
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
