"""Environment maps: radiance ``L(d)`` over the sphere.

Three backings share one surface, :meth:`EnvMap.lookup`, which takes an
``(..., 3)`` array of unit directions and returns ``(..., 3)`` RGB radiance
in float64.

Equirectangular texture coordinates are ``s = phi / (2 pi)`` and
``t = (pi/2 - theta) / pi`` so that row 0 is the north pole (+z).

Cube faces are stored in the order +X, -X, +Y, -Y, +Z, -Z. For a direction
whose largest-magnitude component selects a face with major axis value
``ma > 0``, the in-face coordinates are ``s = (sc/ma + 1)/2`` (column) and
``t = (tc/ma + 1)/2`` (row, 0 at the top) with

====  =====  =====
face   sc     tc
====  =====  =====
 +X    -y     -z
 -X    +y     -z
 +Y    +x     -z
 -Y    -x     -z
 +Z    +y     +x
 -Z    +y     -x
====  =====  =====

so that the four side faces have +z at the top.
"""

from __future__ import annotations

import os
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable

import numpy as np

from .pfm import RasterImage, load_pfm, write_pfm
from .projection import TWO_PI, LatLon, direction_to_latlon, latlon_to_direction, normalize

CUBE_SUFFIXES = ("_px", "_nx", "_py", "_ny", "_pz", "_nz")


class EnvMap(ABC):
    @abstractmethod
    def lookup(self, d) -> np.ndarray:
        """Radiance for unit direction(s) ``d``, shape ``(..., 3)``."""

    def __call__(self, d) -> np.ndarray:
        return self.lookup(d)


def _bilinear(pixels: np.ndarray, x: np.ndarray, y: np.ndarray, wrap_x: bool) -> np.ndarray:
    """Sample ``pixels`` at continuous texel coordinates (texel centres at integers).

    Written as nested lerps so that equal neighbours reproduce their value exactly.
    """
    h, w = pixels.shape[:2]
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    if wrap_x:
        ix0, ix1 = np.mod(x0, w), np.mod(x0 + 1, w)
    else:
        ix0, ix1 = np.clip(x0, 0, w - 1), np.clip(x0 + 1, 0, w - 1)
    iy0, iy1 = np.clip(y0, 0, h - 1), np.clip(y0 + 1, 0, h - 1)

    p00 = pixels[iy0, ix0].astype(np.float64)
    p01 = pixels[iy0, ix1].astype(np.float64)
    p10 = pixels[iy1, ix0].astype(np.float64)
    p11 = pixels[iy1, ix1].astype(np.float64)
    top = p00 + fx * (p01 - p00)
    bottom = p10 + fx * (p11 - p10)
    return top + fy * (bottom - top)


def _rgb(values: np.ndarray) -> np.ndarray:
    if values.shape[-1] == 1:
        values = np.repeat(values, 3, axis=-1)
    return values


class EquirectMap(EnvMap):
    def __init__(self, image: RasterImage):
        self.image = image

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height

    def texel_coords(self, d) -> tuple[np.ndarray, np.ndarray]:
        """Continuous (x, y) texel coordinates of ``d``; texel centres are integers."""
        theta, phi = direction_to_latlon(d)
        s = phi / TWO_PI
        t = (0.5 * np.pi - theta) / np.pi
        return s * self.width - 0.5, t * self.height - 0.5

    def lookup(self, d) -> np.ndarray:
        x, y = self.texel_coords(d)
        return _rgb(_bilinear(self.image.pixels, x, y, wrap_x=True))

    def texel_directions(self) -> np.ndarray:
        """Directions through every texel centre, shape ``(height, width, 3)``."""
        return equirect_texel_directions(self.width, self.height)

    def nearest_texel(self, d) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.texel_coords(d)
        col = np.mod(np.floor(x + 0.5).astype(np.int64), self.width)
        row = np.clip(np.floor(y + 0.5).astype(np.int64), 0, self.height - 1)
        return row, col


def equirect_texel_directions(width: int, height: int) -> np.ndarray:
    phi = TWO_PI * (np.arange(width) + 0.5) / width
    theta = 0.5 * np.pi - np.pi * (np.arange(height) + 0.5) / height
    return latlon_to_direction(LatLon(theta[:, None], phi[None, :]))


def cube_face_coords(d) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Face index and in-face ``(s, t)`` in ``[0, 1]`` for direction(s) ``d``."""
    d = np.asarray(d, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    ax, ay, az = np.abs(x), np.abs(y), np.abs(z)
    use_x = (ax >= ay) & (ax >= az)
    use_y = ~use_x & (ay >= az)
    use_z = ~use_x & ~use_y

    face = np.where(use_x, np.where(x > 0, 0, 1), np.where(use_y, np.where(y > 0, 2, 3), np.where(z > 0, 4, 5)))
    ma = np.where(use_x, ax, np.where(use_y, ay, az))
    sc = np.select(
        [face == 0, face == 1, face == 2, face == 3, face == 4],
        [-y, y, x, -x, y],
        default=y,
    )
    tc = np.select(
        [face <= 3, face == 4],
        [-z, x],
        default=-x,
    )
    return face, 0.5 * (sc / ma + 1.0), 0.5 * (tc / ma + 1.0)


def cube_face_direction(face: int, s, t) -> np.ndarray:
    """Unit direction through in-face coordinates ``(s, t)`` of ``face``."""
    sc = 2.0 * np.asarray(s, dtype=np.float64) - 1.0
    tc = 2.0 * np.asarray(t, dtype=np.float64) - 1.0
    sc, tc = np.broadcast_arrays(sc, tc)
    one = np.ones_like(sc)
    vec = {
        0: (one, -sc, -tc),
        1: (-one, sc, -tc),
        2: (sc, one, -tc),
        3: (-sc, -one, -tc),
        4: (tc, sc, one),
        5: (-tc, sc, -one),
    }[int(face)]
    return normalize(np.stack(vec, axis=-1))


class CubeMap(EnvMap):
    def __init__(self, faces):
        faces = list(faces)
        if len(faces) != 6:
            raise ValueError(f"a cube map needs 6 faces, got {len(faces)}")
        size = faces[0].width
        for k, f in enumerate(faces):
            if f.width != size or f.height != size:
                raise ValueError(f"face {k} is {f.width}x{f.height}, expected {size}x{size}")
            if f.channels != faces[0].channels:
                raise ValueError("all faces must have the same channel count")
        self.faces = faces
        self.size = size
        self._stack = np.stack([f.pixels for f in faces])

    def texel_coords(self, d):
        face, s, t = cube_face_coords(d)
        return face, s * self.size - 0.5, t * self.size - 0.5

    def lookup(self, d) -> np.ndarray:
        face, x, y = self.texel_coords(d)
        out = np.empty(face.shape + (self._stack.shape[-1],), dtype=np.float64)
        for k in range(6):
            sel = face == k
            if np.any(sel):
                out[sel] = _bilinear(self._stack[k], x[sel], y[sel], wrap_x=False)
        return _rgb(out)

    def nearest_texel(self, d):
        face, x, y = self.texel_coords(d)
        col = np.clip(np.floor(x + 0.5).astype(np.int64), 0, self.size - 1)
        row = np.clip(np.floor(y + 0.5).astype(np.int64), 0, self.size - 1)
        return face, row, col


def cube_texel_directions(size: int, face: int) -> np.ndarray:
    c = (np.arange(size) + 0.5) / size
    return cube_face_direction(face, c[None, :], c[:, None])


class AnalyticMap(EnvMap):
    """Environment defined by a pure, vectorised function of direction."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray]):
        self.fn = fn

    def lookup(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        return np.broadcast_to(self.fn(d), d.shape[:-1] + (3,)).astype(np.float64)


class ConstantSky(AnalyticMap):
    def __init__(self, value):
        self.value = np.broadcast_to(np.asarray(value, dtype=np.float64), (3,)).copy()
        super().__init__(lambda d: np.broadcast_to(self.value, d.shape[:-1] + (3,)))


class SunSky(AnalyticMap):
    """Disk of angular radius ``radius`` around ``axis`` with radiance ``sun``; ``sky`` elsewhere."""

    def __init__(self, axis, radius: float, sun, sky):
        self.axis = normalize(axis)
        self.radius = float(radius)
        self.cos_radius = np.cos(self.radius)
        self.sun = np.broadcast_to(np.asarray(sun, dtype=np.float64), (3,)).copy()
        self.sky = np.broadcast_to(np.asarray(sky, dtype=np.float64), (3,)).copy()
        super().__init__(self._eval)

    def inside(self, d) -> np.ndarray:
        return np.asarray(d, dtype=np.float64) @ self.axis > self.cos_radius

    def _eval(self, d):
        return np.where(self.inside(d)[..., None], self.sun, self.sky)

    @property
    def solid_angle(self) -> float:
        return TWO_PI * (1.0 - self.cos_radius)

    def sphere_integral(self) -> np.ndarray:
        """Closed form of the integral of ``L`` over the sphere."""
        omega = self.solid_angle
        return self.sun * omega + self.sky * (4.0 * np.pi - omega)


class GradientSky(AnalyticMap):
    """Linear blend from ``nadir`` (z = -1) to ``zenith`` (z = +1)."""

    def __init__(self, zenith, nadir):
        self.zenith = np.broadcast_to(np.asarray(zenith, dtype=np.float64), (3,)).copy()
        self.nadir = np.broadcast_to(np.asarray(nadir, dtype=np.float64), (3,)).copy()
        super().__init__(self._eval)

    def _eval(self, d):
        w = 0.5 * (d[..., 2:3] + 1.0)
        return self.nadir + w * (self.zenith - self.nadir)

    def sphere_integral(self) -> np.ndarray:
        return 2.0 * np.pi * (self.zenith + self.nadir)


def rasterize_equirect(env: EnvMap, width: int, height: int) -> EquirectMap:
    if width < 1 or height < 1:
        raise ValueError("raster dimensions must be positive")
    values = env.lookup(equirect_texel_directions(width, height))
    return EquirectMap(RasterImage(values.astype(np.float32)))


def rasterize_cube(env: EnvMap, face_size: int) -> CubeMap:
    if face_size < 1:
        raise ValueError("face size must be positive")
    faces = [RasterImage(env.lookup(cube_texel_directions(face_size, k)).astype(np.float32)) for k in range(6)]
    return CubeMap(faces)


def rasterize_analytic(env: EnvMap, param: str, *, width: int = 0, height: int = 0, face_size: int = 0):
    """Evaluate ``env`` at every texel centre of an equirect or cube raster."""
    if param == "equirect":
        return rasterize_equirect(env, width, height)
    if param == "cube":
        return rasterize_cube(env, face_size)
    raise ValueError(f"unknown parameterization {param!r}")


def cube_paths(base) -> list[Path]:
    """The six face files for cube map ``base`` (a trailing ``.pfm`` is ignored)."""
    base = os.fspath(base)
    if base.endswith(".pfm"):
        base = base[:-4]
    return [Path(base + suffix + ".pfm") for suffix in CUBE_SUFFIXES]


def load_envmap(path, param: str) -> EquirectMap | CubeMap:
    if param == "equirect":
        return EquirectMap(load_pfm(path))
    if param == "cube":
        return CubeMap([load_pfm(p) for p in cube_paths(path)])
    raise ValueError(f"unknown parameterization {param!r}")


def save_envmap(env: EquirectMap | CubeMap, path) -> list[Path]:
    if isinstance(env, EquirectMap):
        write_pfm(env.image, path)
        return [Path(path)]
    paths = cube_paths(path)
    for face, p in zip(env.faces, paths):
        write_pfm(face, p)
    return paths
