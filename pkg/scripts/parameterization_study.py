#!/usr/bin/env python3
"""How far apart are tables built from equirect and cube rasters of one analytic sky?

For each random sun axis (plus the default one) the sky is rasterized both
ways, tables are built, and ``max|M_eq - M_cube|`` is reported. A smooth lobe
of the same width is run alongside for contrast.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from envsampling.envmap import AnalyticMap, SunSky, rasterize_analytic
from envsampling.importance import build_table
from envsampling.projection import LatLon, latlon_to_direction, uniform_sphere


@dataclass(frozen=True)
class StudyConfig:
    width: int = 1024
    face_size: int = 256
    n_bins: int = 64
    supersample: int = 2
    axes: int = 20
    seed: int = 0
    sun_radius: float = 2.0
    tolerance: float = 5e-3


def table_gap(sky, cfg: StudyConfig) -> float:
    eq = rasterize_analytic(sky, "equirect", width=cfg.width, height=cfg.width // 2)
    cube = rasterize_analytic(sky, "cube", face_size=cfg.face_size)
    t_eq = build_table(eq, cfg.n_bins, supersample=cfg.supersample)
    t_cube = build_table(cube, cfg.n_bins, supersample=cfg.supersample)
    return float(np.max(np.abs(t_eq.M - t_cube.M)))


def lobe(axis, radius):
    # gaussian-like lobe whose 1/e width matches the sun radius
    sharp = 1.0 / (1.0 - np.cos(radius))
    return AnalyticMap(lambda d: 1.0 + 1000.0 * np.exp(sharp * (d @ axis - 1.0))[..., None])


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--width", type=int, default=StudyConfig.width)
    p.add_argument("--face-size", type=int, default=StudyConfig.face_size)
    p.add_argument("--n-bins", type=int, default=StudyConfig.n_bins)
    p.add_argument("--supersample", type=int, default=StudyConfig.supersample)
    p.add_argument("--axes", type=int, default=StudyConfig.axes)
    p.add_argument("--seed", type=int, default=StudyConfig.seed)
    a = p.parse_args()
    cfg = StudyConfig(a.width, a.face_size, a.n_bins, a.supersample, a.axes, a.seed)

    radius = np.radians(cfg.sun_radius)
    axes = [latlon_to_direction(LatLon(np.radians(35.0), np.radians(120.0)))]
    axes += list(uniform_sphere(np.random.default_rng(cfg.seed), cfg.axes))

    print(f"equirect {cfg.width}x{cfg.width // 2}, cube 6x{cfg.face_size}^2, N={cfg.n_bins}, K={cfg.supersample}")
    print(f"{'axis':>28} {'sun gap':>10} {'lobe gap':>10}")
    sun_gaps = []
    for ax in axes:
        g_sun = table_gap(SunSky(ax, radius, 1000.0, 1.0), cfg)
        g_lobe = table_gap(lobe(ax, radius), cfg)
        sun_gaps.append(g_sun)
        print(f"{np.array2string(ax, precision=3):>28} {g_sun:10.2e} {g_lobe:10.2e}")
    sun_gaps = np.array(sun_gaps)
    print(f"sun sky below {cfg.tolerance:g}: {np.mean(sun_gaps < cfg.tolerance):.0%} of {len(sun_gaps)} axes")


if __name__ == "__main__":
    main()
