#!/usr/bin/env python3
"""Std-error ratio (uniform / table sampling) of the sun-sky sphere integral versus table size.

Example::

    python3 scripts/variance_vs_n.py --sizes 16 32 64 128 256 --supersample 1 2 4
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

import numpy as np

from envsampling.envmap import SunSky
from envsampling.estimator import variance_comparison
from envsampling.importance import build_table
from envsampling.projection import LatLon, latlon_to_direction


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple[int, ...] = (16, 32, 64, 128, 256)
    supersample: tuple[int, ...] = (1, 2, 4)
    n_samples: int = 1024
    trials: int = 100
    seed: int = 0
    sun_lat: float = 35.0
    sun_lon: float = 120.0
    sun_radius: float = 2.0
    contrast: float = 1000.0


def run(cfg: SweepConfig) -> list[dict]:
    axis = latlon_to_direction(LatLon(np.radians(cfg.sun_lat), np.radians(cfg.sun_lon)))
    sky = SunSky(axis, np.radians(cfg.sun_radius), cfg.contrast, 1.0)
    exact = sky.sphere_integral()[0]
    rows = []
    for n in cfg.sizes:
        for k in cfg.supersample:
            t0 = time.perf_counter()
            table = build_table(sky, n, supersample=k)
            build_s = time.perf_counter() - t0
            cmp = variance_comparison(sky, table, cfg.n_samples, cfg.trials, cfg.seed)
            rows.append(
                dict(
                    n=n,
                    k=k,
                    build_s=build_s,
                    ratio=float(cmp.ratio[0]),
                    mean=float(cmp.importance.mean[0]),
                    err=float(cmp.importance.std_error[0]),
                    exact=exact,
                )
            )
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=list(SweepConfig.sizes))
    p.add_argument("--supersample", type=int, nargs="+", default=list(SweepConfig.supersample))
    p.add_argument("--samples", type=int, default=SweepConfig.n_samples)
    p.add_argument("--trials", type=int, default=SweepConfig.trials)
    p.add_argument("--seed", type=int, default=SweepConfig.seed)
    a = p.parse_args()
    cfg = SweepConfig(tuple(a.sizes), tuple(a.supersample), a.samples, a.trials, a.seed)

    print(f"{'N':>5} {'K':>3} {'build s':>8} {'ratio':>8} {'estimate':>10} {'SE':>8} {'exact':>9}")
    for r in run(cfg):
        print(
            f"{r['n']:5d} {r['k']:3d} {r['build_s']:8.3f} {r['ratio']:8.2f} "
            f"{r['mean']:10.4f} {r['err']:8.4f} {r['exact']:9.4f}"
        )


if __name__ == "__main__":
    main()
