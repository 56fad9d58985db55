"""Command-line front end: ``envsampling {gen,build,diag,validate,bench}``.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O or format error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import envmap as em
from .errors import BuildError, ConfigurationError, CorruptionError, DataError, FormatError
from .estimator import (
    EstimatorConfig,
    comparison_kv,
    comparison_text,
    estimate_irradiance,
    estimate_sphere_integral,
    report_kv,
    report_text,
    variance_comparison,
)
from .importance import build_table, load_table, sample, save_table, table_to_images
from .pfm import RasterImage, write_pfm
from .projection import LatLon, latlon_to_direction, make_direction
from .validation import validate_table

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

OVERLAY_SAMPLES = 5000


class UsageError(Exception):
    pass


def _floats(text: str) -> np.ndarray:
    try:
        vals = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if vals.size not in (1, 3):
        raise argparse.ArgumentTypeError("expected 1 or 3 values")
    return vals


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def make_sky(args) -> em.AnalyticMap:
    if args.kind == "constant":
        return em.ConstantSky(args.value)
    if args.kind == "sun":
        axis = latlon_to_direction(LatLon(np.radians(args.sun_lat), np.radians(args.sun_lon)))
        if not 0 < args.sun_radius < 180:
            raise UsageError("--sun-radius must be in (0, 180) degrees")
        return em.SunSky(axis, np.radians(args.sun_radius), args.sun_radiance, args.sky_radiance)
    return em.GradientSky(args.zenith, args.nadir)


def cmd_gen(args) -> int:
    sky = make_sky(args)
    for v in (getattr(sky, "value", None), getattr(sky, "sun", None), getattr(sky, "sky", None)):
        if v is not None and np.any(v < 0):
            raise UsageError("radiance values must be nonnegative")
    if args.param == "equirect":
        env = em.rasterize_analytic(sky, "equirect", width=args.width, height=args.height)
    else:
        env = em.rasterize_analytic(sky, "cube", face_size=args.face_size)
    for p in em.save_envmap(env, args.out):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_build(args) -> int:
    _require(args, "inp", "out")
    env = em.load_envmap(args.inp, args.param)
    table = build_table(env, args.n_bins, args.supersample, args.measure)
    save_table(table, args.out)
    n2 = table.n_bins
    print(f"N            {table.n}")
    print(f"I_total      {table.i_total:.9g}")
    print(f"max M        {table.M.max():.9g}  (uniform {1.0 / n2:.9g})")
    print(f"nonzero bins {table.n_positive} / {n2}")
    print(f"entropy      {table.entropy():.6f} nats  (uniform {np.log(n2):.6f})")
    print(f"wrote {args.out}")
    return EXIT_OK


def _overlay(env, directions) -> list[RasterImage]:
    """Tone-mapped ``env`` with one red texel per sample direction."""
    if env is None:
        env = em.EquirectMap(RasterImage.filled(512, 256, 0.0))
    if isinstance(env, em.EquirectMap):
        base = env.image.pixels.astype(np.float64)
        base = base / (1.0 + base)
        if base.shape[-1] == 1:
            base = np.repeat(base, 3, axis=-1)
        row, col = env.nearest_texel(directions)
        base[row, col] = (1.0, 0.0, 0.0)
        return [RasterImage(base.astype(np.float32))]
    face, row, col = env.nearest_texel(directions)
    out = []
    for k, f in enumerate(env.faces):
        base = f.pixels.astype(np.float64)
        base = base / (1.0 + base)
        if base.shape[-1] == 1:
            base = np.repeat(base, 3, axis=-1)
        sel = face == k
        base[row[sel], col[sel]] = (1.0, 0.0, 0.0)
        out.append(RasterImage(base.astype(np.float32)))
    return out


def cmd_diag(args) -> int:
    _require(args, "table", "out", "seed")
    table = load_table(args.table)
    prefix = args.out
    table_to_images(table, f"{prefix}_pdf.pfm", f"{prefix}_rank.pfm")
    print(f"wrote {prefix}_pdf.pfm")
    print(f"wrote {prefix}_rank.pfm")

    env = em.load_envmap(args.inp, args.param) if args.inp else None
    rec = sample(table, np.random.default_rng(args.seed), args.samples)
    images = _overlay(env, rec.direction)
    if len(images) == 1:
        paths = [Path(f"{prefix}_overlay.pfm")]
    else:
        paths = em.cube_paths(f"{prefix}_overlay")
    for img, p in zip(images, paths):
        write_pfm(img, p)
        print(f"wrote {p}")
    top = np.bincount(rec.bin, minlength=table.n_bins).argmax()
    print(f"{args.samples} samples, most hit bin {top} (M = {table.M[top]:.6g})")
    return EXIT_OK


def cmd_validate(args) -> int:
    _require(args, "table", "seed")
    table = load_table(args.table, check=False)
    env = em.load_envmap(args.inp, args.param) if args.inp else None
    checks = validate_table(table, args.samples, args.seed, env)
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name:14s} {detail}")
    return EXIT_OK if all(c[1] for c in checks) else EXIT_VALIDATION


def cmd_bench(args) -> int:
    _require(args, "inp", "seed")
    env = em.load_envmap(args.inp, args.param)
    table = load_table(args.table) if args.table else None
    strategies = args.strategy or ["uniform", "env"]
    cfgs = [EstimatorConfig(s, args.samples, args.trials, args.seed) for s in strategies]
    for c in cfgs:
        if c.needs_table and table is None:
            raise UsageError(f"strategy {c.strategy} needs --table")

    if args.normal is None:
        for c in cfgs:
            if c.strategy not in ("uniform", "env_importance"):
                raise UsageError(f"strategy {c.strategy} needs --normal")
        names = {c.strategy for c in cfgs}
        if names == {"uniform", "env_importance"}:
            cmp = variance_comparison(env, table, args.samples, args.trials, args.seed)
            text, kv = comparison_text(cmp), comparison_kv(cmp)
        else:
            reports = [estimate_sphere_integral(env, table, c) for c in cfgs]
            text = "".join(report_text(r) for r in reports)
            kv = "".join(report_kv(r, f"{r.config.strategy}.") for r in reports)
    else:
        if args.normal.size != 3:
            raise UsageError("--normal needs three components")
        normal = make_direction(*args.normal)
        reports = [estimate_irradiance(env, table, normal, c) for c in cfgs]
        text = "".join(report_text(r) for r in reports)
        kv = "".join(report_kv(r, f"{r.config.strategy}.") for r in reports)

    sys.stdout.write(text)
    if args.out:
        Path(f"{args.out}.txt").write_text(text)
        Path(f"{args.out}.kv").write_text(kv)
        print(f"wrote {args.out}.txt")
        print(f"wrote {args.out}.kv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="envsampling", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_env(p, required=False):
        p.add_argument("--in", dest="inp", required=required, help="environment PFM (cube: path prefix)")
        p.add_argument("--param", choices=["equirect", "cube"], default="equirect")

    g = sub.add_parser("gen", help="rasterize an analytic sky to PFM")
    g.add_argument("kind", choices=["constant", "sun", "gradient"])
    g.add_argument("--param", choices=["equirect", "cube"], default="equirect")
    g.add_argument("--out", required=True)
    g.add_argument("--width", type=int, default=512)
    g.add_argument("--height", type=int, default=256)
    g.add_argument("--face-size", type=int, default=128)
    g.add_argument("--value", type=_floats, default=np.array([1.0]))
    g.add_argument("--sun-lat", type=float, default=35.0, help="degrees")
    g.add_argument("--sun-lon", type=float, default=120.0, help="degrees")
    g.add_argument("--sun-radius", type=float, default=2.0, help="angular radius, degrees")
    g.add_argument("--sun-radiance", type=_floats, default=np.array([1000.0]))
    g.add_argument("--sky-radiance", type=_floats, default=np.array([1.0]))
    g.add_argument("--zenith", type=_floats, default=np.array([1.0]))
    g.add_argument("--nadir", type=_floats, default=np.array([0.1]))
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build and save an importance table")
    add_env(b)
    b.add_argument("--out")
    b.add_argument("--n-bins", type=int, default=256)
    b.add_argument("--supersample", type=int, default=1)
    b.add_argument("--measure", choices=["sum", "luminance"], default="sum")
    b.set_defaults(func=cmd_build)

    d = sub.add_parser("diag", help="write pdf, rank and sample-overlay images")
    d.add_argument("--table")
    d.add_argument("--out", help="output prefix")
    add_env(d)
    d.add_argument("--samples", type=int, default=OVERLAY_SAMPLES)
    d.add_argument("--seed", type=int)
    d.set_defaults(func=cmd_diag)

    v = sub.add_parser("validate", help="check table invariants and sampling statistics")
    v.add_argument("--table")
    add_env(v)
    v.add_argument("--samples", type=int, default=1_000_000)
    v.add_argument("--seed", type=int)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("bench", help="estimator variance benchmark")
    add_env(r)
    r.add_argument("--table")
    r.add_argument("--strategy", action="append", choices=["uniform", "env", "cosine", "mis"])
    r.add_argument("--samples", type=int, default=1024)
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--seed", type=int)
    r.add_argument("--normal", type=_floats, help="x,y,z; switches to irradiance")
    r.add_argument("--out", help="report prefix (.txt and .kv)")
    r.set_defaults(func=cmd_bench)
    return parser


def _positive(args):
    for name in ("n_bins", "supersample", "samples", "trials", "width", "height", "face_size"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _positive(args)
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"envsampling {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, DataError, CorruptionError, BuildError, OSError) as exc:
        print(f"envsampling {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
