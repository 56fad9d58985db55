"""Importance tables on the equal-area square and the pdf / sampling built on them.

A table holds, for an ``N x N`` grid over the square,

* ``M``   normalised importance per bin (bin ``(i, j)`` at flat index ``i*N + j``,
  ``i`` along ``u``, ``j`` along ``v``),
* ``Ms``  bin indices sorted by descending ``M`` (ties by ascending index),
* ``Mcs`` running sum of ``M[Ms]``.

Every bin covers the same solid angle ``4 pi / N^2`` because the projection is
equal-area, which is what makes ``pdf = M / s`` and uniform in-bin jitter valid.

Table cache layout (little-endian)::

    4 bytes   magic b"EIMT"
    u32       version (1)
    u32       N
    f64[N*N]  M
    u32[N*N]  Ms
    f64[N*N]  Mcs
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import BuildError, CorruptionError, FormatError
from .pfm import RasterImage, write_pfm
from .projection import SquarePoint, direction_to_square, square_to_direction

MAGIC = b"EIMT"
VERSION = 1
LUMINANCE_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

# direction evaluations per chunk while building
_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class ImportanceTable:
    n: int
    M: np.ndarray
    Ms: np.ndarray
    Mcs: np.ndarray
    i_total: float | None = None
    n_positive: int = field(init=False)

    def __post_init__(self):
        for name in ("M", "Ms", "Mcs"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n_positive", int(np.count_nonzero(self.M > 0)))

    @property
    def n_bins(self) -> int:
        return self.n * self.n

    @property
    def bin_solid_angle(self) -> float:
        return 4.0 * np.pi / self.n_bins

    s = bin_solid_angle

    def bin_pdf(self, bins) -> np.ndarray:
        """Density per steradian for flat bin indices."""
        return self.M[bins] / self.bin_solid_angle

    def bin_of(self, p: SquarePoint) -> np.ndarray:
        i = np.minimum(np.floor(self.n * np.asarray(p.u)).astype(np.int64), self.n - 1)
        j = np.minimum(np.floor(self.n * np.asarray(p.v)).astype(np.int64), self.n - 1)
        return i * self.n + j

    def entropy(self) -> float:
        """Shannon entropy of ``M`` in nats; ``log(N^2)`` for a uniform table."""
        m = self.M[self.M > 0]
        return float(-np.sum(m * np.log(m)))

    def check(self) -> list[str]:
        """Return a description of every violated invariant (empty when valid)."""
        problems = []
        n2 = self.n_bins
        M, Ms, Mcs = self.M, self.Ms, self.Mcs
        if M.shape != (n2,) or Ms.shape != (n2,) or Mcs.shape != (n2,):
            return [f"array shapes {M.shape}, {Ms.shape}, {Mcs.shape} do not match N^2 = {n2}"]
        if not np.all(np.isfinite(M)) or np.any(M < 0):
            problems.append("M has negative or non-finite entries")
        total = float(np.sum(M))
        if not abs(total - 1.0) <= 1e-9:
            problems.append(f"sum of M is {total!r}, expected 1")
        if not np.array_equal(np.sort(Ms), np.arange(n2)):
            problems.append("Ms is not a permutation of 0..N^2-1")
            return problems
        sorted_m = M[Ms]
        if np.any(np.diff(sorted_m) > 0):
            problems.append("M[Ms] is not non-increasing")
        if np.any(np.diff(Mcs) < 0):
            problems.append("Mcs is decreasing somewhere")
        if not abs(Mcs[-1] - 1.0) <= 1e-9:
            problems.append(f"last Mcs entry is {Mcs[-1]!r}, expected 1")
        if not abs(Mcs[0] - M.max()) <= 1e-12:
            problems.append("Mcs[0] differs from max M")
        if np.any(np.abs(np.diff(Mcs) - sorted_m[1:]) > 1e-12):
            problems.append("Mcs increments differ from M[Ms]")
        return problems


def importance_of(radiance: np.ndarray, measure: str = "sum") -> np.ndarray:
    if measure == "sum":
        return radiance.sum(axis=-1)
    if measure == "luminance":
        return radiance @ LUMINANCE_WEIGHTS
    raise ValueError(f"unknown importance measure {measure!r}")


def _raw_importance(env, n: int, supersample: int, measure: str) -> np.ndarray:
    k = supersample
    offsets = (np.arange(k) + 0.5) / k
    raw = np.zeros(n * n)
    # one pass per sub-sample position keeps memory at O(N^2)
    centres = np.arange(n, dtype=np.float64)
    for a in offsets:
        u = (centres + a) / n
        for b in offsets:
            v = (centres + b) / n
            uu, vv = np.meshgrid(u, v, indexing="ij")
            uu, vv = uu.ravel(), vv.ravel()
            for start in range(0, n * n, _CHUNK):
                sl = slice(start, start + _CHUNK)
                d = square_to_direction(SquarePoint(uu[sl], vv[sl]))
                raw[sl] += importance_of(env.lookup(d), measure)
    return raw / (k * k)


def table_from_importance(raw: np.ndarray, n: int) -> ImportanceTable:
    """Normalise raw per-bin importances (flat, ``i*N + j``) into a table."""
    raw = np.asarray(raw, dtype=np.float64).reshape(-1)
    if raw.size != n * n:
        raise ValueError(f"expected {n * n} importances, got {raw.size}")
    if not np.all(np.isfinite(raw)) or np.any(raw < 0):
        raise BuildError("importances must be finite and nonnegative")
    i_total = float(np.sum(raw))
    if i_total <= 0.0:
        raise BuildError("zero total importance")
    M = raw / i_total
    Ms = np.argsort(-M, kind="stable").astype(np.uint32)
    Mcs = np.cumsum(M[Ms])
    return ImportanceTable(n, M, Ms, Mcs, i_total)


def build_table(env, n: int, supersample: int = 1, measure: str = "sum") -> ImportanceTable:
    """Build an ``n x n`` importance table for ``env``.

    Each bin's importance is the channel sum (or luminance) of ``env`` at the
    bin centre, or the mean over a ``supersample x supersample`` stratified grid
    of points inside the bin.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if supersample < 1:
        raise ValueError("supersample must be >= 1")
    return table_from_importance(_raw_importance(env, n, supersample, measure), n)


def pdf(table: ImportanceTable, d) -> np.ndarray:
    """Solid-angle density of the table's sampling distribution at direction(s) ``d``."""
    return table.bin_pdf(table.bin_of(direction_to_square(d)))


class SampleRecord(NamedTuple):
    direction: np.ndarray
    pdf: np.ndarray
    # the jittered square point and its bin, kept for diagnostics
    square: SquarePoint
    bin: np.ndarray


def select_bins(table: ImportanceTable, r) -> np.ndarray:
    """Bins for uniform variates ``r``: ``Ms[k]`` for the smallest ``k`` with ``r < Mcs[k]``."""
    k = np.searchsorted(table.Mcs, r, side="right")
    # Mcs[-1] may round to just below 1; the last positive bin absorbs that sliver
    k = np.minimum(k, table.n_positive - 1)
    return table.Ms[k].astype(np.int64)


def sample(table: ImportanceTable, rng: np.random.Generator, n: int | None = None) -> SampleRecord:
    """Draw direction(s) distributed with density :func:`pdf`.

    Returns scalar-shaped fields when ``n`` is None, otherwise arrays of length ``n``.
    """
    shape = () if n is None else (n,)
    r = rng.random(shape)
    bins = select_bins(table, r)
    s0 = rng.random(shape)
    s1 = rng.random(shape)
    i, j = np.divmod(bins, table.n)
    uv = SquarePoint((i + s0) / table.n, (j + s1) / table.n)
    return SampleRecord(square_to_direction(uv), table.bin_pdf(bins), uv, bins)


def save_table(table: ImportanceTable, path) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, table.n))
        f.write(np.asarray(table.M, dtype="<f8").tobytes())
        f.write(np.asarray(table.Ms, dtype="<u4").tobytes())
        f.write(np.asarray(table.Mcs, dtype="<f8").tobytes())


def load_table(path, check: bool = True) -> ImportanceTable:
    """Read a table written by :func:`save_table`.

    Raises :class:`FormatError` for layout problems and, when ``check`` is set,
    :class:`CorruptionError` if the loaded arrays violate the table invariants.
    """
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError(f"truncated table file: {len(data)} bytes")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, n = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported table version {version}, this reader handles version {VERSION}")
    if n < 1:
        raise FormatError("table has N = 0")
    n2 = n * n
    expected = 12 + n2 * (8 + 4 + 8)
    if len(data) != expected:
        raise FormatError(f"table file is {len(data)} bytes, expected {expected} for N = {n}")
    off = 12
    M = np.frombuffer(data, dtype="<f8", count=n2, offset=off).astype(np.float64)
    off += 8 * n2
    Ms = np.frombuffer(data, dtype="<u4", count=n2, offset=off).astype(np.uint32)
    off += 4 * n2
    Mcs = np.frombuffer(data, dtype="<f8", count=n2, offset=off).astype(np.float64)
    if not np.all(Ms < n2):
        raise CorruptionError("Ms holds out-of-range bin indices")
    table = ImportanceTable(n, M, Ms, Mcs)
    if check:
        problems = table.check()
        if problems:
            raise CorruptionError("; ".join(problems))
    return table


def table_images(table: ImportanceTable) -> tuple[RasterImage, RasterImage]:
    """Greyscale diagnostic images of ``M`` and of the sort rank.

    Pixel ``(row j, column i)`` shows bin ``(i, j)``. The rank image is 1 for
    the most important bin and falls linearly to 0 for the least important.
    """
    n = table.n
    pdf_img = table.M.reshape(n, n).T
    rank = np.empty(table.n_bins)
    rank[table.Ms] = np.arange(table.n_bins)
    rank = 1.0 - rank / max(table.n_bins - 1, 1)
    return RasterImage(pdf_img.astype(np.float32)), RasterImage(rank.reshape(n, n).T.astype(np.float32))


def table_to_images(table: ImportanceTable, pdf_path, rank_path) -> tuple[RasterImage, RasterImage]:
    pdf_img, rank_img = table_images(table)
    write_pfm(pdf_img, pdf_path)
    write_pfm(rank_img, rank_path)
    return pdf_img, rank_img
