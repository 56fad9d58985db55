"""Portable float map (PFM) reader and writer.

Colour files start with ``PF``, greyscale with ``Pf``; then ``width height``
and a scale whose sign gives the byte order (negative: little-endian).
Rows are stored bottom-to-top. In memory we keep them top-to-bottom.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError


@dataclass(frozen=True)
class RasterImage:
    """Row-major float32 pixels, shape ``(height, width, channels)``, row 0 at the top."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[0] < 1 or px.shape[1] < 1 or px.shape[2] not in (1, 3):
            raise ValueError(f"pixels must have shape (h, w, 3) or (h, w, 1), got {px.shape}")
        px = np.ascontiguousarray(px, dtype=np.float32)
        if not np.all(np.isfinite(px)):
            raise DataError("image contains non-finite pixels")
        if np.any(px < 0):
            raise DataError("image contains negative pixels")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def filled(cls, width: int, height: int, value) -> "RasterImage":
        value = np.broadcast_to(np.asarray(value, dtype=np.float32), (3,))
        return cls(np.broadcast_to(value, (height, width, 3)).copy())


def _read_header_line(f) -> str:
    line = f.readline()
    if not line.endswith(b"\n"):
        raise FormatError("truncated PFM header")
    try:
        return line.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise FormatError("PFM header is not ASCII") from exc


def load_pfm(path) -> RasterImage:
    with open(path, "rb") as f:
        ident = _read_header_line(f)
        if ident == "PF":
            channels = 3
        elif ident == "Pf":
            channels = 1
        else:
            raise FormatError(f"not a PFM file: identifier {ident!r}")

        dims = _read_header_line(f).split()
        if len(dims) == 1:
            dims += _read_header_line(f).split()
        if len(dims) != 2:
            raise FormatError(f"bad PFM dimensions line: {dims!r}")
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(_read_header_line(f))
        except ValueError as exc:
            raise FormatError(f"bad PFM header: {exc}") from exc
        if width < 1 or height < 1:
            raise FormatError(f"bad PFM dimensions {width}x{height}")
        if scale == 0.0 or not np.isfinite(scale):
            raise FormatError(f"bad PFM scale {scale}")

        dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
        count = width * height * channels
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise FormatError(f"truncated PFM data: expected {count * 4} bytes, got {len(raw)}")

    data = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    data = data.reshape(height, width, channels)[::-1]
    bad = ~np.isfinite(data)
    if bad.any():
        row, col, ch = np.argwhere(bad)[0]
        raise DataError(
            f"non-finite value in {os.fspath(path)} at pixel index {row * width + col} "
            f"(row {row}, column {col}, channel {ch})"
        )
    data = np.where(data < 0, np.float32(0.0), data)
    return RasterImage(data)


def write_pfm(image: RasterImage, path) -> None:
    """Write a little-endian PFM (scale ``-1.0``); exact inverse of :func:`load_pfm`."""
    ident = "PF" if image.channels == 3 else "Pf"
    header = f"{ident}\n{image.width} {image.height}\n-1.0\n".encode("ascii")
    body = np.ascontiguousarray(image.pixels[::-1], dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(body)
