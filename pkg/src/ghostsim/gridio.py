"""File formats for grids and images.

Binary grid format: one line of JSON (UTF-8, newline terminated) with at
least {"shape", "spacing", "complex"}, followed by the raw samples as
little-endian 64-bit floats in row-major order. Complex grids store
interleaved (re, im) pairs and set the "complex" flag. Reads and writes
round-trip bit exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError


def write_grid(path, array, spacing, meta=None):
    """Write an array in the one-line-JSON-header binary format."""
    arr = np.ascontiguousarray(array)
    is_complex = np.iscomplexobj(arr)
    arr = arr.astype("<c16" if is_complex else "<f8", copy=False)
    spacing = [float(s) for s in np.atleast_1d(spacing)]
    header = {
        "shape": list(arr.shape),
        "spacing": spacing,
        "complex": is_complex,
    }
    if meta:
        header.update(meta)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(arr.tobytes())


def read_grid(path):
    """Read a grid file; returns (array, header_dict)."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: bad grid header: {exc}") from exc
        raw = fh.read()
    shape = tuple(int(n) for n in header["shape"])
    dtype = "<c16" if header.get("complex") else "<f8"
    expect = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(raw) != expect:
        raise ConfigError(
            f"{path}: payload is {len(raw)} bytes, header implies {expect}"
        )
    arr = np.frombuffer(raw, dtype=dtype).reshape(shape)
    return arr.copy(), header


def write_image_csv(path, points, values):
    """Write scan samples as CSV with columns rho1_x, rho1_y, C."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] == 1:
        pts = np.hstack([pts, np.zeros_like(pts)])
    vals = np.asarray(values, dtype=float).ravel()
    if pts.shape[0] != vals.size:
        raise ConfigError("points/values length mismatch in CSV export")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rho1_x,rho1_y,C\n")
        for (x, y), c in zip(pts, vals):
            fh.write(f"{float(x)!r},{float(y)!r},{float(c)!r}\n")


def write_pgm(path, image, lo, hi):
    """Write a 2-D array as binary PGM, mapping [lo, hi] onto 0..255."""
    img = np.asarray(image, dtype=float)
    if img.ndim == 1:
        img = img[None, :]
    if img.ndim != 2:
        raise ConfigError("PGM export needs a 1-D or 2-D real array")
    if hi <= lo:
        hi = lo + 1.0
    scaled = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    data = np.round(255.0 * scaled).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
