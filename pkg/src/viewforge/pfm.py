"""Portable float map I/O for depth (1 channel) and normal (3 channel) rasters.

Header: tag line ("Pf" grayscale, "PF" color), dimensions line "width height",
scale line whose sign encodes endianness (negative = little-endian). Rows are
stored bottom-to-top and flipped on load; writes are little-endian float32
with scale -1.0.
"""
from __future__ import annotations

import numpy as np


def read_pfm(path) -> np.ndarray:
    """Load a PFM file as float64, shape (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise ValueError(f"not a PFM file (tag {tag!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ValueError("malformed PFM dimensions line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        if scale == 0:
            raise ValueError("PFM scale must be non-zero")
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        data = np.frombuffer(f.read(count * 4), dtype=dtype)
        if data.size != count:
            raise ValueError("truncated PFM payload")
    shape = (height, width, channels) if channels == 3 else (height, width)
    values = data.reshape(shape).astype(np.float64)
    return np.flipud(values).copy()


def write_pfm(path, values: np.ndarray) -> None:
    """Write a (H, W) or (H, W, 3) array as little-endian PFM."""
    values = np.asarray(values)
    if values.ndim == 2:
        tag = b"Pf"
    elif values.ndim == 3 and values.shape[2] == 3:
        tag = b"PF"
    else:
        raise ValueError(f"unsupported PFM shape {values.shape}")
    height, width = values.shape[:2]
    with open(path, "wb") as f:
        f.write(tag + b"\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(values).astype("<f4").tobytes())
