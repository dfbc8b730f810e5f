"""Binary PGM (P5) reading and writing.

Pixels travel as floats in [0, 1]; files hold 8-bit values quantized by
round(p * 255), row-major, maxval 255.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DimensionError


def quantize(pixels: np.ndarray) -> np.ndarray:
    """[0,1] floats -> uint8 via round(p * 255)."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.min() < -1e-9 or arr.max() > 1 + 1e-9:
        raise DimensionError("pixels must lie in [0, 1] before quantization")
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def dequantize(raw: np.ndarray) -> np.ndarray:
    return np.asarray(raw, dtype=np.float64) / 255.0


def write_pgm(path: str | Path, pixels: np.ndarray) -> None:
    arr = np.asarray(pixels)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise DimensionError(f"expected 2-D grayscale image, got shape {arr.shape}")
    raw = arr if arr.dtype == np.uint8 else quantize(arr)
    h, w = raw.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(raw.tobytes(order="C"))


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM into floats in [0, 1]."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise DimensionError(f"{path}: not a binary PGM (P5) file")
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # with optional '#' comment lines
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = int(tokens[0]), int(tokens[1]), int(tokens[2])
    if maxval != 255:
        raise DimensionError(f"{path}: unsupported maxval {maxval}")
    raw = np.frombuffer(data, dtype=np.uint8, count=h * w, offset=pos)
    return raw.reshape(h, w).astype(np.float64) / 255.0
