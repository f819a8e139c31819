"""Binary PPM (P6, 8-bit) input and output.

The one required bit-exact image format: values map to reals by v/255 on
load and are quantized by round(v*255) after clamping on write. Loaded
images get an all-true mask.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .engine import RasterImage


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace/comment-delimited header tokens and the
    offset just past the single whitespace byte after the last one."""
    toks: list[bytes] = []
    i = 0
    n = len(data)
    while len(toks) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ValueError("truncated PPM header")
        toks.append(data[start:i])
    if i >= n or not data[i : i + 1].isspace():
        raise ValueError("missing whitespace after PPM header")
    return toks, i + 1


def read_ppm(path) -> RasterImage:
    data = Path(path).read_bytes()
    if data[:2] != b"P6":
        raise ValueError(f"{path}: not a binary P6 PPM")
    toks, offset = _tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in toks[1:])
    except ValueError:
        raise ValueError(f"{path}: malformed PPM header") from None
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    need = width * height * 3
    raw = np.frombuffer(data, dtype=np.uint8, count=need, offset=offset)
    if raw.size < need:
        raise ValueError(f"{path}: truncated pixel data")
    rgb = raw.reshape(height, width, 3).astype(np.float64) / 255.0
    return RasterImage.from_array(rgb)


def write_ppm(path, img: RasterImage) -> None:
    rgb = np.stack(img.channels(), axis=-1)
    quant = np.rint(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quant.tobytes())
