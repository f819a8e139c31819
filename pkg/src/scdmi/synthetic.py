"""Procedural test and benchmark images.

Smooth multi-blob color images stand in for photographs: Gaussian bumps with
random color vectors on a random base color, linearly rescaled into channel
range. Smoothness keeps interpolation error low under warps, and random blob
colors keep the three channels linearly independent so the quadratic color
core stays well away from degeneracy.
"""

from __future__ import annotations

import numpy as np

from .engine import RasterImage


def blob_image(
    seed: int,
    size: int = 128,
    n_blobs: int = 6,
    spread: float = 0.30,
    lo: float = 0.08,
    hi: float = 0.92,
) -> RasterImage:
    """Full-mask smooth image with blob centers within ``spread``*size of center."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2.0
    planes = np.tile(rng.uniform(0.2, 0.5, size=3)[:, None, None], (1, size, size))
    for _ in range(n_blobs):
        cx, cy = rng.uniform(-spread, spread, size=2) * size + c
        sigma = rng.uniform(0.06, 0.18) * size
        bump = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma**2))
        amp = rng.uniform(-0.5, 0.7, size=3)
        planes += amp[:, None, None] * bump[None, :, :]
    # joint linear rescale: a diagonal channel map, keeps channels independent
    pmin, pmax = float(planes.min()), float(planes.max())
    scale = (hi - lo) / max(pmax - pmin, 1e-9)
    planes = lo + (planes - pmin) * scale
    return RasterImage(planes[0], planes[1], planes[2], np.ones((size, size), dtype=bool))


def disk_masked_image(
    seed: int,
    size: int = 256,
    radius_frac: float = 0.20,
    n_blobs: int = 6,
    content_frac: float | None = None,
) -> RasterImage:
    """Blob image whose mask is a centered disk.

    A disk domain transported by a warp stays inside the frame as long as the
    transform's largest singular value times the radius fits, so feature
    deviations measure interpolation error rather than domain cropping.
    """
    if content_frac is None:
        content_frac = 0.7 * radius_frac
    img = blob_image(seed, size=size, spread=content_frac, n_blobs=n_blobs)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2.0
    mask = (xx - c) ** 2 + (yy - c) ** 2 <= (radius_frac * size) ** 2
    return RasterImage(img.red, img.green, img.blue, mask)
