"""Coordinate and channel transforms plus invariance measurement.

Coordinate warps use inverse mapping with bilinear interpolation; an output
pixel is masked only when every source tap it reads is masked, so unmasked
data never leaks into the integration domain. Channel maps act per pixel in
unclamped real space, which makes them exact on the discrete data: no
resampling path exists, so feature deviations under channel maps are pure
floating-point noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import FeatureVector, RasterImage, scdmi50
from .errors import Singular

#: relative-deviation denominators never drop below this
DEVIATION_FLOOR = 1e-12

_MIN_DET = 1e-6


@dataclass
class ShapeAffine:
    """Coordinate map (x', y')^T = matrix @ (x, y)^T + offset."""

    matrix: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.offset = np.asarray(self.offset, dtype=np.float64)
        if self.matrix.shape != (2, 2) or self.offset.shape != (2,):
            raise ValueError("shape affine needs a 2x2 matrix and length-2 offset")
        if abs(float(np.linalg.det(self.matrix))) < _MIN_DET:
            raise Singular("shape transform matrix is singular")

    @classmethod
    def identity(cls) -> "ShapeAffine":
        return cls(np.eye(2), np.zeros(2))


@dataclass
class ColorAffine:
    """Channel map (R', G', B')^T = matrix @ (R, G, B)^T + offset."""

    matrix: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.offset = np.asarray(self.offset, dtype=np.float64)
        if self.matrix.shape != (3, 3) or self.offset.shape != (3,):
            raise ValueError("color affine needs a 3x3 matrix and length-3 offset")
        if abs(float(np.linalg.det(self.matrix))) < _MIN_DET:
            raise Singular("color transform matrix is singular")

    @classmethod
    def identity(cls) -> "ColorAffine":
        return cls(np.eye(3), np.zeros(3))


# ---------------------------------------------------------------------------
# applying transforms


def apply_shape_affine(
    img: RasterImage, t: ShapeAffine, out_size: tuple[int, int] | None = None
) -> RasterImage:
    """Inverse-mapping warp with bilinear interpolation.

    ``out_size`` is (width, height), defaulting to the input size. Taps with
    zero bilinear weight are not required to be masked, so grid-exact maps
    (identity, integer shifts, quarter-turn rotations) copy pixels and the
    mask verbatim.
    """
    w_in, h_in = img.width, img.height
    w_out, h_out = out_size if out_size is not None else (w_in, h_in)
    a = t.matrix
    det = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    if abs(det) < _MIN_DET:
        raise Singular("shape transform matrix is singular")
    # adjugate inverse keeps grid-aligned maps exact in floating point
    inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det

    gx = np.arange(w_out, dtype=np.float64)[None, :] - t.offset[0]
    gy = np.arange(h_out, dtype=np.float64)[:, None] - t.offset[1]
    sx = inv[0, 0] * gx + inv[0, 1] * gy
    sy = inv[1, 0] * gx + inv[1, 1] * gy

    x0f = np.floor(sx)
    y0f = np.floor(sy)
    fx = sx - x0f
    fy = sy - y0f
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)
    x1 = x0 + (fx > 0)
    y1 = y0 + (fy > 0)

    inb = (x0 >= 0) & (x1 <= w_in - 1) & (y0 >= 0) & (y1 <= h_in - 1)
    x0c = np.clip(x0, 0, w_in - 1)
    x1c = np.clip(x1, 0, w_in - 1)
    y0c = np.clip(y0, 0, h_in - 1)
    y1c = np.clip(y1, 0, h_in - 1)

    mask = img.mask
    out_mask = (
        inb
        & mask[y0c, x0c]
        & mask[y0c, x1c]
        & mask[y1c, x0c]
        & mask[y1c, x1c]
    )

    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy
    planes = []
    for plane in img.channels():
        out = (
            w00 * plane[y0c, x0c]
            + w01 * plane[y0c, x1c]
            + w10 * plane[y1c, x0c]
            + w11 * plane[y1c, x1c]
        )
        planes.append(np.where(out_mask, out, 0.0))
    return RasterImage(planes[0], planes[1], planes[2], out_mask)


def apply_color_affine(img: RasterImage, t: ColorAffine, clamp: bool = False) -> RasterImage:
    """Per-pixel channel map in real space; clamps to [0, 1] only on request."""
    stack = np.stack(img.channels())
    out = np.einsum("ij,jhw->ihw", t.matrix, stack) + t.offset[:, None, None]
    if clamp:
        np.clip(out, 0.0, 1.0, out=out)
    return RasterImage(out[0], out[1], out[2], img.mask.copy())


def upsample_nearest(img: RasterImage, factor: int = 2) -> RasterImage:
    """Pixel replication: an exact affine map of the sample grid."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    rep = lambda p: np.repeat(np.repeat(p, factor, axis=0), factor, axis=1)
    return RasterImage(rep(img.red), rep(img.green), rep(img.blue), rep(img.mask))


# ---------------------------------------------------------------------------
# samplers


def _rot2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def sample_shape_affine(
    seed: int,
    det_range: tuple[float, float] = (0.5, 2.0),
    max_condition: float = 3.0,
    src_size: tuple[int, int] | None = None,
    out_size: tuple[int, int] | None = None,
) -> ShapeAffine:
    """Seeded random coordinate map with bounded determinant and condition.

    Built as rotation * diag * rotation with log-uniform determinant and
    condition, so det_range=(1,1) with max_condition=1 degenerates to a pure
    rotation. When sizes are given the offset maps the source center onto the
    output center to keep content in frame.
    """
    lo, hi = det_range
    if not (0.0 < lo <= hi):
        raise ValueError("det_range must be within (0, inf)")
    if max_condition < 1.0:
        raise ValueError("max_condition must be >= 1")
    rng = np.random.default_rng(seed)
    th1, th2 = rng.uniform(0.0, 2.0 * np.pi, size=2)
    det = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    cond = float(np.exp(rng.uniform(0.0, np.log(max_condition))))
    s1 = np.sqrt(det * cond)
    s2 = np.sqrt(det / cond)
    matrix = _rot2(th1) @ np.diag([s1, s2]) @ _rot2(th2)
    offset = np.zeros(2)
    if src_size is not None:
        if out_size is None:
            out_size = src_size
        src_c = np.array([(src_size[0] - 1) / 2.0, (src_size[1] - 1) / 2.0])
        out_c = np.array([(out_size[0] - 1) / 2.0, (out_size[1] - 1) / 2.0])
        offset = out_c - matrix @ src_c
    return ShapeAffine(matrix, offset)


def sample_color_affine(
    seed: int,
    max_condition: float = 3.0,
    offset_range: tuple[float, float] = (-0.2, 0.2),
    scale_range: tuple[float, float] = (0.6, 1.5),
) -> ColorAffine:
    """Seeded random channel map with positive determinant.

    Symmetric positive-definite construction (rotation-conjugated diagonal)
    times a global scale: max_condition=1 with zero offsets collapses to a
    positive multiple of the identity, and the determinant is positive by
    construction.
    """
    if max_condition < 1.0:
        raise ValueError("max_condition must be >= 1")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    half = 0.5 * np.log(max_condition)
    s = np.exp(rng.uniform(-half, half, size=3))
    lam = float(np.exp(rng.uniform(np.log(scale_range[0]), np.log(scale_range[1]))))
    matrix = lam * (q @ np.diag(s) @ q.T)
    offset = rng.uniform(offset_range[0], offset_range[1], size=3)
    return ColorAffine(matrix, offset)


# ---------------------------------------------------------------------------
# invariance reports


@dataclass
class InvarianceReport:
    """Per-invariant relative deviation statistics across a transform set."""

    ids: np.ndarray
    ks: np.ndarray
    median_rel_dev: np.ndarray
    max_rel_dev: np.ndarray
    n_valid: np.ndarray

    def to_csv(self) -> str:
        lines = ["id,k,median_rel_dev,max_rel_dev,n_valid"]
        for i in range(len(self.ids)):
            lines.append(
                f"{int(self.ids[i])},{int(self.ks[i])},"
                f"{float(self.median_rel_dev[i])!r},{float(self.max_rel_dev[i])!r},"
                f"{int(self.n_valid[i])}"
            )
        return "\n".join(lines) + "\n"


def relative_deviation(
    reference: np.ndarray, transformed: np.ndarray, floor: float = DEVIATION_FLOOR
) -> np.ndarray:
    ref = np.asarray(reference, dtype=np.float64)
    new = np.asarray(transformed, dtype=np.float64)
    return np.abs(new - ref) / np.maximum(np.abs(ref), floor)


def feature_deviations(base: FeatureVector, other: FeatureVector) -> tuple[np.ndarray, np.ndarray]:
    """(deviations, both_valid) for one original/transformed pair."""
    both = base.valid & other.valid
    return relative_deviation(base.values, other.values), both


def invariance_report(
    img: RasterImage,
    shape_transforms: tuple[ShapeAffine, ...] = (),
    color_transforms: tuple[ColorAffine, ...] = (),
    clamp: bool = False,
    out_size: tuple[int, int] | None = None,
) -> InvarianceReport:
    """Feature deviations for every shape-only, color-only and composed variant.

    Deviations are collected per invariant over the variants where both the
    original and the transformed image give a valid value.
    """
    base = scdmi50(img)
    variants: list[RasterImage] = []
    for st in shape_transforms:
        variants.append(apply_shape_affine(img, st, out_size))
    for ct in color_transforms:
        variants.append(apply_color_affine(img, ct, clamp))
    for st in shape_transforms:
        warped = apply_shape_affine(img, st, out_size)
        for ct in color_transforms:
            variants.append(apply_color_affine(warped, ct, clamp))

    collected: list[list[float]] = [[] for _ in range(50)]
    for variant in variants:
        fv = scdmi50(variant)
        devs, both = feature_deviations(base, fv)
        for i in range(50):
            if both[i]:
                collected[i].append(float(devs[i]))

    ids = np.array([spec_id for k in (0, 1) for spec_id in range(1, 26)])
    ks = np.array([k for k in (0, 1) for _ in range(25)])
    med = np.array([float(np.median(c)) if c else float("nan") for c in collected])
    mx = np.array([max(c) if c else float("nan") for c in collected])
    nv = np.array([len(c) for c in collected])
    return InvarianceReport(ids, ks, med, mx, nv)
