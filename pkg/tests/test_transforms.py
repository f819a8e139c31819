import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scdmi.engine import RasterImage, scdmi50
from scdmi.errors import Singular
from scdmi.synthetic import blob_image, disk_masked_image
from scdmi.transforms import (
    ColorAffine,
    ShapeAffine,
    apply_color_affine,
    apply_shape_affine,
    feature_deviations,
    invariance_report,
    relative_deviation,
    sample_color_affine,
    sample_shape_affine,
    upsample_nearest,
)


def random_image(seed, h=16, w=16):
    rng = np.random.default_rng(seed)
    return RasterImage.from_array(rng.uniform(0.0, 1.0, size=(h, w, 3)))


class TestShapeAffine:
    def test_singular_matrix_rejected(self):
        with pytest.raises(Singular):
            ShapeAffine(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_identity_is_bit_identical(self):
        img = random_image(0)
        out = apply_shape_affine(img, ShapeAffine.identity())
        assert np.array_equal(out.red, img.red)
        assert np.array_equal(out.green, img.green)
        assert np.array_equal(out.blue, img.blue)
        assert np.array_equal(out.mask, img.mask)

    def test_integer_translation_is_exact_shift(self):
        img = random_image(1)
        img.mask[:] = False
        img.mask[2:10, 3:11] = True
        out = apply_shape_affine(img, ShapeAffine(np.eye(2), np.array([4.0, 2.0])))
        assert np.array_equal(out.red[4:12, 7:15], img.red[2:10, 3:11])
        assert np.array_equal(out.mask[4:12, 7:15], img.mask[2:10, 3:11])
        assert out.mask.sum() == img.mask.sum()

    def test_quarter_turn_is_exact_permutation(self):
        img = random_image(2, 9, 9)
        c = (9 - 1) / 2.0
        rot = ShapeAffine(np.array([[0.0, -1.0], [1.0, 0.0]]), np.array([2 * c, 0.0]))
        out = apply_shape_affine(img, rot)
        assert out.mask.all()
        assert sorted(out.red.ravel()) == sorted(img.red.ravel())
        # (x, y) -> (c - (y - c), x): column of output = W-1-y
        assert np.array_equal(out.red[:, 8 - 3], img.red[3, :])

    def test_mask_soundness_under_poison(self):
        # unmasked pixels carry sentinels; they must never leak through taps
        img = random_image(3, 24, 24)
        img.mask[:] = False
        img.mask[6:18, 6:18] = True
        for plane in img.channels():
            plane[~img.mask] = 1e12
        t = sample_shape_affine(99, det_range=(0.8, 1.2), max_condition=2.0, src_size=(24, 24))
        out = apply_shape_affine(img, t)
        assert np.abs(out.red[out.mask]).max() < 1e6
        assert np.all(out.red[~out.mask] == 0.0)

    def test_out_size(self):
        img = random_image(4, 8, 8)
        out = apply_shape_affine(img, ShapeAffine.identity(), out_size=(12, 10))
        assert (out.width, out.height) == (12, 10)
        assert np.array_equal(out.red[:8, :8], img.red)
        assert not out.mask[:, 8:].any()


class TestColorAffine:
    def test_identity(self):
        img = random_image(5)
        out = apply_color_affine(img, ColorAffine.identity())
        assert np.array_equal(out.red, img.red)

    def test_diagonal_doubling_unclamped(self):
        img = random_image(6)
        out = apply_color_affine(img, ColorAffine(2.0 * np.eye(3)), clamp=False)
        assert np.array_equal(out.red, 2.0 * img.red)
        assert np.array_equal(out.blue, 2.0 * img.blue)

    def test_channel_swap_permutes_planes(self):
        img = random_image(7)
        perm = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        out = apply_color_affine(img, ColorAffine(perm))
        assert np.array_equal(out.red, img.green)
        assert np.array_equal(out.green, img.blue)
        assert np.array_equal(out.blue, img.red)

    def test_clamp_flag(self):
        img = random_image(8)
        out = apply_color_affine(img, ColorAffine(3.0 * np.eye(3)), clamp=True)
        assert out.red.max() <= 1.0

    def test_singular_rejected(self):
        with pytest.raises(Singular):
            ColorAffine(np.zeros((3, 3)))


class TestSamplers:
    def test_shape_sampler_deterministic(self):
        a = sample_shape_affine(42, (0.5, 2.0), 3.0)
        b = sample_shape_affine(42, (0.5, 2.0), 3.0)
        assert np.array_equal(a.matrix, b.matrix)
        assert np.array_equal(a.offset, b.offset)

    def test_pure_rotation_case(self):
        t = sample_shape_affine(7, det_range=(1.0, 1.0), max_condition=1.0)
        assert np.linalg.det(t.matrix) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(t.matrix.T @ t.matrix, np.eye(2), atol=1e-12)

    def test_shape_dets_within_range(self):
        for seed in range(1000):
            t = sample_shape_affine(seed, det_range=(0.5, 2.0), max_condition=3.0)
            det = float(np.linalg.det(t.matrix))
            assert 0.5 - 1e-9 <= det <= 2.0 + 1e-9
            svals = np.linalg.svd(t.matrix, compute_uv=False)
            assert svals[0] / svals[1] <= 3.0 + 1e-9

    def test_color_sampler_deterministic_and_positive(self):
        a = sample_color_affine(13)
        b = sample_color_affine(13)
        assert np.array_equal(a.matrix, b.matrix)
        for seed in range(1000):
            t = sample_color_affine(seed)
            assert np.linalg.det(t.matrix) >= 1e-6

    def test_color_condition_one_is_scalar_identity(self):
        t = sample_color_affine(3, max_condition=1.0, offset_range=(0.0, 0.0))
        lam = t.matrix[0, 0]
        assert lam > 0
        assert np.allclose(t.matrix, lam * np.eye(3), atol=1e-12)
        assert np.all(t.offset == 0.0)


class TestFeatureInvariance:
    def test_color_exactness_on_masked_image(self):
        img = disk_masked_image(1, size=64, radius_frac=0.4)
        base = scdmi50(img)
        for seed in range(3):
            ct = sample_color_affine(seed + 100, max_condition=6.0, offset_range=(-0.3, 0.3))
            fv = scdmi50(apply_color_affine(img, ct))
            devs, both = feature_deviations(base, fv)
            assert both.any()
            assert devs[both].max() <= 1e-9

    def test_composition_consistency(self):
        img = disk_masked_image(2, size=64, radius_frac=0.28)
        st_ = sample_shape_affine(5, det_range=(0.8, 1.3), max_condition=1.6, src_size=(64, 64))
        ct = sample_color_affine(6, max_condition=4.0)
        ab = scdmi50(apply_color_affine(apply_shape_affine(img, st_), ct))
        ba = scdmi50(apply_shape_affine(apply_color_affine(img, ct), st_))
        devs, both = feature_deviations(ab, ba)
        assert both.any()
        assert devs[both].max() <= 1e-9

    def test_upsample_nearest_replicates(self):
        img = random_image(9, 6, 6)
        big = upsample_nearest(img, 2)
        assert big.width == 12 and big.height == 12
        assert np.array_equal(big.red[::2, ::2], img.red)
        assert np.array_equal(big.red[1::2, 1::2], img.red)


class TestInvarianceReport:
    def test_identity_only_gives_zero_deviations(self):
        img = blob_image(3, size=32)
        report = invariance_report(img, (ShapeAffine.identity(),), (ColorAffine.identity(),))
        assert np.all(report.n_valid >= 1)
        assert np.nanmax(report.max_rel_dev) == 0.0

    def test_csv_layout(self):
        img = blob_image(4, size=32)
        report = invariance_report(img, (), (ColorAffine.identity(),))
        lines = report.to_csv().strip().split("\n")
        assert lines[0] == "id,k,median_rel_dev,max_rel_dev,n_valid"
        assert len(lines) == 51
        first = lines[1].split(",")
        assert first[0] == "1" and first[1] == "0"

    def test_color_only_report_is_exact(self):
        img = disk_masked_image(5, size=64, radius_frac=0.4)
        cts = tuple(sample_color_affine(s + 30, max_condition=6.0) for s in range(3))
        report = invariance_report(img, (), cts)
        valid = report.n_valid > 0
        assert np.nanmax(report.max_rel_dev[valid]) <= 1e-9


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
@settings(max_examples=100)
def test_relative_deviation_nonnegative(a, b):
    d = relative_deviation(np.array([a]), np.array([b]))
    assert d[0] >= 0.0
