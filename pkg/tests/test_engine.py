import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scdmi.algebra import MomentIndex, catalogue_specs
from scdmi.engine import (
    ChannelSet,
    RasterImage,
    centroid_and_means,
    compute_moment_table,
    derivative_channels,
    evaluate_invariant,
    f1_channels,
    masked_centroid,
    moment_tables,
    raw_channels,
    required_indices,
    scdmi50,
    stencil_eroded_mask,
)
from scdmi.errors import EmptyDomain, TooSmall
from scdmi.transforms import ShapeAffine, apply_shape_affine


def random_image(seed, h, w):
    rng = np.random.default_rng(seed)
    return RasterImage.from_array(rng.uniform(0.0, 1.0, size=(h, w, 3)))


class TestCentroid:
    def test_full_mask_5x3(self):
        img = RasterImage.from_array(np.zeros((3, 5, 3)))
        xbar, ybar, *_ = centroid_and_means(img)
        assert (xbar, ybar) == (2.0, 1.0)

    def test_constant_channels(self):
        img = RasterImage.from_array(np.full((4, 4, 3), 0.25))
        _, _, rbar, gbar, bbar = centroid_and_means(img)
        assert (rbar, gbar, bbar) == (0.25, 0.25, 0.25)

    def test_empty_mask(self):
        img = RasterImage.from_array(np.zeros((4, 4, 3)), mask=np.zeros((4, 4), bool))
        with pytest.raises(EmptyDomain):
            centroid_and_means(img)


class TestDerivatives:
    def test_ramp_derivative_is_12(self):
        h, w = 7, 9
        x = np.tile(np.arange(w, dtype=float), (h, 1))
        img = RasterImage(x, x, x, np.ones((h, w), bool))
        ddx, ddy, eroded = derivative_channels(img)
        assert np.allclose(ddx[0][eroded], 12.0)
        assert np.allclose(ddy[0][eroded], 0.0)

    def test_constant_channel_zero_derivative(self):
        img = RasterImage.from_array(np.full((6, 6, 3), 0.7))
        ddx, ddy, eroded = derivative_channels(img)
        # the stencil of a constant cancels to rounding noise
        assert np.allclose(ddx[:, eroded], 0.0, atol=1e-13)
        assert np.allclose(ddy[:, eroded], 0.0, atol=1e-13)

    def test_too_small(self):
        with pytest.raises(TooSmall):
            derivative_channels(RasterImage.from_array(np.zeros((4, 4, 3))))

    def test_eroded_mask_margin(self):
        mask = np.ones((8, 8), bool)
        eroded = stencil_eroded_mask(mask)
        expected = np.zeros((8, 8), bool)
        expected[2:6, 2:6] = True
        assert np.array_equal(eroded, expected)


class TestF1Channels:
    def test_linear_ramp_gives_12_xc(self):
        h = w = 9
        x = np.tile(np.arange(w, dtype=float), (h, 1))
        img = RasterImage(x, x, x, np.ones((h, w), bool))
        _, _, eroded = derivative_channels(img)
        xbar, ybar = masked_centroid(eroded)
        cs = f1_channels(img, xbar, ybar)
        xc = np.tile(np.arange(w, dtype=float), (h, 1)) - xbar
        assert np.allclose(cs.red[eroded], 12.0 * xc[eroded])

    def test_euler_relation_on_radial_quadratic(self):
        # the stencil is exact on quadratics, so F1 of |P - center|^2 equals
        # 12 * 2 * C on the eroded domain
        h = w = 11
        yy, xx = np.mgrid[0:h, 0:w].astype(float)
        mask = np.ones((h, w), bool)
        eroded = stencil_eroded_mask(mask)
        xbar, ybar = masked_centroid(eroded)
        c = (xx - xbar) ** 2 + (yy - ybar) ** 2
        img = RasterImage(c, c, c, mask)
        cs = f1_channels(img, xbar, ybar)
        assert np.allclose(cs.red[eroded], 24.0 * c[eroded], rtol=1e-12)

    def test_means_are_zero(self):
        cs = f1_channels(random_image(0, 7, 7), 3.0, 3.0)
        assert cs.means == (0.0, 0.0, 0.0)
        assert cs.k == 1


class TestMomentTable:
    def test_m00_is_masked_count(self):
        img = random_image(1, 6, 7)
        img.mask[0, :] = False
        cs, xbar, ybar = raw_channels(img)
        table = compute_moment_table(cs, xbar, ybar, [MomentIndex(0, 0, 0, 0, 0)])
        assert table.m00 == 35.0
        assert table.entries[MomentIndex(0, 0, 0, 0, 0)] == 35.0

    def test_first_central_moments_vanish(self):
        img = random_image(2, 8, 8)
        cs, xbar, ybar = raw_channels(img)
        table = compute_moment_table(
            cs, xbar, ybar, [MomentIndex(1, 0, 0, 0, 0), MomentIndex(0, 1, 0, 0, 0)]
        )
        assert abs(table.entries[MomentIndex(1, 0, 0, 0, 0)]) <= 1e-9 * table.m00
        assert abs(table.entries[MomentIndex(0, 1, 0, 0, 0)]) <= 1e-9 * table.m00

    def test_against_naive_double_loop(self):
        img = random_image(3, 8, 8)
        cs, xbar, ybar = raw_channels(img)
        required = sorted(required_indices(0))
        table = compute_moment_table(cs, xbar, ybar, required)
        rbar, gbar, bbar = cs.means
        for idx in required:
            total = 0.0
            for y in range(8):
                for x in range(8):
                    total += (
                        (x - xbar) ** idx.p
                        * (y - ybar) ** idx.q
                        * (img.red[y, x] - rbar) ** idx.alpha
                        * (img.green[y, x] - gbar) ** idx.beta
                        * (img.blue[y, x] - bbar) ** idx.gamma
                    )
            assert table.entries[idx] == pytest.approx(total, rel=1e-12, abs=1e-12)


class TestEvaluate:
    def test_grayscale_gives_invalid(self):
        rng = np.random.default_rng(5)
        g = rng.uniform(0, 1, (6, 6))
        img = RasterImage(g, g.copy(), g.copy(), np.ones((6, 6), bool))
        fv = scdmi50(img)
        assert not fv.valid.any()
        assert np.all(fv.values == 0.0)
        assert np.isfinite(fv.values).all()

    def test_constant_gives_invalid(self):
        img = RasterImage.from_array(np.full((8, 8, 3), 0.4))
        fv = scdmi50(img)
        assert not fv.valid.any()
        assert np.isfinite(fv.values).all()

    def test_too_small_image(self):
        with pytest.raises(TooSmall):
            scdmi50(RasterImage.from_array(np.zeros((4, 9, 3))))

    def test_identity_copy_bit_identical(self):
        img = random_image(6, 12, 12)
        copy = apply_shape_affine(img, ShapeAffine.identity())
        a, b = scdmi50(img), scdmi50(copy)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.valid, b.valid)

    def test_integer_translation(self):
        rng = np.random.default_rng(7)
        img = RasterImage.from_array(rng.uniform(0, 1, (20, 20, 3)))
        img.mask[:] = False
        img.mask[4:14, 5:15] = True
        shifted = apply_shape_affine(img, ShapeAffine(np.eye(2), np.array([3.0, 2.0])))
        assert shifted.mask.sum() == img.mask.sum()
        a, b = scdmi50(img), scdmi50(shifted)
        both = a.valid & b.valid
        assert both.any()
        dev = np.abs(b.values - a.values) / np.maximum(np.abs(a.values), 1e-12)
        assert dev[both].max() <= 1e-9

    def test_determinism(self):
        bytes_ = np.random.default_rng(8).uniform(0, 1, (10, 10, 3))
        a = scdmi50(RasterImage.from_array(bytes_.copy()))
        b = scdmi50(RasterImage.from_array(bytes_.copy()))
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.valid, b.valid)

    def test_validity_flag_matches_spec_claim(self):
        # valid=False exactly when the quadratic core underflows its floor
        img = random_image(9, 7, 7)
        t0, t1 = moment_tables(img)
        for spec in catalogue_specs():
            value, ok = evaluate_invariant(spec, t0 if spec.k == 0 else t1)
            assert ok
            assert np.isfinite(value)


@given(st.integers(0, 10000), st.integers(5, 9), st.integers(5, 9))
@settings(max_examples=25, deadline=None)
def test_moment_table_matches_naive_on_random_images(seed, h, w):
    img = random_image(seed, h, w)
    cs, xbar, ybar = raw_channels(img)
    idx = MomentIndex(2, 1, 1, 0, 0)
    table = compute_moment_table(cs, xbar, ybar, [idx])
    xs = np.arange(w) - xbar
    ys = np.arange(h) - ybar
    naive = float(
        np.sum(
            xs[None, :] ** 2 * ys[:, None] ** 1 * (img.red - cs.means[0])
        )
    )
    assert table.entries[idx] == pytest.approx(naive, rel=1e-10, abs=1e-10)
