import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sslab.viewgeom import (
    GLOBAL,
    LOCAL,
    CropRect,
    PairCounts,
    ViewGeomError,
    ViewSetSpec,
    make_view_set,
    pair_counts,
    pixel_scale,
    sample_crop,
    sample_crops,
)


def spec_for(n_g=2, n_l=6, s_g=0.3, s_l=0.3, gc=224, lc=128, **kw):
    return ViewSetSpec(s_g=s_g, s_l=s_l, gc=gc, lc=lc, n_g=n_g, n_l=n_l, **kw)


class TestCropRect:
    def test_area_and_scale(self):
        r = CropRect(10, 20, 30, 40, 100, 100)
        assert r.area == 1200
        assert r.scale == pytest.approx(0.12)

    @pytest.mark.parametrize(
        "x,y,w,h",
        [(-1, 0, 10, 10), (0, -1, 10, 10), (95, 0, 10, 10), (0, 95, 10, 10), (0, 0, 0, 10), (0, 0, 10, 0)],
    )
    def test_rejects_out_of_bounds(self, x, y, w, h):
        with pytest.raises(ViewGeomError):
            CropRect(x, y, w, h, 100, 100)


class TestSampleCrop:
    def test_full_image_identity(self):
        rng = np.random.default_rng(0)
        r = sample_crop(rng, 224, 224, 1.0, 1.0, aspect_lo=1.0, aspect_hi=1.0)
        assert (r.x, r.y, r.w, r.h) == (0, 0, 224, 224)

    def test_quarter_area_square(self):
        rng = np.random.default_rng(1)
        r = sample_crop(rng, 224, 224, 0.25, 0.25, aspect_lo=1.0, aspect_hi=1.0)
        assert r.w == 112 and r.h == 112

    def test_mean_area_fraction_matches_uniform_mean(self):
        # Square aspect keeps every draw inside the source, so the empirical
        # mean must match the uniform-distribution mean (0.3+1.0)/2 = 0.65.
        rng = np.random.default_rng(7)
        rects = sample_crops(rng, 224, 224, 0.3, 1.0, n=100_000, aspect_lo=1.0, aspect_hi=1.0)
        frac = (rects[:, 2] * rects[:, 3]) / (224.0 * 224.0)
        assert abs(frac.mean() - 0.65) < 0.0065

    def test_scalar_and_batch_same_distribution(self):
        # Not stream-compatible, but the per-crop law must agree.
        rng_a = np.random.default_rng(3)
        singles = np.array(
            [
                (lambda r: (r.w * r.h) / (160.0 * 120.0))(sample_crop(rng_a, 160, 120, 0.2, 0.9))
                for _ in range(20_000)
            ]
        )
        rng_b = np.random.default_rng(4)
        rects = sample_crops(rng_b, 160, 120, 0.2, 0.9, n=20_000)
        batched = (rects[:, 2] * rects[:, 3]) / (160.0 * 120.0)
        assert abs(singles.mean() - batched.mean()) < 0.01
        assert abs(singles.std() - batched.std()) < 0.01

    def test_rejects_degenerate_source(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ViewGeomError):
            sample_crop(rng, 0, 224, 0.5, 1.0)
        with pytest.raises(ViewGeomError):
            sample_crops(rng, 224, 0, 0.5, 1.0, n=4)

    def test_rejects_bad_scale_range(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ViewGeomError):
            sample_crop(rng, 224, 224, 0.9, 0.3)

    def test_fallback_is_centered_and_clamped(self):
        # Extreme aspect forces every retry to fail on a narrow source.
        rng = np.random.default_rng(5)
        r = sample_crop(rng, 300, 30, 1.0, 1.0, aspect_lo=1.0, aspect_hi=1.0, max_retries=3)
        assert r.w == r.h == 30
        assert r.x == (300 - 30) // 2

    @given(
        seed=st.integers(0, 2**32 - 1),
        src_w=st.integers(16, 300),
        src_h=st.integers(16, 300),
        lo=st.floats(0.02, 0.5),
        span=st.floats(0.0, 0.5),
    )
    @settings(max_examples=200, deadline=None)
    def test_crops_always_contained(self, seed, src_w, src_h, lo, span):
        rng = np.random.default_rng(seed)
        hi = min(1.0, lo + span)
        r = sample_crop(rng, src_w, src_h, lo, hi)
        assert 0 <= r.x and r.x + r.w <= src_w
        assert 0 <= r.y and r.y + r.h <= src_h
        assert r.area > 0

    def test_batch_crops_always_contained(self):
        rng = np.random.default_rng(11)
        rects = sample_crops(rng, 97, 211, 0.05, 1.0, n=50_000, aspect_lo=0.5, aspect_hi=2.0)
        assert (rects[:, 0] >= 0).all() and (rects[:, 1] >= 0).all()
        assert (rects[:, 0] + rects[:, 2] <= 97).all()
        assert (rects[:, 1] + rects[:, 3] <= 211).all()
        assert (rects[:, 2] * rects[:, 3] > 0).all()


class TestPixelScale:
    @pytest.mark.parametrize(
        "w,h,out,expect",
        [(224, 224, 224, 1.0), (112, 112, 224, 4.0), (150, 120, 96, 96**2 / 18000)],
    )
    def test_values(self, w, h, out, expect):
        crop = CropRect(0, 0, w, h, 224, 224)
        assert pixel_scale(crop, out).value == pytest.approx(expect, rel=1e-12)

    def test_global_full_scale_square(self):
        # s_g = s_hi = 1 with square aspect always yields the full image.
        spec = spec_for(s_g=1.0, n_g=3, n_l=0, gc=96, lc=48, aspect_lo=1.0, aspect_hi=1.0)
        rng = np.random.default_rng(2)
        for crop, role in make_view_set(rng, 128, 128, spec):
            assert role == GLOBAL
            assert pixel_scale(crop, 96).value == (96 / 128) ** 2


class TestMakeViewSet:
    def test_default_counts(self):
        rng = np.random.default_rng(0)
        views = make_view_set(rng, 224, 224, spec_for(n_g=2, n_l=6))
        assert len(views) == 8
        assert [role for _, role in views] == [GLOBAL] * 2 + [LOCAL] * 6

    def test_single_global(self):
        rng = np.random.default_rng(0)
        views = make_view_set(rng, 224, 224, spec_for(n_g=1, n_l=0))
        assert len(views) == 1 and views[0][1] == GLOBAL

    def test_determinism(self):
        spec = spec_for()
        a = make_view_set(np.random.default_rng(42), 224, 224, spec)
        b = make_view_set(np.random.default_rng(42), 224, 224, spec)
        assert a == b

    def test_scale_ranges_respected(self):
        spec = spec_for(s_g=0.5, s_l=0.2, aspect_lo=1.0, aspect_hi=1.0)
        rng = np.random.default_rng(9)
        for _ in range(200):
            for crop, role in make_view_set(rng, 224, 224, spec):
                if role == GLOBAL:
                    assert 0.45 <= crop.scale <= 1.0
                else:
                    assert 0.04 <= crop.scale <= 0.22


class TestPairCounts:
    @pytest.mark.parametrize("n_g,n_l,expect", [(2, 6, (2, 12)), (1, 4, (0, 4)), (3, 0, (6, 0))])
    def test_values(self, n_g, n_l, expect):
        c = pair_counts(spec_for(n_g=n_g, n_l=n_l))
        assert (c.p_gg, c.p_gl) == expect

    @given(n_g=st.integers(1, 8), n_l=st.integers(0, 12))
    @settings(max_examples=50, deadline=None)
    def test_matches_pair_enumeration(self, n_g, n_l):
        # Brute force: ordered (teacher global, student view != teacher).
        roles = [GLOBAL] * n_g + [LOCAL] * n_l
        gg = sum(
            1
            for i, ri in enumerate(roles)
            for j, rj in enumerate(roles)
            if ri == GLOBAL and i != j and rj == GLOBAL
        )
        gl = sum(
            1
            for i, ri in enumerate(roles)
            for j, rj in enumerate(roles)
            if ri == GLOBAL and i != j and rj == LOCAL
        )
        c = pair_counts(spec_for(n_g=n_g, n_l=n_l))
        assert (c.p_gg, c.p_gl) == (gg, gl)


class TestViewSetSpec:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(s_g=0.0), dict(s_g=1.5), dict(s_l=0.04), dict(s_l=1.2),
            dict(gc=64, lc=96), dict(n_g=0), dict(n_l=-1),
            dict(aspect_lo=2.0, aspect_hi=0.5),
        ],
    )
    def test_invalid_specs_rejected(self, kw):
        with pytest.raises(ViewGeomError):
            spec_for(**kw)
