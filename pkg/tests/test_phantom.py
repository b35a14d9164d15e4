import numpy as np
import pytest

from onsdkit.phantom import (
    PhantomSpec,
    PhantomTruth,
    band_height,
    fat_region_mask,
    flank_depth,
    generate_phantom,
    load_truth,
    painted_edges,
    save_truth,
    spec_from_text,
    spec_to_text,
)


def make_spec(**kw):
    base = dict(
        width=320, height=96, true_sheath_width=40, sheath_center_column=160.0,
        fat_sigma=0.0, sheath_sigma=0.0, speckle_sigma=0.0,
    )
    base.update(kw)
    return PhantomSpec(**base)


class TestSpecValidation:
    def test_fat_must_exceed_sheath(self):
        with pytest.raises(ValueError):
            make_spec(fat_mean=40.0, sheath_mean=180.0)

    def test_width_bound(self):
        with pytest.raises(ValueError):
            make_spec(true_sheath_width=400)

    def test_intensity_range(self):
        with pytest.raises(ValueError):
            make_spec(fat_mean=300.0)

    def test_text_round_trip(self):
        spec = make_spec(speckle_sigma=12.5, mm_per_pixel=0.05)
        assert spec_from_text(spec_to_text(spec)) == spec

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            spec_from_text("bogus=1\n")

    def test_missing_field_rejected(self):
        with pytest.raises(ValueError, match="missing"):
            spec_from_text("width=100\n")


class TestNoiselessGeneration:
    def test_frames_identical_without_noise_or_drift(self):
        seq, _ = generate_phantom(make_spec(), 4, seed=0)
        first = seq.frames[0].pixels
        assert all(np.array_equal(first, f.pixels) for f in seq.frames)

    def test_sheath_pixels_carry_sheath_mean(self):
        spec = make_spec(sheath_mean=40.0)
        seq, truth = generate_phantom(spec, 1, seed=0)
        t = truth.frames[0]
        bh = band_height(spec)
        cols = slice(int(t.left_edge + 0.5), int(t.right_edge - 0.5) + 1)
        body = seq.frames[0].pixels[bh:, cols]
        assert np.all(body == 40)

    def test_seeded_reproducibility(self):
        spec = make_spec(fat_sigma=4.0, sheath_sigma=4.0, speckle_sigma=15.0)
        a, _ = generate_phantom(spec, 6, seed=42)
        b, _ = generate_phantom(spec, 6, seed=42)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.pixels, fb.pixels)

    def test_different_seeds_differ(self):
        spec = make_spec(speckle_sigma=15.0, clean_frame_index=1)
        a, _ = generate_phantom(spec, 2, seed=1)
        b, _ = generate_phantom(spec, 2, seed=2)
        assert not np.array_equal(a.frames[0].pixels, b.frames[0].pixels)


class TestGroundTruth:
    def test_drift_accumulates_analytically(self):
        spec = make_spec(drift_per_frame=1.0, sheath_center_column=140.0)
        _, truth = generate_phantom(spec, 10, seed=0)
        assert truth.frames[9].center == truth.frames[0].center + 9

    def test_painted_edges_consistent_with_pixels(self):
        spec = make_spec(sheath_center_column=160.25)
        seq, truth = generate_phantom(spec, 1, seed=0)
        t = truth.frames[0]
        bh = band_height(spec)
        row = seq.frames[0].pixels[bh]
        first_dark = int(t.left_edge + 0.5)
        last_dark = int(t.right_edge - 0.5)
        assert row[first_dark] == spec.sheath_mean
        assert row[last_dark] == spec.sheath_mean
        assert row[first_dark - 1] > spec.sheath_mean
        assert row[last_dark + 1] > spec.sheath_mean

    def test_painted_width_close_to_nominal(self):
        for c in (160.0, 160.25, 160.5):
            spec = make_spec(sheath_center_column=c, true_sheath_width=41)
            ledge, redge = painted_edges(spec, c)
            assert abs((redge - ledge) - 41) <= 1.0

    def test_drift_out_of_frame_errors(self):
        spec = make_spec(drift_per_frame=5.0)
        with pytest.raises(ValueError, match="leaves the frame"):
            generate_phantom(spec, 40, seed=0)

    def test_clean_index_bound(self):
        with pytest.raises(ValueError):
            generate_phantom(make_spec(clean_frame_index=10), 5, seed=0)

    def test_truth_json_round_trip(self, tmp_path):
        _, truth = generate_phantom(make_spec(mm_per_pixel=0.05), 3, seed=1)
        p = tmp_path / "truth.json"
        save_truth(truth, p)
        loaded = load_truth(p)
        assert loaded == truth
        assert isinstance(loaded, PhantomTruth)


class TestRegions:
    def test_fat_region_contains_band_and_flank_cores(self):
        spec = make_spec()
        mask = fat_region_mask(spec, 160.0)
        assert mask[: band_height(spec), :].all()
        assert not mask[band_height(spec) + flank_depth(spec) :, :].any()

    def test_degraded_frames_darker_than_clean(self):
        spec = make_spec(speckle_sigma=20.0, clean_frame_index=1)
        seq, truth = generate_phantom(spec, 3, seed=3)
        clean_sum = int(seq.frames[1].pixels.sum())
        for i in (0, 2):
            assert int(seq.frames[i].pixels.sum()) < clean_sum
