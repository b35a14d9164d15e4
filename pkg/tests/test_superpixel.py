import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from onsdkit.errors import StageError
from onsdkit.frames import BinaryMask, GrayFrame, VideoSequence
from onsdkit.phantom import PhantomSpec, generate_phantom
from onsdkit.superpixel import (
    ScoringParams,
    SuperpixelLabeling,
    binarize_top_k,
    dice_score,
    realign_labels,
    select_optimal_frame,
    slic_segment,
)
from onsdkit.tracking import RoiBox


def gray(arr):
    return GrayFrame(np.asarray(arr, dtype=np.uint8))


def random_frame(rng, w=16, h=16):
    return gray(rng.integers(0, 256, (h, w)))


class TestSlic:
    def test_constant_field_splits_on_grid_midlines(self):
        lab = slic_segment(gray(np.full((32, 32), 99)), 4, 10.0, 10)
        assert lab.cluster_count == 4
        areas = np.bincount(lab.labels.ravel())
        assert areas.tolist() == [256, 256, 256, 256]
        # quadrant layout
        assert lab.labels[0, 0] != lab.labels[0, 31]
        assert lab.labels[0, 0] != lab.labels[31, 0]

    def test_single_cluster(self):
        lab = slic_segment(gray(np.zeros((8, 8))), 1, 10.0, 10)
        assert lab.cluster_count == 1
        assert (lab.labels == 0).all()

    def test_two_tone_no_straddling(self):
        img = np.zeros((16, 32), dtype=np.uint8)
        img[:, 16:] = 255
        lab = slic_segment(gray(img), 8, 0.5, 10)
        # brute-force scan: no label on both sides of the divide
        left = set(np.unique(lab.labels[:, :16]))
        right = set(np.unique(lab.labels[:, 16:]))
        assert not (left & right)

    def test_cluster_count_bounds(self):
        with pytest.raises(ValueError):
            slic_segment(gray(np.zeros((8, 8))), 0)
        with pytest.raises(ValueError):
            slic_segment(gray(np.zeros((8, 8))), 65)

    def test_every_pixel_labelled_one_component_each(self):
        rng = np.random.default_rng(5)
        frame = random_frame(rng, 40, 30)
        lab = slic_segment(frame, 20, 10.0, 10)
        assert lab.labels.min() == 0
        assert lab.labels.max() == lab.cluster_count - 1
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        for c in range(lab.cluster_count):
            _, n = ndimage.label(lab.labels == c, structure=structure)
            assert n == 1

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        frame = random_frame(rng, 24, 24)
        a = slic_segment(frame, 9, 10.0, 10)
        b = slic_segment(frame, 9, 10.0, 10)
        assert np.array_equal(a.labels, b.labels)


class TestRealign:
    def test_zero_field(self):
        frame = gray(np.zeros((8, 8)))
        lab = realign_labels(frame, slic_segment(frame, 4))
        assert (lab.cluster_intensity == 0).all()

    def test_single_cluster_closed_form(self):
        frame = gray(np.full((8, 8), 255))
        lab = realign_labels(frame, slic_segment(frame, 1))
        assert lab.cluster_intensity.tolist() == [255 * 64]

    def test_matches_accumulation_oracle(self):
        rng = np.random.default_rng(7)
        frame = random_frame(rng)
        lab = realign_labels(frame, slic_segment(frame, 5))
        expected = np.zeros(lab.cluster_count, dtype=np.int64)
        for y in range(16):
            for x in range(16):
                expected[lab.labels[y, x]] += int(frame.pixels[y, x])
        assert np.array_equal(lab.cluster_intensity, expected)

    def test_shape_mismatch(self):
        frame = gray(np.zeros((8, 8)))
        lab = slic_segment(frame, 4)
        with pytest.raises(ValueError):
            realign_labels(gray(np.zeros((8, 10))), lab)


def manual_labeling(labels, intensities):
    labels = np.asarray(labels, dtype=np.int32)
    return SuperpixelLabeling(
        labels, int(labels.max()) + 1, np.asarray(intensities, dtype=np.int64)
    )


class TestBinarizeTopK:
    def test_select_everything(self):
        labels = np.repeat(np.arange(3, dtype=np.int32), 4).reshape(3, 4)
        lab = manual_labeling(labels, [10, 30, 20])
        assert binarize_top_k(lab, 3).white_count() == 12

    def test_argmax(self):
        labels = np.repeat(np.arange(3, dtype=np.int32), 4).reshape(3, 4)
        lab = manual_labeling(labels, [10, 30, 20])
        mask = binarize_top_k(lab, 1)
        assert mask.white_count() == 4
        assert (mask.bits[1] == 255).all()

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(8)
        frame = random_frame(rng)
        lab = realign_labels(frame, slic_segment(frame, 12))
        k = min(5, lab.cluster_count)
        mask = binarize_top_k(lab, k)
        ranked = sorted(
            range(lab.cluster_count), key=lambda c: (-lab.cluster_intensity[c], c)
        )
        chosen = set(ranked[:k])
        expected = np.isin(lab.labels, list(chosen))
        assert np.array_equal(mask.bits == 255, expected)
        # white count equals the summed areas of the chosen clusters
        areas = np.bincount(lab.labels.ravel(), minlength=lab.cluster_count)
        assert mask.white_count() == sum(areas[c] for c in chosen)

    def test_tie_breaks_to_lower_id(self):
        labels = np.repeat(np.arange(2, dtype=np.int32), 6).reshape(2, 6)
        lab = manual_labeling(labels, [50, 50])
        mask = binarize_top_k(lab, 1)
        assert (mask.bits[0] == 255).all()
        assert (mask.bits[1] == 0).all()

    def test_k_out_of_range(self):
        labels = np.zeros((2, 2), dtype=np.int32)
        lab = manual_labeling(labels, [4])
        with pytest.raises(ValueError):
            binarize_top_k(lab, 2)


def mask_of(bits):
    return BinaryMask(np.asarray(bits, dtype=np.uint8) * 255)


class TestDice:
    def test_identity(self):
        m = mask_of([[1, 0], [0, 1]])
        assert dice_score(m, m) == 1.0

    def test_disjoint(self):
        a = mask_of([[1, 1], [0, 0]])
        b = mask_of([[0, 0], [1, 1]])
        assert dice_score(a, b) == 0.0

    def test_half_overlap(self):
        a = mask_of([[1, 1, 1, 1, 0, 0]])
        b = mask_of([[0, 0, 1, 1, 1, 1]])
        assert dice_score(a, b) == 0.5

    def test_both_empty_undefined(self):
        z = mask_of([[0, 0]])
        with pytest.raises(ValueError):
            dice_score(z, z)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dice_score(mask_of([[1]]), mask_of([[1, 0]]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
    def test_symmetric_and_bounded(self, bits_a, bits_b):
        a = mask_of(np.array([int(c) for c in f"{bits_a:016b}"]).reshape(4, 4))
        b = mask_of(np.array([int(c) for c in f"{bits_b:016b}"]).reshape(4, 4))
        if a.white_count() + b.white_count() == 0:
            return
        s_ab = dice_score(a, b)
        assert s_ab == dice_score(b, a)
        assert 0.0 <= s_ab <= 1.0
        if np.array_equal(a.bits, b.bits):
            assert s_ab == 1.0


class TestSelectOptimalFrame:
    def _identical_sequence(self, n=3):
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, (48, 64), dtype=np.uint8)
        return VideoSequence(tuple(GrayFrame(img) for _ in range(n)))

    def test_tie_breaks_to_first(self):
        seq = self._identical_sequence()
        rois = [RoiBox(8, 8, 40, 32)] * 3
        best, scores = select_optimal_frame(seq, rois, ScoringParams(top_k=4))
        assert best == 0
        assert len({s.dice for s in scores}) == 1

    def test_singleton(self):
        seq = self._identical_sequence(1)
        best, scores = select_optimal_frame(seq, [RoiBox(8, 8, 40, 32)], ScoringParams())
        assert best == 0 and len(scores) == 1

    def test_degenerate_roi_names_frame(self):
        seq = self._identical_sequence()
        rois = [RoiBox(8, 8, 40, 32), RoiBox(0, 0, 2, 2), RoiBox(8, 8, 40, 32)]
        with pytest.raises(StageError, match="frame 1"):
            select_optimal_frame(seq, rois, ScoringParams())

    def test_roi_count_mismatch(self):
        seq = self._identical_sequence()
        with pytest.raises(ValueError):
            select_optimal_frame(seq, [RoiBox(8, 8, 40, 32)], ScoringParams())

    def test_phantom_clean_frame_wins(self):
        spec = PhantomSpec(
            width=340, height=96, true_sheath_width=44, sheath_center_column=170.0,
            fat_sigma=4.0, sheath_sigma=4.0, speckle_sigma=18.0,
            clean_frame_index=4,
        )
        seq, truth = generate_phantom(spec, 8, seed=21)
        rois = [RoiBox(*truth.seed_box)] * len(seq)
        best, _ = select_optimal_frame(
            seq, rois, ScoringParams(target_clusters=100, top_k=39)
        )
        assert best == 4

    def test_appending_lower_scores_keeps_argmax(self):
        seq = self._identical_sequence(2)
        rois = [RoiBox(8, 8, 40, 32)] * 2
        params = ScoringParams(top_k=4)
        best, scores = select_optimal_frame(seq, rois, params)
        # append a frame whose score is strictly lower (empty prediction area)
        dark = GrayFrame(np.zeros((48, 64), dtype=np.uint8))
        seq2 = VideoSequence(seq.frames + (dark,))
        best2, scores2 = select_optimal_frame(seq2, rois + [RoiBox(8, 8, 40, 32)], params)
        if scores2[2].dice < scores[best].dice:
            assert best2 == best
