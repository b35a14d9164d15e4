import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onsdkit.frames import GrayFrame
from onsdkit.keyframe import (
    difference,
    entropy,
    extract_keyframes,
    frame_entropy,
    smooth,
)


class TestEntropy:
    def test_certainty(self):
        assert entropy([1.0]) == 0.0

    def test_uniform_eight(self):
        assert entropy([1 / 8] * 8) == pytest.approx(3.0, abs=1e-12)

    def test_hand_value(self):
        assert entropy([0.5, 0.25, 0.25]) == pytest.approx(1.5, abs=1e-12)

    def test_invalid_distribution(self):
        with pytest.raises(ValueError):
            entropy([0.5, 0.4])
        with pytest.raises(ValueError):
            entropy([-0.5, 1.5])

    def test_permutation_invariant(self):
        p = [0.1, 0.2, 0.3, 0.4]
        assert entropy(p) == pytest.approx(entropy(p[::-1]), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=32))
    def test_bounds(self, raw):
        p = np.asarray(raw) / np.sum(raw)
        value = entropy(p)
        assert -1e-12 <= value <= np.log2(p.size) + 1e-12


class TestFrameEntropy:
    def test_constant_frame(self):
        frame = GrayFrame(np.full((8, 8), 42, dtype=np.uint8))
        assert frame_entropy(frame) == 0.0

    def test_two_level_frame(self):
        img = np.zeros((8, 8), dtype=np.uint8)
        img[:4] = 255
        assert frame_entropy(GrayFrame(img)) == pytest.approx(1.0, abs=1e-12)

    def test_matches_recount_oracle(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        counts = np.zeros(256)
        for v in img.ravel():
            counts[v] += 1
        p = counts[counts > 0] / img.size
        expected = float(-(p * np.log2(p)).sum())
        assert frame_entropy(GrayFrame(img)) == pytest.approx(expected, abs=1e-12)


class TestSmooth:
    def test_window_one_identity(self):
        s = np.array([3.0, 1.0, 4.0])
        assert np.array_equal(smooth(s, 1), s)

    def test_constant_unchanged(self):
        s = np.full(9, 2.5)
        assert np.allclose(smooth(s, 5), s)

    def test_hand_case(self):
        assert smooth([0, 0, 9, 0, 0], 3).tolist() == [0, 3, 3, 3, 0]

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            smooth([1, 2, 3], 2)
        with pytest.raises(ValueError):
            smooth([1, 2, 3], 5)

    def test_mean_preserved_on_interior_mass(self):
        s = np.array([0.0, 0.0, 9.0, 0.0, 0.0])
        assert smooth(s, 3).mean() == pytest.approx(s.mean())

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=30))
    def test_never_exceeds_extremes(self, raw):
        s = np.asarray(raw)
        out = smooth(s, 3)
        assert out.max() <= s.max() + 1e-9
        assert out.min() >= s.min() - 1e-9


class TestDifference:
    def test_ramp_first_order(self):
        assert difference([0, 1, 2, 3], 1).tolist() == [1, 1, 1]

    def test_ramp_second_order(self):
        assert difference([0, 1, 2, 3], 2).tolist() == [0, 0]

    def test_hand_case(self):
        assert difference([1, 4, 9, 16], 2).tolist() == [2, 2]

    def test_too_short(self):
        with pytest.raises(ValueError):
            difference([1.0], 1)
        with pytest.raises(ValueError):
            difference([1.0, 2.0], 2)

    def test_order_validation(self):
        with pytest.raises(ValueError):
            difference([1, 2, 3], 3)

    def test_linear_second_difference_zero(self):
        s = 3.5 * np.arange(20) - 7.0
        assert np.allclose(difference(s, 2), 0.0)


class TestExtractKeyframes:
    def test_hand_case(self):
        result = extract_keyframes([1, 5, 1, 1, 7, 1], count=2, min_separation=2)
        assert set(result.indices) == {4, 1}
        assert result.indices[0] == 4  # ranked by height
        assert not result.shortfall

    def test_constant_series_shortfall(self):
        result = extract_keyframes([2.0] * 10, count=2, min_separation=2)
        assert result.indices == ()
        assert result.shortfall

    def test_single_spike_shortfall(self):
        result = extract_keyframes([0, 0, 5, 0, 0, 0], count=2, min_separation=2)
        assert result.indices == (2,)
        assert result.shortfall

    def test_separation_enforced(self):
        series = [0, 9, 8, 0, 0, 0, 7, 0]
        # make 1 and 2 local maxima candidates via distinct neighbours
        series = [0, 9, 1, 8, 0, 0, 7, 0]
        result = extract_keyframes(series, count=3, min_separation=3)
        idx = result.indices
        assert all(abs(a - b) >= 3 for i, a in enumerate(idx) for b in idx[:i])

    def test_series_shorter_than_count(self):
        with pytest.raises(ValueError):
            extract_keyframes([1.0], count=2)
