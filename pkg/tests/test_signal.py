"""Framing, normalization and context-window tests."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bedrr.errors import InvalidSample, OutOfRange, TooShort
from bedrr.signal import (
    ContextWindow,
    Frame,
    NormalizedFrame,
    WaveformRecord,
    context_matrix,
    frame_matrix,
    frame_signal,
    normalize,
    normalize_frames,
    stack_context,
)


class TestNormalize:
    def test_zero_maps_to_zero(self):
        assert normalize(0.0, 10.0) == 0.0

    def test_known_value(self):
        # direct scalar evaluation of the scaled/shifted sigmoid
        assert normalize(0.1, 10.0) == pytest.approx(0.231059, abs=1e-6)

    def test_odd_symmetry_known_value(self):
        assert normalize(-0.1, 10.0) == pytest.approx(-0.231059, abs=1e-6)

    @given(st.floats(min_value=-1e6, max_value=1e6),
           st.floats(min_value=1e-3, max_value=1e3))
    def test_output_in_open_interval(self, x, sigma):
        y = normalize(x, sigma)
        assert -0.5 <= y <= 0.5
        if abs(x) < 30.0 / sigma:
            assert -0.5 < y < 0.5

    @given(st.floats(min_value=-100, max_value=100))
    def test_odd_symmetry(self, x):
        assert normalize(-x, 10.0) == pytest.approx(-normalize(x, 10.0),
                                                    abs=1e-12)

    def test_monotone(self):
        xs = np.linspace(-5, 5, 201)
        ys = normalize(xs, 10.0)
        assert np.all(np.diff(ys) > 0)

    def test_rejects_nan(self):
        with pytest.raises(InvalidSample):
            normalize(float("nan"), 10.0)

    def test_rejects_bad_sigma(self):
        with pytest.raises(InvalidSample):
            normalize(0.1, 0.0)


class TestFraming:
    def test_one_minute_gives_sixty_frames(self):
        w = WaveformRecord(samples=np.arange(600.0), fs=10)
        assert len(frame_signal(w)) == 60

    def test_exactly_one_frame(self):
        w = WaveformRecord(samples=np.arange(10.0), fs=10)
        frames = frame_signal(w)
        assert len(frames) == 1
        assert frames[0].index == 1

    def test_partial_tail_discarded(self):
        w = WaveformRecord(samples=np.arange(19.0), fs=10)
        frames = frame_signal(w)
        assert len(frames) == 1
        np.testing.assert_array_equal(frames[0].values, np.arange(10.0))

    def test_too_short(self):
        with pytest.raises(TooShort):
            frame_signal(WaveformRecord(samples=np.arange(9.0), fs=10))

    def test_concat_reproduces_prefix(self):
        rng = np.random.default_rng(0)
        samples = rng.standard_normal(237)
        w = WaveformRecord(samples=samples, fs=10)
        frames = frame_signal(w)
        rebuilt = np.concatenate([f.values for f in frames])
        np.testing.assert_array_equal(rebuilt, samples[:230])

    def test_record_rejects_nonfinite(self):
        with pytest.raises(InvalidSample):
            WaveformRecord(samples=np.array([1.0, np.inf]), fs=10)

    def test_record_rejects_bad_fs(self):
        with pytest.raises(InvalidSample):
            WaveformRecord(samples=np.arange(10.0), fs=0)


class TestStackContext:
    def _frames(self, n=10, fs=10, seed=0):
        rng = np.random.default_rng(seed)
        return [NormalizedFrame(i + 1, rng.uniform(-0.5, 0.5, fs))
                for i in range(n)]

    def test_radius_zero_is_identity(self):
        frames = self._frames()
        win = stack_context(frames, 4, 0)
        np.testing.assert_array_equal(win.values, frames[3].values)

    def test_paper_config_dimension(self):
        frames = self._frames(n=9)
        win = stack_context(frames, 5, 3)
        assert win.values.size == 70    # (2*3+1) frames of 10 samples

    def test_no_left_neighbour(self):
        with pytest.raises(OutOfRange):
            stack_context(self._frames(), 1, 1)

    def test_no_right_neighbour(self):
        with pytest.raises(OutOfRange):
            stack_context(self._frames(n=5), 5, 1)

    def test_frame_major_ordering(self):
        frames = self._frames(n=3, fs=2)
        win = stack_context(frames, 2, 1)
        expected = np.concatenate([frames[0].values, frames[1].values,
                                   frames[2].values])
        np.testing.assert_array_equal(win.values, expected)

    def test_context_matrix_matches_stack(self):
        frames = self._frames(n=12)
        norm = np.vstack([f.values for f in frames])
        mat = context_matrix(norm, 2)
        assert mat.shape == (8, 50)
        for k in range(8):
            win = stack_context(frames, k + 3, 2)
            np.testing.assert_array_equal(mat[k], win.values)


class TestNormalizeFrames:
    def test_values_transformed(self):
        w = WaveformRecord(samples=np.linspace(-1, 1, 30), fs=10)
        frames = frame_signal(w)
        norm = normalize_frames(frames, sigma=10.0)
        assert all(isinstance(f, NormalizedFrame) for f in norm)
        np.testing.assert_allclose(norm[0].values,
                                   normalize(frames[0].values, 10.0))
