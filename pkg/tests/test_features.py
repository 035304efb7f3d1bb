import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hasr.audio_io import AudioClip
from hasr.errors import ClipTooShort, ConfigError
from hasr.features import FeatureConfig, FeatureMatrix, cmn, mfcc

from mfcc_reference import reference_mfcc

# 1 kHz unit-ish sine, first frame, cmn off: frozen from the reference script
SINE_1KHZ_FIRST_FRAME = [
    -17.619583835662162, 3.1951231359899106, -7.587030140751289,
    -8.342772770786702, -2.4921663444541533, 3.7123285393219057,
    5.070816103657005, 1.0826974353293182, -3.447303406713107,
    -4.048537273760304, -0.5028210056019388, 3.118215034551793,
    3.2124216792435814,
]


def sine_clip(freq=1000.0, amp=0.8, n=16000):
    t = np.arange(n) / 16000.0
    return AudioClip(amp * np.sin(2 * np.pi * freq * t))


class TestFraming:
    def test_one_second_frame_count(self):
        fm = mfcc(sine_clip())
        assert fm.frames.shape == (98, 13)  # 1 + (16000-400)//160
        assert fm.frame_rate == 100

    def test_too_short(self):
        with pytest.raises(ClipTooShort):
            mfcc(AudioClip(np.zeros(399)))

    @given(st.integers(min_value=400, max_value=60000))
    @settings(max_examples=30, deadline=None)
    def test_frame_count_formula(self, n):
        fm = mfcc(AudioClip(np.zeros(n)))
        assert fm.frames.shape[0] == 1 + (n - 400) // 160


class TestRecipe:
    def test_all_zero_clip_is_zero_matrix(self):
        fm = mfcc(AudioClip(np.zeros(16000)), FeatureConfig(cmn=True))
        assert fm.frames.shape == (98, 13)
        assert np.all(fm.frames == 0.0)

    def test_sine_first_frame_matches_frozen_reference(self):
        fm = mfcc(sine_clip(), FeatureConfig(cmn=False))
        np.testing.assert_allclose(fm.frames[0], SINE_1KHZ_FIRST_FRAME, atol=1e-9)

    def test_sine_energy_peaks_at_nearest_mel_filter(self):
        # centers equally spaced in mel; index 8 (921.5 Hz) is nearest 1 kHz
        def mel(f):
            return 2595.0 * math.log10(1.0 + f / 700.0)

        def mel_inv(m):
            return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

        centers = [mel_inv(mel(8000.0) * i / 27.0) for i in range(1, 27)]
        nearest = min(range(26), key=lambda j: abs(centers[j] - 1000.0))

        # energies recomputed with the naive reference pipeline up to the filterbank
        x = sine_clip().samples
        y = [x[0]] + [x[i] - 0.97 * x[i - 1] for i in range(1, 400)]
        w = [0.54 - 0.46 * math.cos(2 * math.pi * i / 399) for i in range(400)]
        padded = [y[i] * w[i] for i in range(400)] + [0.0] * 112
        energies = []
        for j in range(26):
            left, center, right = (
                [0.0] + centers)[j], centers[j], (centers + [8000.0])[j + 1]
            total = 0.0
            for k in range(257):
                f = k * 16000.0 / 512.0
                if left <= f <= center:
                    weight = (f - left) / (center - left)
                elif center < f <= right:
                    weight = (right - f) / (right - center)
                else:
                    continue
                re = sum(padded[i] * math.cos(-2 * math.pi * k * i / 512) for i in range(512))
                im = sum(padded[i] * math.sin(-2 * math.pi * k * i / 512) for i in range(512))
                total += weight * (re * re + im * im)
            energies.append(total)
        assert int(np.argmax(energies)) == nearest == 8

    @pytest.mark.parametrize("use_cmn", [False, True])
    def test_matches_reference_on_random_clips(self, rng, use_cmn):
        for _ in range(3):
            n = int(rng.integers(400, 1200))
            x = rng.uniform(-0.5, 0.5, n)
            ref = reference_mfcc(x, cmn=use_cmn)
            got = mfcc(AudioClip(x), FeatureConfig(cmn=use_cmn)).frames
            np.testing.assert_allclose(got, ref, atol=1e-10)


class TestProperties:
    def test_gain_invariance_with_cmn(self, rng):
        x = rng.uniform(-0.4, 0.4, 16000)
        base = mfcc(AudioClip(x), FeatureConfig(cmn=True)).frames
        for c in (0.5, 2.0):
            scaled = mfcc(AudioClip(c * x), FeatureConfig(cmn=True)).frames
            np.testing.assert_allclose(scaled, base, atol=1e-6)

    def test_silence_is_finite(self):
        for clip in (np.zeros(4000), np.full(4000, 1e-12)):
            fm = mfcc(AudioClip(clip))
            assert np.all(np.isfinite(fm.frames))

    def test_random_input_is_finite(self, rng):
        fm = mfcc(AudioClip(rng.uniform(-1, 1, 8000)))
        assert np.all(np.isfinite(fm.frames))


class TestCmn:
    def test_single_frame_becomes_zero(self):
        fm = FeatureMatrix(frames=np.arange(1.0, 14.0)[None, :])
        assert np.all(cmn(fm).frames == 0.0)

    def test_already_zero_mean_unchanged(self, rng):
        v = rng.normal(size=13)
        fm = FeatureMatrix(frames=np.vstack([v, -v]))
        np.testing.assert_array_equal(cmn(fm).frames, fm.frames)

    def test_column_means_vanish(self, rng):
        fm = FeatureMatrix(frames=rng.normal(size=(10, 13)))
        out = cmn(fm)
        assert np.all(np.abs(out.frames.mean(axis=0)) < 1e-9)
        assert out.frames.shape == fm.frames.shape


class TestConfig:
    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            FeatureConfig(frame_len=600, fft_size=512)
        with pytest.raises(ConfigError):
            FeatureConfig(n_ceps=30, n_mel=26)
        with pytest.raises(ConfigError):
            FeatureConfig(preemphasis=1.0)
