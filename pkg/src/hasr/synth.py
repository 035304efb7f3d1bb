"""Seeded synthetic word surrogates: tone-stack "formant" segments plus noise,
shaped like 1-second Speech-Commands clips.

Used for offline demos and for exercising the full pipeline when the public
dataset is not on disk. Every clip is a pure function of (word, seed, index).
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

from . import audio_io
from .audio_io import SAMPLE_RATE

CLIP_SAMPLES = SAMPLE_RATE  # one-second clips
NOISE_AMP = 1e-3
TONE_AMP = 0.35
RAMP_MS = 8

# (duration_ms, formant frequencies); () means an unvoiced noise burst
RECIPES: dict[str, list[tuple[int, tuple[float, ...]]]] = {
    "go": [(120, (250.0, 950.0)), (210, (340.0, 1250.0))],
    "stop": [(80, ()), (140, (520.0, 1620.0)), (130, (270.0, 860.0))],
    "yes": [(150, (370.0, 2080.0)), (200, (300.0, 1740.0))],
    "no": [(140, (280.0, 1100.0)), (190, (420.0, 700.0))],
    "up": [(130, (440.0, 1900.0)), (90, ())],
    "down": [(150, (300.0, 760.0)), (180, (250.0, 1350.0))],
    "left": [(120, (400.0, 1500.0)), (100, (200.0, 2200.0)), (70, ())],
    "right": [(110, (330.0, 1050.0)), (160, (480.0, 1800.0))],
    "on": [(170, (390.0, 1450.0))],
    "off": [(140, (310.0, 2000.0)), (80, ())],
    "start": [(80, ()), (150, (450.0, 1300.0)), (140, (260.0, 1900.0))],
}


def _word_entropy(word: str) -> int:
    return int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "big")


def recipe_for(word: str) -> list[tuple[int, tuple[float, ...]]]:
    """Known words get the hand-tuned recipe; others a hash-derived one."""
    if word in RECIPES:
        return RECIPES[word]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(_word_entropy(word))))
    segments = []
    for _ in range(2 + int(rng.random() * 2)):  # 2..3 segments
        dur = 100 + int(rng.random() * 100)
        low = 200.0 + float(rng.random()) * 400.0
        high = 700.0 + float(rng.random()) * 1700.0
        segments.append((dur, (round(low), round(high))))
    return segments


def _clip_rng(word: str, seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed, _word_entropy(word), index])
    return np.random.Generator(np.random.PCG64(ss))


def _ramp(n: int) -> np.ndarray:
    ramp_len = min(n // 2, int(RAMP_MS * SAMPLE_RATE / 1000))
    env = np.ones(n)
    if ramp_len > 0:
        edge = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp_len) / ramp_len)
        env[:ramp_len] = edge
        env[-ramp_len:] = edge[::-1]
    return env


def synth_clip(word: str, seed: int, index: int = 0) -> np.ndarray:
    """One 16000-sample int16 clip of the word surrogate."""
    rng = _clip_rng(word, seed, index)
    noise_amp = NOISE_AMP * (0.7 + 0.6 * rng.random())
    samples = rng.normal(0.0, noise_amp, CLIP_SAMPLES)

    pos = int((0.06 + 0.08 * rng.random()) * SAMPLE_RATE)  # 60..140 ms lead-in
    amp = TONE_AMP * (0.8 + 0.4 * rng.random())
    for dur_ms, freqs in recipe_for(word):
        n = int(dur_ms * (0.9 + 0.2 * rng.random()) * SAMPLE_RATE / 1000)
        n = min(n, CLIP_SAMPLES - pos)
        if n <= 0:
            break
        if freqs:
            t = np.arange(n) / SAMPLE_RATE
            burst = np.zeros(n)
            for f in freqs:
                f_jit = f * (1.0 + 0.03 * (2.0 * rng.random() - 1.0))
                burst += np.sin(2.0 * np.pi * f_jit * t + 2.0 * np.pi * rng.random())
            burst *= amp / len(freqs)
        else:
            burst = rng.normal(0.0, amp * 0.5, n)
        samples[pos : pos + n] += burst * _ramp(n)
        pos += n
    return audio_io.float_to_int16(samples)


def generate_dataset(root: str, words: list[str], clips_per_word: int, seed: int) -> None:
    """Write `root/<word>/<index>.wav` for every word, Speech-Commands layout."""
    for word in words:
        word_dir = os.path.join(root, word)
        os.makedirs(word_dir, exist_ok=True)
        for i in range(clips_per_word):
            audio_io.write_wav(os.path.join(word_dir, f"{i:05d}.wav"), synth_clip(word, seed, i))


def make_stream(words: list[str], seed: int, gap_ms: int = 700) -> np.ndarray:
    """Concatenate word clips separated by low-noise gaps, as one int16 stream."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, len(words)])))
    gap_len = int(gap_ms * SAMPLE_RATE / 1000)

    def gap() -> np.ndarray:
        return audio_io.float_to_int16(rng.normal(0.0, NOISE_AMP, gap_len))

    parts = [gap()]
    for i, word in enumerate(words):
        parts.append(synth_clip(word, seed, 10_000 + i))
        parts.append(gap())
    return np.concatenate(parts)
