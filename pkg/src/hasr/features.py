"""MFCC front end: waveform -> T x 13 matrix of cepstral coefficients.

Pipeline order: pre-emphasis, framing, Hamming window, zero-padded FFT,
power spectrum, 26 triangular mel filters over 0-8000 Hz, log with floor,
orthonormal DCT-II keeping coefficients 0..12, optional per-utterance
cepstral mean normalization.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .audio_io import AudioClip
from .errors import ClipTooShort, ConfigError


@dataclass(frozen=True)
class FeatureConfig:
    frame_len: int = 400
    hop: int = 160
    fft_size: int = 512
    n_mel: int = 26
    n_ceps: int = 13
    preemphasis: float = 0.97
    cmn: bool = True
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.frame_len > self.fft_size:
            raise ConfigError(f"frame_len {self.frame_len} > fft_size {self.fft_size}")
        if not (0 < self.n_ceps <= self.n_mel):
            raise ConfigError(f"need 0 < n_ceps <= n_mel, got {self.n_ceps}/{self.n_mel}")
        if not (0 <= self.preemphasis < 1):
            raise ConfigError(f"preemphasis {self.preemphasis} outside [0, 1)")
        if self.log_floor <= 0:
            raise ConfigError("log_floor must be positive")

    def digest(self) -> str:
        blob = json.dumps(self.__dict__, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(**d)


@dataclass(frozen=True)
class FeatureMatrix:
    frames: np.ndarray  # T x n_ceps
    frame_rate: int = 100
    config_hash: str = ""

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mel: int, fft_size: int, sample_rate: int) -> np.ndarray:
    """Triangular filters, centers equally spaced in mel from 0 Hz to Nyquist.

    Triangle weights are evaluated at the FFT bin frequencies k * sr / fft_size,
    so adjacent filters overlap 50% in mel.
    """
    n_bins = fft_size // 2 + 1
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mel + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_bins) * sample_rate / fft_size

    bank = np.zeros((n_mel, n_bins))
    for j in range(n_mel):
        left, center, right = hz_points[j], hz_points[j + 1], hz_points[j + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        bank[j] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def frame_count(n_samples: int, cfg: FeatureConfig) -> int:
    return 1 + (n_samples - cfg.frame_len) // cfg.hop


def preemphasize(x: np.ndarray, coeff: float) -> np.ndarray:
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - coeff * x[:-1]
    return y


def mfcc(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> FeatureMatrix:
    """Extract MFCCs from a clip. Raises ClipTooShort below one frame."""
    x = np.asarray(clip.samples, dtype=np.float64)
    if len(x) < cfg.frame_len:
        raise ClipTooShort(f"{len(x)} samples < frame_len {cfg.frame_len}")

    y = preemphasize(x, cfg.preemphasis)
    t_frames = frame_count(len(y), cfg)
    offsets = np.arange(t_frames) * cfg.hop
    frames = y[offsets[:, None] + np.arange(cfg.frame_len)]

    n = np.arange(cfg.frame_len)
    window = 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (cfg.frame_len - 1))
    spectrum = np.fft.rfft(frames * window, n=cfg.fft_size, axis=1)
    power = np.abs(spectrum) ** 2

    bank = mel_filterbank(cfg.n_mel, cfg.fft_size, clip.sample_rate)
    energies = power @ bank.T
    log_energies = np.log(np.maximum(energies, cfg.log_floor))

    ceps = dct(log_energies, type=2, norm="ortho", axis=1)[:, : cfg.n_ceps]
    if cfg.cmn:
        ceps = _subtract_column_means(ceps)
    return FeatureMatrix(frames=ceps, frame_rate=clip.sample_rate // cfg.hop,
                         config_hash=cfg.digest())


def _subtract_column_means(frames: np.ndarray) -> np.ndarray:
    # mean via deviations from the first row, so identical rows cancel exactly
    mean = frames[0] + (frames - frames[0]).mean(axis=0)
    return frames - mean


def cmn(fm: FeatureMatrix) -> FeatureMatrix:
    """Subtract the per-utterance mean of each coefficient column."""
    return FeatureMatrix(frames=_subtract_column_means(fm.frames),
                         frame_rate=fm.frame_rate, config_hash=fm.config_hash)
