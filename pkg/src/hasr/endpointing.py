"""Energy-based utterance segmentation for carving a sample stream into
isolated-word candidates.

The noise floor is the median energy of the leading frames, and the speech
threshold is a multiple of it, so decisions are invariant to uniform gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .errors import ClipTooShort

MIN_FRAMES = 10
NOISE_FLOOR_MIN = 1e-8


@dataclass(frozen=True)
class EndpointConfig:
    frame_len: int = 400
    hop: int = 160
    threshold_ratio: float = 4.0
    min_speech_ms: int = 100
    hangover_ms: int = 300
    pad_ms: int = 100

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")

    def frames_for_ms(self, ms: int, sample_rate: int) -> int:
        return max(1, int(round(ms * sample_rate / 1000.0 / self.hop)))


@dataclass(frozen=True)
class Segment:
    start_sample: int  # inclusive
    end_sample: int    # exclusive
    peak_energy: float


def frame_energies(samples: np.ndarray, cfg: EndpointConfig) -> np.ndarray:
    n_frames = 1 + (len(samples) - cfg.frame_len) // cfg.hop
    offsets = np.arange(n_frames) * cfg.hop
    frames = samples[offsets[:, None] + np.arange(cfg.frame_len)]
    return (frames ** 2).sum(axis=1) / cfg.frame_len


def segment(clip: AudioClip, cfg: EndpointConfig = EndpointConfig()) -> list[Segment]:
    """Detect speech segments in a clip.

    Speech opens after min_speech_ms consecutive frames above
    noise_floor * threshold_ratio and closes after hangover_ms consecutive
    frames below it; pad_ms is added on both sides, clamped to clip bounds.
    """
    samples = np.asarray(clip.samples, dtype=np.float64)
    if len(samples) < cfg.frame_len + (MIN_FRAMES - 1) * cfg.hop:
        raise ClipTooShort(f"need at least {MIN_FRAMES} frames, got {len(samples)} samples")

    energies = frame_energies(samples, cfg)
    noise_floor = max(float(np.median(energies[:MIN_FRAMES])), NOISE_FLOOR_MIN)
    threshold = noise_floor * cfg.threshold_ratio
    active = energies > threshold

    sr = clip.sample_rate
    min_frames = cfg.frames_for_ms(cfg.min_speech_ms, sr)
    hang_frames = cfg.frames_for_ms(cfg.hangover_ms, sr)
    pad = int(round(cfg.pad_ms * sr / 1000.0))

    segments: list[Segment] = []
    in_speech = False
    run_start = 0       # first frame of the current active run
    run_len = 0
    last_active = 0     # most recent active frame while in speech
    quiet = 0

    def close(start_frame: int, end_frame: int):
        start = max(0, start_frame * cfg.hop - pad)
        end = min(len(samples), end_frame * cfg.hop + cfg.frame_len + pad)
        peak = float(energies[start_frame : end_frame + 1].max())
        segments.append(Segment(start_sample=start, end_sample=end, peak_energy=peak))

    for t, is_active in enumerate(active):
        if not in_speech:
            if is_active:
                if run_len == 0:
                    run_start = t
                run_len += 1
                if run_len >= min_frames:
                    in_speech = True
                    last_active = t
                    quiet = 0
            else:
                run_len = 0
        else:
            if is_active:
                last_active = t
                quiet = 0
            else:
                quiet += 1
                if quiet >= hang_frames:
                    close(run_start, last_active)
                    in_speech = False
                    run_len = 0
    if in_speech:
        close(run_start, last_active)
    return segments
