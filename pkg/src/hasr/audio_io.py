"""WAV loading and directory-per-word dataset scanning.

Only 16 kHz mono 16-bit PCM is accepted; anything else is rejected rather
than resampled so the feature pipeline never sees a silent quality variable.
"""

from __future__ import annotations

import os
import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyWordDirectory, MissingWordDirectory, NotFound, UnsupportedFormat

SAMPLE_RATE = 16000
INT16_SCALE = 32768.0

TRAIN = "Train"
TEST = "Test"


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM audio, samples normalized to [-1.0, 1.0]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    source_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    @classmethod
    def from_int16(cls, pcm: np.ndarray, source_path: str | None = None) -> "AudioClip":
        return cls(pcm.astype(np.float64) / INT16_SCALE, SAMPLE_RATE, source_path)

    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class DatasetEntry:
    label: str
    path: str
    split: str  # TRAIN or TEST


@dataclass(frozen=True)
class DatasetIndex:
    entries: list[DatasetEntry] = field(default_factory=list)

    def split_entries(self, split: str) -> list[DatasetEntry]:
        return [e for e in self.entries if e.split == split]

    def words(self) -> list[str]:
        return sorted({e.label for e in self.entries})


def read_wav_int16(path: str) -> np.ndarray:
    """Read a 16 kHz mono 16-bit PCM WAV file as a raw int16 array."""
    if not os.path.isfile(path):
        raise NotFound(f"no such file: {path}")
    try:
        with wave.open(path, "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise UnsupportedFormat(f"{path}: compression {wf.getcomptype()!r}, need PCM")
            if wf.getnchannels() != 1:
                raise UnsupportedFormat(f"{path}: {wf.getnchannels()} channels, need mono")
            if wf.getsampwidth() != 2:
                raise UnsupportedFormat(
                    f"{path}: {8 * wf.getsampwidth()}-bit samples, need 16-bit"
                )
            if wf.getframerate() != SAMPLE_RATE:
                raise UnsupportedFormat(
                    f"{path}: sample rate {wf.getframerate()}, need {SAMPLE_RATE}"
                )
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormat(f"{path}: not a PCM RIFF/WAVE file ({exc})") from exc
    return np.frombuffer(raw, dtype="<i2")


def read_wav(path: str) -> AudioClip:
    """Load a WAV file, mapping int16 samples to floats via s / 32768."""
    return AudioClip.from_int16(read_wav_int16(path), source_path=path)


def write_wav(path: str, pcm: np.ndarray) -> None:
    """Write int16 samples as 16 kHz mono PCM WAV (test/synth helper)."""
    pcm = np.asarray(pcm, dtype="<i2")
    with wave.open(path, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE)
        wf.writeframes(pcm.tobytes())


def float_to_int16(samples: np.ndarray) -> np.ndarray:
    """Quantize [-1, 1] floats to int16 with clipping."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.round(x * INT16_SCALE), -32768, 32767).astype("<i2")


def assign_split(index_in_word: int) -> str:
    """Every 5th file (indices 4, 9, 14, ...) of the sorted per-word list is Test."""
    return TEST if index_in_word % 5 == 4 else TRAIN


def scan_dataset(root: str, words: list[str]) -> DatasetIndex:
    """Index `root/<word>/*.wav`, deterministically split 80/20 per word.

    Paths are sorted lexicographically within each word before split
    assignment, so repeated scans of the same tree yield identical indices.
    """
    entries: list[DatasetEntry] = []
    for word in words:
        word_dir = os.path.join(root, word)
        if not os.path.isdir(word_dir):
            raise MissingWordDirectory(word)
        paths = sorted(
            os.path.join(word_dir, name)
            for name in os.listdir(word_dir)
            if name.endswith(".wav")
        )
        if not paths:
            raise EmptyWordDirectory(word)
        for i, path in enumerate(paths):
            entries.append(DatasetEntry(label=word, path=path, split=assign_split(i)))
    entries.sort(key=lambda e: e.path)
    return DatasetIndex(entries=entries)
