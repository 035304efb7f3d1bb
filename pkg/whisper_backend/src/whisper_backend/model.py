"""Pretrained speech model loading and transcription.

Supports the openai-whisper package and, as a fallback, transformers'
Whisper checkpoints. Either path may be unavailable offline; load_model
raises ModelUnavailable with the reason so the server and tests can react.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODEL_SIZES = ("tiny", "small", "medium")


class ModelUnavailable(Exception):
    pass


class TranscriptionFailed(Exception):
    pass


@dataclass(frozen=True)
class BackendConfig:
    model_size: str = "medium"
    listen_host: str = "127.0.0.1"
    listen_port: int = 7322
    device: str = "cpu"

    def __post_init__(self):
        if self.model_size not in MODEL_SIZES:
            raise ValueError(
                f"model_size must be one of {MODEL_SIZES}, got {self.model_size!r}"
            )


class SpeechModel:
    """Transcribes 16 kHz mono int16 PCM. Not safe for concurrent calls."""

    concurrent_safe = False

    def transcribe_pcm(self, pcm: bytes) -> tuple[str, int]:
        """Return (text, confidence_bp); confidence 0 when the model has none."""
        raise NotImplementedError


class WhisperPackageModel(SpeechModel):
    def __init__(self, model, size: str):
        self._model = model
        self.size = size

    def transcribe_pcm(self, pcm: bytes) -> tuple[str, int]:
        audio = np.frombuffer(pcm, dtype="<i2").astype(np.float32) / 32768.0
        try:
            result = self._model.transcribe(audio, fp16=False)
        except Exception as exc:
            raise TranscriptionFailed(str(exc)) from exc
        return result.get("text", "").strip(), 0


class TransformersWhisperModel(SpeechModel):
    def __init__(self, processor, model, size: str):
        self._processor = processor
        self._model = model
        self.size = size

    def transcribe_pcm(self, pcm: bytes) -> tuple[str, int]:
        audio = np.frombuffer(pcm, dtype="<i2").astype(np.float32) / 32768.0
        try:
            inputs = self._processor(audio, sampling_rate=16000, return_tensors="pt")
            generated = self._model.generate(inputs.input_features)
            text = self._processor.batch_decode(generated, skip_special_tokens=True)[0]
        except Exception as exc:
            raise TranscriptionFailed(str(exc)) from exc
        return text.strip(), 0


def load_model(cfg: BackendConfig) -> SpeechModel:
    """Load the requested architecture size via whichever stack is present."""
    reasons = []
    try:
        import whisper
    except ImportError as exc:
        reasons.append(f"openai-whisper not importable ({exc})")
    else:
        try:
            return WhisperPackageModel(
                whisper.load_model(cfg.model_size, device=cfg.device), cfg.model_size
            )
        except Exception as exc:
            reasons.append(f"whisper.load_model failed ({exc})")

    try:
        from transformers import WhisperForConditionalGeneration, WhisperProcessor
    except ImportError as exc:
        reasons.append(f"transformers not importable ({exc})")
    else:
        name = f"openai/whisper-{cfg.model_size}"
        try:
            processor = WhisperProcessor.from_pretrained(name)
            model = WhisperForConditionalGeneration.from_pretrained(name)
            return TransformersWhisperModel(processor, model, cfg.model_size)
        except Exception as exc:
            reasons.append(f"transformers checkpoint {name} failed ({str(exc)[:120]})")

    raise ModelUnavailable("; ".join(reasons))
