"""Protocol-compatible transcription server backed by a pretrained Whisper model."""

__version__ = "0.1.0"
