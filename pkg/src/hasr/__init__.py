"""Hybrid keyword-spotting ASR: an on-device discrete-HMM recognizer over
VQ-quantized MFCC features, plus a framed TCP protocol for offloading
utterance audio to a remote transcription server."""

__version__ = "0.1.0"
