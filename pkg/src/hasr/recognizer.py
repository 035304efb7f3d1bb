"""Per-word left-right HMMs over a shared VQ codebook: training, maximum-
likelihood isolated-word recognition, and the evaluation harness.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import audio_io, hmm, vq
from .audio_io import AudioClip, DatasetIndex
from .errors import ConfigError, InsufficientData, ModelFormatError, ZeroProbabilitySequence
from .features import FeatureConfig, mfcc
from .hmm import BaumWelchConfig, Hmm

FORMAT_VERSION = 1
MODEL_SUFFIX = ".hasr.json"
MIN_TRAIN_CLIPS = 10


@dataclass(frozen=True)
class TrainConfig:
    words: tuple[str, ...]
    n_states: int = 5
    skip: int = 2
    codebook_k: int = 64
    seed: int = 17
    bw: BaumWelchConfig = BaumWelchConfig()
    features: FeatureConfig = FeatureConfig()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if len(self.words) == 0:
            raise ConfigError("word list is empty")
        if len(set(self.words)) != len(self.words):
            raise ConfigError("word list has duplicates")
        if self.n_states < 2:
            raise ConfigError(f"n_states must be >= 2, got {self.n_states}")
        if not (1 <= self.skip <= 2):
            raise ConfigError(f"skip must be 1 or 2, got {self.skip}")
        if self.codebook_k < 1:
            raise ConfigError(f"codebook_k must be >= 1, got {self.codebook_k}")


@dataclass(frozen=True)
class WordModelSet:
    codebook: vq.Codebook
    models: dict[str, Hmm]
    feature_cfg: FeatureConfig
    format_version: int = FORMAT_VERSION

    def words(self) -> list[str]:
        return sorted(self.models)


@dataclass(frozen=True)
class Recognition:
    best_word: str | None  # None means rejected
    scores: dict[str, float]  # per-frame normalized log-likelihood
    t_frames: int


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    n_test: int
    confusion: dict[str, dict[str, int]]  # true label -> predicted label -> count
    per_word_accuracy: dict[str, float]


def left_right_initial(n_states: int, skip: int, n_symbols: int) -> Hmm:
    """Bakis start model: uniform transitions over {stay, ..., +skip},
    absorbing last state, uniform emissions."""
    pi = np.zeros(n_states)
    pi[0] = 1.0
    a = np.zeros((n_states, n_states))
    for i in range(n_states):
        reach = range(i, min(i + skip, n_states - 1) + 1)
        for j in reach:
            a[i, j] = 1.0 / len(reach)
    b = np.full((n_states, n_symbols), 1.0 / n_symbols)
    return Hmm(pi=pi, a=a, b=b)


def train_word_models(index: DatasetIndex, cfg: TrainConfig) -> WordModelSet:
    """Train the shared codebook on all pooled training frames, then one
    left-right HMM per word via Baum-Welch. Fully deterministic for a seed."""
    return train_word_models_report(index, cfg)[0]


def train_word_models_report(
    index: DatasetIndex, cfg: TrainConfig
) -> tuple[WordModelSet, dict[str, list[float]]]:
    """As train_word_models, also returning each word's log-likelihood history."""
    train_entries = index.split_entries(audio_io.TRAIN)
    by_word: dict[str, list] = {w: [] for w in cfg.words}
    for entry in train_entries:
        if entry.label in by_word:
            by_word[entry.label].append(entry)
    for word in cfg.words:
        if len(by_word[word]) < MIN_TRAIN_CLIPS:
            raise InsufficientData(word, len(by_word[word]), MIN_TRAIN_CLIPS)

    features = {
        entry.path: mfcc(audio_io.read_wav(entry.path), cfg.features)
        for word in cfg.words
        for entry in by_word[word]
    }
    pooled = np.concatenate(
        [features[e.path].frames for w in cfg.words for e in by_word[w]], axis=0
    )
    codebook = vq.train_codebook(pooled, cfg.codebook_k, cfg.seed)

    models: dict[str, Hmm] = {}
    histories: dict[str, list[float]] = {}
    for word in cfg.words:
        sequences = [vq.quantize(codebook, features[e.path]) for e in by_word[word]]
        h0 = left_right_initial(cfg.n_states, cfg.skip, cfg.codebook_k)
        trained, history = hmm.baum_welch(h0, sequences, cfg.bw)
        models[word] = trained
        histories[word] = history
    ms = WordModelSet(codebook=codebook, models=models, feature_cfg=cfg.features)
    return ms, histories


def score_sequence(ms: WordModelSet, symbols: vq.SymbolSequence) -> dict[str, float]:
    """Per-frame normalized log-likelihood per word; impossible -> -inf."""
    scores = {}
    for word in ms.words():
        try:
            result = hmm.forward_scaled(ms.models[word], symbols)
            scores[word] = result.log_likelihood / len(symbols)
        except ZeroProbabilitySequence:
            scores[word] = float("-inf")
    return scores


def recognize(ms: WordModelSet, clip: AudioClip, threshold: float | None = None) -> Recognition:
    """Maximum-likelihood word decision; ties break lexicographically."""
    fm = mfcc(clip, ms.feature_cfg)
    symbols = vq.quantize(ms.codebook, fm)
    scores = score_sequence(ms, symbols)

    ordered = sorted(scores)  # lexicographic order makes ties deterministic
    best_word: str | None = ordered[0]
    best = scores[best_word]
    for word in ordered[1:]:
        if scores[word] > best:
            best, best_word = scores[word], word
    if threshold is not None and best < threshold:
        best_word = None
    return Recognition(best_word=best_word, scores=scores, t_frames=fm.n_frames)


def evaluate(ms: WordModelSet, index: DatasetIndex) -> EvalReport:
    """Recognize every Test clip with no rejection threshold and tabulate."""
    test_entries = index.split_entries(audio_io.TEST)
    words = ms.words()
    unknown = sorted({e.label for e in test_entries} - set(words))
    if unknown:
        raise ConfigError(f"test labels without models: {unknown}")

    confusion = {true: {pred: 0 for pred in words} for true in words}
    for entry in test_entries:
        rec = recognize(ms, audio_io.read_wav(entry.path), threshold=None)
        confusion[entry.label][rec.best_word] += 1

    n_test = len(test_entries)
    correct = sum(confusion[w][w] for w in words)
    per_word = {}
    for w in words:
        row_total = sum(confusion[w].values())
        per_word[w] = confusion[w][w] / row_total if row_total else 0.0
    return EvalReport(
        accuracy=correct / n_test if n_test else 0.0,
        n_test=n_test,
        confusion=confusion,
        per_word_accuracy=per_word,
    )


def model_to_dict(ms: WordModelSet) -> dict:
    return {
        "format_version": ms.format_version,
        "feature_cfg": ms.feature_cfg.to_dict(),
        "codebook": {
            "k": ms.codebook.k,
            "dim": ms.codebook.dim,
            "centroids": ms.codebook.centroids.tolist(),
        },
        "words": [
            {
                "label": word,
                "pi": ms.models[word].pi.tolist(),
                "a": ms.models[word].a.tolist(),
                "b": ms.models[word].b.tolist(),
            }
            for word in ms.words()
        ],
    }


def save_model(ms: WordModelSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(ms), f, separators=(",", ":"))
        f.write("\n")


def load_model(path: str) -> WordModelSet:
    """Load and validate a model file; any broken invariant is a hard error."""
    if not os.path.isfile(path):
        raise ModelFormatError(f"no such model file: {path}")
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc

    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: format_version {doc.get('format_version')!r}, "
                               f"expected {FORMAT_VERSION}")
    try:
        feature_cfg = FeatureConfig.from_dict(doc["feature_cfg"])
        cb_doc = doc["codebook"]
        centroids = np.asarray(cb_doc["centroids"], dtype=np.float64)
        if centroids.shape != (cb_doc["k"], cb_doc["dim"]):
            raise ModelFormatError(
                f"{path}: centroid shape {centroids.shape} != ({cb_doc['k']}, {cb_doc['dim']})"
            )
        if not np.all(np.isfinite(centroids)):
            raise ModelFormatError(f"{path}: non-finite centroid values")
        codebook = vq.Codebook(centroids=centroids)

        models: dict[str, Hmm] = {}
        for entry in doc["words"]:
            label = entry["label"]
            if label in models:
                raise ModelFormatError(f"{path}: duplicate word {label!r}")
            model = Hmm(pi=np.asarray(entry["pi"]), a=np.asarray(entry["a"]),
                        b=np.asarray(entry["b"]))
            if model.n_symbols != codebook.k:
                raise ModelFormatError(
                    f"{path}: word {label!r} has {model.n_symbols} symbols, "
                    f"codebook has {codebook.k}"
                )
            violations = hmm.validate(model)
            if violations:
                raise ModelFormatError(f"{path}: word {label!r}: {'; '.join(violations)}")
            models[label] = model
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model document ({exc})") from exc
    if not models:
        raise ModelFormatError(f"{path}: no word models")
    return WordModelSet(codebook=codebook, models=models, feature_cfg=feature_cfg)
