import json

import numpy as np
import pytest

from hasr import audio_io, hmm, vq
from hasr.audio_io import AudioClip
from hasr.errors import ConfigError, InsufficientData, ModelFormatError
from hasr.features import mfcc
from hasr.hmm import BaumWelchConfig, Hmm, baum_welch, forward_scaled, sample
from hasr.recognizer import (
    TrainConfig,
    WordModelSet,
    evaluate,
    left_right_initial,
    load_model,
    model_to_dict,
    recognize,
    save_model,
    score_sequence,
    train_word_models,
)
from hasr.synth import synth_clip


class TestTrainConfig:
    def test_defaults_valid(self):
        cfg = TrainConfig(words=("go", "stop"))
        assert cfg.n_states == 5 and cfg.skip == 2 and cfg.codebook_k == 64

    def test_single_state_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(words=("go",), n_states=1)

    def test_bad_skip_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(words=("go",), skip=3)

    def test_duplicate_words_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(words=("go", "go"))


class TestLeftRightInitial:
    def test_topology(self):
        h = left_right_initial(n_states=5, skip=2, n_symbols=8)
        assert hmm.validate(h) == []
        assert h.pi.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]
        np.testing.assert_allclose(h.a[0, :3], 1 / 3)
        assert np.all(h.a[0, 3:] == 0.0)
        np.testing.assert_allclose(h.a[3, 3:], 0.5)
        assert h.a[4, 4] == 1.0  # absorbing final state
        assert np.all(h.a[np.tril_indices(5, k=-1)] == 0.0)
        np.testing.assert_allclose(h.b, 1 / 8)

    def test_skip_one(self):
        h = left_right_initial(n_states=3, skip=1, n_symbols=4)
        np.testing.assert_allclose(np.diag(h.a)[:2], 0.5)
        assert h.a[0, 2] == 0.0


class TestKnownTruthSeparation:
    def test_models_separate_disjoint_sources(self):
        """Sequences from two disjoint-emission HMMs: each trained word model
        must out-score the other on its own training sequences."""
        truth_a = Hmm(
            pi=[1.0, 0.0],
            a=[[0.8, 0.2], [0.0, 1.0]],
            b=[[0.6, 0.4, 0.0, 0.0], [0.3, 0.7, 0.0, 0.0]],
        )
        truth_b = Hmm(
            pi=[1.0, 0.0],
            a=[[0.7, 0.3], [0.0, 1.0]],
            b=[[0.0, 0.0, 0.5, 0.5], [0.0, 0.0, 0.8, 0.2]],
        )
        seqs = {
            "alpha": [sample(truth_a, 20, s) for s in range(10)],
            "bravo": [sample(truth_b, 20, 100 + s) for s in range(10)],
        }
        trained = {}
        for word, sequences in seqs.items():
            h0 = left_right_initial(n_states=3, skip=2, n_symbols=4)
            trained[word], _ = baum_welch(h0, sequences, BaumWelchConfig(max_iters=10))

        hits = total = 0
        for word, sequences in seqs.items():
            other = "bravo" if word == "alpha" else "alpha"
            for s in sequences:
                own = forward_scaled(trained[word], s).log_likelihood / len(s)
                try:
                    their = forward_scaled(trained[other], s).log_likelihood / len(s)
                except Exception:
                    their = float("-inf")
                hits += own > their
                total += 1
        assert hits / total >= 0.95


def tiny_model_set(models: dict[str, Hmm], k=4) -> WordModelSet:
    from hasr.features import FeatureConfig

    rng = np.random.Generator(np.random.PCG64(0))
    return WordModelSet(
        codebook=vq.Codebook(centroids=rng.normal(size=(k, 13))),
        models=models,
        feature_cfg=FeatureConfig(),
    )


class TestScoring:
    def test_neg_inf_loses_to_low_score(self):
        impossible = Hmm(pi=[1.0], a=[[1.0]], b=[[1.0, 0.0, 0.0, 0.0]])
        uniform = Hmm(pi=[1.0], a=[[1.0]], b=[[0.25, 0.25, 0.25, 0.25]])
        ms = tiny_model_set({"impossible": impossible, "uniform": uniform})
        seq = vq.SymbolSequence(np.array([1, 2, 3]))
        scores = score_sequence(ms, seq)
        assert scores["impossible"] == float("-inf")
        assert scores["uniform"] < 0
        assert scores["uniform"] > scores["impossible"]

    def test_score_is_loglikelihood_over_t(self, desk_model):
        clip = AudioClip.from_int16(synth_clip("go", seed=555))
        rec = recognize(desk_model, clip)
        fm = mfcc(clip, desk_model.feature_cfg)
        symbols = vq.quantize(desk_model.codebook, fm)
        for word, model in desk_model.models.items():
            expected = forward_scaled(model, symbols).log_likelihood / len(symbols)
            assert rec.scores[word] == expected
        assert rec.t_frames == len(symbols)

    def test_argmax_invariant_to_constant_shift(self):
        # adding a constant to every per-frame score cannot change the argmax
        scores = {"a": -3.0, "b": -1.5, "c": -2.2}
        for shift in (-10.0, 0.0, 7.5):
            shifted = {w: s + shift for w, s in scores.items()}
            assert max(shifted, key=shifted.get) == "b"


class TestRecognize:
    def test_recognizes_training_word(self, desk_model):
        for word in ("go", "stop", "yes"):
            clip = AudioClip.from_int16(synth_clip(word, seed=777))
            rec = recognize(desk_model, clip)
            assert rec.best_word == word

    def test_threshold_infinity_rejects(self, desk_model):
        clip = AudioClip.from_int16(synth_clip("go", seed=778))
        rec = recognize(desk_model, clip, threshold=float("inf"))
        assert rec.best_word is None

    def test_tie_breaks_lexicographically(self, desk_model):
        same = desk_model.models["go"]
        ms = WordModelSet(
            codebook=desk_model.codebook,
            models={"zeta": same, "alpha": same},
            feature_cfg=desk_model.feature_cfg,
        )
        clip = AudioClip.from_int16(synth_clip("go", seed=779))
        assert recognize(ms, clip).best_word == "alpha"


class TestEvaluate:
    def test_degenerate_classifier_scores_half(self, desk_dataset, desk_model):
        # identical models for both words -> lexicographic argmax always "go"
        index = audio_io.scan_dataset(desk_dataset, ["go", "stop"])
        ms = WordModelSet(
            codebook=desk_model.codebook,
            models={"go": desk_model.models["go"], "stop": desk_model.models["go"]},
            feature_cfg=desk_model.feature_cfg,
        )
        report = evaluate(ms, index)
        assert report.accuracy == pytest.approx(0.5)
        assert report.per_word_accuracy["go"] == 1.0
        assert report.per_word_accuracy["stop"] == 0.0

    def test_confusion_accounting(self, desk_index, desk_model):
        report = evaluate(desk_model, desk_index)
        n_by_word = {}
        for entry in desk_index.split_entries("Test"):
            n_by_word[entry.label] = n_by_word.get(entry.label, 0) + 1
        for word, row in report.confusion.items():
            assert sum(row.values()) == n_by_word[word]
        total = sum(sum(row.values()) for row in report.confusion.values())
        assert total == report.n_test
        diag = sum(report.confusion[w][w] for w in report.confusion)
        assert report.accuracy == pytest.approx(diag / report.n_test)


class TestTraining:
    def test_insufficient_data(self, tmp_path):
        from hasr.synth import generate_dataset

        generate_dataset(str(tmp_path), ["go", "stop"], clips_per_word=6, seed=1)
        index = audio_io.scan_dataset(str(tmp_path), ["go", "stop"])
        with pytest.raises(InsufficientData, match="go"):
            train_word_models(index, TrainConfig(words=("go", "stop"), codebook_k=8))

    def test_deterministic_training(self, desk_index):
        cfg = TrainConfig(words=("go", "stop"), codebook_k=8, seed=3,
                          bw=BaumWelchConfig(max_iters=3))
        first = train_word_models(desk_index, cfg)
        second = train_word_models(desk_index, cfg)
        assert json.dumps(model_to_dict(first)) == json.dumps(model_to_dict(second))


class TestModelFile:
    def test_round_trip(self, desk_model, tmp_path):
        path = str(tmp_path / "m.hasr.json")
        save_model(desk_model, path)
        loaded = load_model(path)
        assert loaded.words() == desk_model.words()
        np.testing.assert_array_equal(loaded.codebook.centroids, desk_model.codebook.centroids)
        for word in desk_model.words():
            np.testing.assert_array_equal(loaded.models[word].a, desk_model.models[word].a)
        # a re-save is byte-identical
        path2 = str(tmp_path / "m2.hasr.json")
        save_model(loaded, path2)
        assert open(path, "rb").read() == open(path2, "rb").read()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFormatError):
            load_model(str(tmp_path / "nope.hasr.json"))

    def test_wrong_version_rejected(self, desk_model, tmp_path):
        doc = model_to_dict(desk_model)
        doc["format_version"] = 2
        path = tmp_path / "bad.hasr.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="format_version"):
            load_model(str(path))

    def test_broken_stochasticity_rejected(self, desk_model, tmp_path):
        doc = model_to_dict(desk_model)
        doc["words"][0]["pi"][0] = 0.5  # pi no longer sums to 1
        path = tmp_path / "bad2.hasr.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            load_model(str(path))

    def test_nonfinite_centroid_rejected(self, desk_model, tmp_path):
        doc = model_to_dict(desk_model)
        doc["codebook"]["centroids"][0][0] = float("nan")
        path = tmp_path / "bad3.hasr.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="finite"):
            load_model(str(path))

    def test_symbol_count_mismatch_rejected(self, desk_model, tmp_path):
        doc = model_to_dict(desk_model)
        doc["codebook"]["centroids"] = doc["codebook"]["centroids"][:-1]
        doc["codebook"]["k"] -= 1
        path = tmp_path / "bad4.hasr.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="symbols"):
            load_model(str(path))
