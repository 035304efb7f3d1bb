import numpy as np
import pytest

from hasr import audio_io, synth
from hasr.hmm import BaumWelchConfig
from hasr.recognizer import TrainConfig, train_word_models

DESK_WORDS = ("go", "stop", "yes")
DESK_SEED = 17


@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    """Small synthetic dataset: 3 words x 30 clips, Speech-Commands layout."""
    root = tmp_path_factory.mktemp("desk_data")
    synth.generate_dataset(str(root), list(DESK_WORDS), clips_per_word=30, seed=DESK_SEED)
    return str(root)


@pytest.fixture(scope="session")
def desk_index(desk_dataset):
    return audio_io.scan_dataset(desk_dataset, list(DESK_WORDS))


@pytest.fixture(scope="session")
def desk_model(desk_index):
    cfg = TrainConfig(
        words=DESK_WORDS,
        codebook_k=32,
        seed=DESK_SEED,
        bw=BaumWelchConfig(max_iters=15),
    )
    return train_word_models(desk_index, cfg)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(1234))


def write_pcm_wav(path, pcm):
    audio_io.write_wav(str(path), np.asarray(pcm, dtype=np.int16))
    return str(path)
