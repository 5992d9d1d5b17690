import sys
from pathlib import Path

import pytest

from mixtext.embeddings import hash_model
from mixtext.lexicon import load_dictionary

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def english():
    return load_dictionary(DATA_DIR / "words_en.txt")


@pytest.fixture(scope="session")
def model():
    return hash_model(dim=12)


@pytest.fixture(scope="session")
def planted(tmp_path_factory, english):
    """Planted-error corpus built once; tests must not mutate its inputs."""
    from synth import build_planted_corpus

    return build_planted_corpus(tmp_path_factory.mktemp("planted"), english)
