import pytest

from citefid.synth import generate_corpus


@pytest.fixture(scope="session")
def synthetic_corpus():
    return generate_corpus(seed=42, n_papers=200)
