import pytest

from hashsem import SynthConfig, generate, load_stopwords
from hashsem.synth import write_synth


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture(scope="session")
def small_synth():
    """A small synthetic corpus and its ledger (fast enough for unit tests)."""
    return generate(SynthConfig(seed=7, n_users=300, n_hashtags=16, community_count=3))


@pytest.fixture(scope="session")
def small_synth_dir(tmp_path_factory, small_synth):
    out = tmp_path_factory.mktemp("synth")
    write_synth(*small_synth, out)
    return out
