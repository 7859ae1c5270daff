"""Shared fixtures: a small synthetic dataset plus its feature cache."""

import numpy as np
import pytest

from traitnet.pipeline import generate_synthetic_dataset, get_feature_cache


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("synth")


@pytest.fixture(scope="session")
def synth_manifest(synth_dir):
    return generate_synthetic_dataset(10, 0, synth_dir)


@pytest.fixture(scope="session")
def synth_cache(synth_manifest, synth_dir):
    return get_feature_cache(synth_manifest, synth_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
