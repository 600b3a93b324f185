"""
Shared fixtures for the rectification test suite.

Hypothesis profiles:
    fast   few examples, for local iteration (default)
    ci     more examples, no deadline

Select one with HYPOTHESIS_PROFILE=ci. Tests marked ``slow`` (overfit
training runs) only run when DOCTR_SLOW=1.
"""

import os

import hypothesis
import numpy as np
import pytest

from rectifier import GeneratedDataset, GeoConfig, IllConfig, SegConfig, gen_sample

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


def pytest_collection_modifyitems(config, items):
    if os.environ.get("DOCTR_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="long acceptance run; set DOCTR_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# =============================================================================
# Tiny models
# =============================================================================


@pytest.fixture
def tiny_geo_config() -> GeoConfig:
    return GeoConfig(
        image_size=16, head_channels=(4, 4, 8), hidden_dim=8, depth=1, heads=2, ffn_dim=16, tail_dim=8
    )


@pytest.fixture
def tiny_ill_config() -> IllConfig:
    return IllConfig(
        patch_size=8, mini_patch=2, head_channels=2, depth=1, heads=2, ffn_dim=16, perceptual_channels=(4, 4, 4)
    )


@pytest.fixture
def tiny_seg_config() -> SegConfig:
    return SegConfig(image_size=16, channels=(4, 4, 8))


# =============================================================================
# Synthetic data
# =============================================================================


@pytest.fixture(scope="session")
def sample():
    return gen_sample(3)


@pytest.fixture(scope="session")
def dataset():
    return GeneratedDataset.from_seed(0, 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
