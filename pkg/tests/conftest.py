"""
Shared fixtures for the test suite.
"""
import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path so we can import the package
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from signface.models.run_config import (  # noqa: E402
    DecoderConfig,
    FedTrainingConfig,
    GloTrainingConfig,
    RunConfig,
    SamplerTrainingConfig,
)
from signface.preprocessing.synthetic import generate_synthetic_dataset  # noqa: E402
from signface.topology.pyramid import build_pyramid  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training tests")


@pytest.fixture(scope="session")
def pyramid():
    """Default five-level pyramid."""
    return build_pyramid()


@pytest.fixture
def small_decoder_config():
    """Decoder with the real pyramid and output shape but few channels."""
    return DecoderConfig(latent_channels=8, initial_channels=16, block_channels=[8, 8, 8, 8])


@pytest.fixture
def unit_latent():
    rng = np.random.default_rng(7)
    z = rng.standard_normal(16)
    return z / np.linalg.norm(z)


@pytest.fixture(scope="session")
def synthetic_data():
    """(manifest, sequences) of the 8-sample synthetic dataset."""
    return generate_synthetic_dataset(8, seed=0)


@pytest.fixture
def small_run_config(tmp_path):
    """Run configuration with tiny budgets writing under tmp_path."""
    config = RunConfig(
        decoder=DecoderConfig(latent_channels=8, initial_channels=16, block_channels=[8, 8, 8, 8]),
        glo=GloTrainingConfig(iterations=6, batch_size=4, checkpoint_every=3, log_every=3),
        sampler=SamplerTrainingConfig(steps=6, batch_size=4, hidden_dim=16, log_every=3),
        fed=FedTrainingConfig(iterations=4, batch_size=4, feature_dim=4, log_every=2),
    )
    config.paths.output_dir = str(tmp_path / "artifacts")
    config.paths.checkpoints = str(tmp_path / "artifacts" / "checkpoints")
    return config
