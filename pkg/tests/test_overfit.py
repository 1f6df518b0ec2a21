"""
Overfitting runs on the synthetic dataset: GLO and the sampler memorize the
training samples, overridden sentiments move the mouth corners, the FED
autoencoder reconstructs its data and inference stays fast.
"""
import time

import numpy as np
import pytest

from signface.evaluation.metrics import fed, mouth_corner_lift, sentiment_consistency
from signface.features.extractor import FeatureExtractor
from signface.features.stub import StubBackend
from signface.models.run_config import DecoderConfig, FedTrainingConfig, GloTrainingConfig, SamplerTrainingConfig
from signface.networks.decoder import build_decoder, decode
from signface.networks.sampler import build_sampler
from signface.preprocessing.synthetic import generate_synthetic_dataset
from signface.synthesis.inference import infer
from signface.training.fed_trainer import train_fed_autoencoder
from signface.training.glo_trainer import reconstruction_l1, train_glo
from signface.training.sampler_trainer import mean_cosine_loss, train_sampler

pytestmark = pytest.mark.slow

OVERFIT_DECODER = DecoderConfig(latent_channels=64, initial_channels=128, block_channels=[64, 32, 32, 32])


@pytest.fixture(scope="module")
def glo_run(pyramid, synthetic_data):
    """GLO fitted to all eight synthetic samples; checkpoint latent norms recorded."""
    _, sequences = synthetic_data
    dataset = [(seq.sample_id, seq.coords) for seq in sequences]
    norms = []
    config = GloTrainingConfig(iterations=2000, batch_size=8, checkpoint_every=250, log_every=500)
    state = train_glo(
        dataset,
        config,
        pyramid,
        OVERFIT_DECODER,
        on_checkpoint=lambda s: norms.append(s.latents.detach().norm(dim=1).numpy().copy()),
    )
    return state, dataset, norms


@pytest.fixture(scope="module")
def extractor():
    return FeatureExtractor(StubBackend())


@pytest.fixture(scope="module")
def sampler_run(glo_run, extractor, synthetic_data):
    state, _, _ = glo_run
    _, sequences = synthetic_data
    pairs = [(extractor.extract(seq.text), state.latent(seq.sample_id)) for seq in sequences]
    sampler = train_sampler(pairs, SamplerTrainingConfig(steps=2000, batch_size=8, lr=1e-3, log_every=500))
    return sampler, pairs


@pytest.fixture(scope="module")
def fed_model(synthetic_data):
    _, sequences = synthetic_data
    return train_fed_autoencoder(sequences, FedTrainingConfig(iterations=2000, batch_size=8, log_every=500))


def test_glo_memorizes_the_training_set(glo_run):
    state, dataset, norms = glo_run
    assert reconstruction_l1(state, dataset) < 0.01
    assert state.loss_history[-1].wallclock < 300.0

    assert len(norms) == 8
    for checkpoint in norms:
        assert np.all(np.abs(checkpoint - 1.0) <= 1e-6)


def test_sampler_memorizes_glo_latents(sampler_run):
    sampler, pairs = sampler_run
    assert mean_cosine_loss(sampler.network, pairs) < 0.01


def test_inference_reproduces_glo_reconstruction(glo_run, sampler_run, extractor, synthetic_data):
    """Test that text in, sequence out lands next to the decoding of the sample's GLO latent."""
    state, _, _ = glo_run
    sampler, _ = sampler_run
    _, sequences = synthetic_data
    for seq in sequences:
        generated = infer(seq.text, extractor, sampler.network, state.decoder)
        reconstructed = decode(state.latent(seq.sample_id), state.decoder)
        assert np.mean(np.abs(generated.coords - reconstructed.coords)) < 0.05


def test_joy_override_lifts_mouth_corners_over_anger(glo_run, sampler_run, extractor):
    state, _, _ = glo_run
    sampler, _ = sampler_run
    manifest, _ = generate_synthetic_dataset(32, seed=1)
    texts = [record.text for record in manifest.by_split("test")]
    assert len(texts) == 8

    joy = [infer(text, extractor, sampler.network, state.decoder, sentiment_override="joy") for text in texts]
    anger = [infer(text, extractor, sampler.network, state.decoder, sentiment_override="anger") for text in texts]
    for first, second in zip(joy, anger):
        assert not np.array_equal(first.coords, second.coords)
    assert sum(mouth_corner_lift(j) > mouth_corner_lift(a) for j, a in zip(joy, anger)) >= 7
    assert sentiment_consistency(joy, anger) >= 7 / 8


def test_fed_autoencoder_reconstructs_its_data(fed_model, synthetic_data):
    _, sequences = synthetic_data
    assert fed_model.reconstruction_mse(sequences) < 1e-3


def test_fed_grows_with_noise(fed_model):
    _, sequences = generate_synthetic_dataset(48, seed=2)
    reference = np.stack([seq.coords for seq in sequences])
    noise = np.random.default_rng(0).standard_normal(reference.shape)

    assert fed(reference, reference, fed_model) < 1e-6
    values = [fed(reference + epsilon * noise, reference, fed_model) for epsilon in (0.01, 0.05, 0.1)]
    assert values[0] < values[1] < values[2]


def test_single_inference_is_fast(pyramid, extractor):
    """Test that one sentence is synthesized in under a second with default-size networks."""
    decoder = build_decoder(pyramid)
    sampler = build_sampler()
    infer("I am so happy about the garden", extractor, sampler, decoder)

    start = time.perf_counter()
    output = infer("I hate the weather on monday", extractor, sampler, decoder)
    elapsed = time.perf_counter() - start
    assert output.coords.shape == (64, 69, 2)
    assert elapsed < 1.0
