"""
Tests for GLO training, latent projection, interpolation and checkpoints.
"""
import math

import numpy as np
import pytest
import torch

from signface.core.errors import (
    AmbiguousPathError,
    ConfigurationError,
    ContractError,
    DegenerateLatentError,
    InvalidParameterError,
    MissingArtifactError,
    ShapeError,
    TrainingDivergedError,
    VersionMismatchError,
)
from signface.models.run_config import DecoderConfig, GloTrainingConfig
from signface.networks.decoder import build_decoder, decode_batch
from signface.topology.pyramid import build_pyramid
from signface.training.artifacts import load_glo_state, load_sampler, save_glo_state
from signface.training.batching import epoch_batches
from signface.training.glo_trainer import (
    glo_loss,
    init_glo_state,
    interpolate_latents,
    project_to_sphere,
    reconstruction_l1,
    train_glo,
)
from signface.training.history import read_loss_history, write_loss_history


def _dataset(synthetic_data, count=4):
    _, sequences = synthetic_data
    return [(seq.sample_id, seq.coords) for seq in sequences[:count]]


def test_glo_loss_identical():
    x = np.random.default_rng(0).random((64, 69, 2))
    assert glo_loss(x, x) == 0.0


def test_glo_loss_constant_offset():
    x = np.random.default_rng(0).random((64, 69, 2))
    assert glo_loss(x, x + 0.5) == pytest.approx(0.5)


def test_glo_loss_single_entry():
    target = np.zeros((64, 69, 2))
    target[10, 5, 1] = 1.0
    assert glo_loss(np.zeros((64, 69, 2)), target) == pytest.approx(1.0 / (64 * 69 * 2))


def test_glo_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        glo_loss(np.zeros((64, 69, 2)), np.zeros((32, 69, 2)))


def test_glo_loss_is_differentiable():
    predicted = torch.zeros(2, 3, requires_grad=True)
    glo_loss(predicted, torch.ones(2, 3)).backward()
    assert predicted.grad is not None


def test_project_to_sphere():
    np.testing.assert_allclose(project_to_sphere([3.0, 4.0]), [0.6, 0.8])
    unit = np.array([0.6, 0.8])
    np.testing.assert_allclose(project_to_sphere(unit), unit)
    with pytest.raises(DegenerateLatentError):
        project_to_sphere([0.0, 0.0])


def test_interpolate_endpoints_only():
    z_a, z_b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    samples = interpolate_latents(z_a, z_b, 2)
    assert len(samples) == 2
    assert np.array_equal(samples[0], z_a)
    assert np.array_equal(samples[1], z_b)


def test_interpolate_identical_endpoints():
    z = np.array([0.6, 0.8])
    for sample in interpolate_latents(z, z, 5):
        np.testing.assert_allclose(sample, z)


def test_interpolate_orthogonal_midpoint():
    z_a, z_b = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    middle = interpolate_latents(z_a, z_b, 3)[1]
    np.testing.assert_allclose(middle, (z_a + z_b) / math.sqrt(2.0), atol=1e-12)


def test_interpolate_stays_on_sphere():
    rng = np.random.default_rng(2)
    z_a, z_b = (project_to_sphere(rng.standard_normal(16)) for _ in range(2))
    for sample in interpolate_latents(z_a, z_b, 16):
        assert abs(np.linalg.norm(sample) - 1.0) < 1e-9


def test_interpolate_errors():
    z = np.array([1.0, 0.0])
    with pytest.raises(AmbiguousPathError):
        interpolate_latents(z, -z, 3)
    with pytest.raises(InvalidParameterError):
        interpolate_latents(z, z, 1)
    with pytest.raises(ContractError):
        interpolate_latents(2.0 * z, z, 3)


def test_epoch_batches_cover_every_sample():
    batches = epoch_batches(5, 2, torch.Generator().manual_seed(0))
    epoch = [next(batches) for _ in range(3)]
    assert [len(b) for b in epoch] == [2, 2, 1]
    assert sorted(i for batch in epoch for i in batch) == [0, 1, 2, 3, 4]


def test_zero_iterations_returns_initial_state(pyramid, small_decoder_config, synthetic_data):
    dataset = _dataset(synthetic_data)
    config = GloTrainingConfig(iterations=0, seed=5)
    state = train_glo(dataset, config, pyramid, small_decoder_config)
    initial = init_glo_state([i for i, _ in dataset], pyramid, config, small_decoder_config)

    assert state.iteration == 0
    assert torch.equal(state.latents.detach(), initial.latents.detach())
    trained, fresh = state.decoder.state_dict(), initial.decoder.state_dict()
    assert all(torch.equal(trained[name], fresh[name]) for name in trained)


def test_latents_stay_on_unit_sphere(pyramid, small_decoder_config, synthetic_data):
    config = GloTrainingConfig(iterations=5, batch_size=2, lr_latents=1.0)
    state = train_glo(_dataset(synthetic_data), config, pyramid, small_decoder_config)
    norms = state.latents.detach().norm(dim=1)
    assert torch.all((norms - 1.0).abs() <= 1e-6)
    assert len(state.loss_history) == 5


def test_training_is_deterministic(pyramid, small_decoder_config, synthetic_data):
    config = GloTrainingConfig(iterations=4, batch_size=2)
    first = train_glo(_dataset(synthetic_data), config, pyramid, small_decoder_config)
    second = train_glo(_dataset(synthetic_data), config, pyramid, small_decoder_config)
    assert torch.equal(first.latents.detach(), second.latents.detach())
    assert [r.batch_loss for r in first.loss_history] == [r.batch_loss for r in second.loss_history]


def test_non_finite_loss_aborts(pyramid, small_decoder_config):
    """Test that a NaN target aborts at the first iteration with its batch ids."""
    dataset = [("bad", np.full((64, 69, 2), np.nan))]
    with pytest.raises(TrainingDivergedError) as excinfo:
        train_glo(dataset, GloTrainingConfig(iterations=3), pyramid, small_decoder_config)
    assert excinfo.value.iteration == 1
    assert excinfo.value.batch_ids == ["bad"]


def test_checkpoint_callback(pyramid, small_decoder_config, synthetic_data):
    seen = []
    config = GloTrainingConfig(iterations=4, checkpoint_every=2)
    dataset = _dataset(synthetic_data)
    train_glo(dataset, config, pyramid, small_decoder_config, on_checkpoint=lambda s: seen.append(s.iteration))
    assert seen == [2, 4]


def test_glo_checkpoint_round_trip(tmp_path, pyramid, small_decoder_config, synthetic_data):
    dataset = _dataset(synthetic_data)
    state = train_glo(dataset, GloTrainingConfig(iterations=3), pyramid, small_decoder_config)
    digest = save_glo_state(state, tmp_path / "glo.pt", pyramid, {"final_l1": 0.1})

    loaded = load_glo_state(tmp_path / "glo.pt", pyramid)
    assert loaded.checkpoint_id == digest
    assert loaded.sample_ids == state.sample_ids
    assert loaded.iteration == 3
    assert torch.equal(loaded.latents.detach(), state.latents.detach())
    np.testing.assert_array_equal(loaded.reconstruct(), state.reconstruct())
    assert reconstruction_l1(loaded, dataset) == pytest.approx(reconstruction_l1(state, dataset))


def test_same_seed_gives_same_checkpoint_digest(tmp_path, pyramid, small_decoder_config, synthetic_data):
    config = GloTrainingConfig(iterations=3)
    digests = []
    for name in ("a.pt", "b.pt"):
        state = train_glo(_dataset(synthetic_data), config, pyramid, small_decoder_config)
        digests.append(save_glo_state(state, tmp_path / name, pyramid))
    assert digests[0] == digests[1]


def test_checkpoint_refuses_other_topology(tmp_path, pyramid, small_decoder_config, synthetic_data):
    state = train_glo(_dataset(synthetic_data), GloTrainingConfig(iterations=0), pyramid, small_decoder_config)
    save_glo_state(state, tmp_path / "glo.pt", pyramid)
    with pytest.raises(VersionMismatchError):
        load_glo_state(tmp_path / "glo.pt", build_pyramid(k=0))


def test_checkpoint_kind_and_presence(tmp_path, pyramid, small_decoder_config, synthetic_data):
    state = train_glo(_dataset(synthetic_data), GloTrainingConfig(iterations=0), pyramid, small_decoder_config)
    save_glo_state(state, tmp_path / "glo.pt", pyramid)
    with pytest.raises(ConfigurationError):
        load_sampler(tmp_path / "glo.pt")
    with pytest.raises(MissingArtifactError):
        load_glo_state(tmp_path / "missing.pt", pyramid)


def test_loss_history_csv(tmp_path, pyramid, small_decoder_config, synthetic_data):
    state = train_glo(_dataset(synthetic_data), GloTrainingConfig(iterations=3), pyramid, small_decoder_config)
    path = write_loss_history(state.loss_history, tmp_path / "loss.csv")
    assert path.read_text().splitlines()[0] == "iteration,batch_l1,wallclock"
    records = read_loss_history(path)
    assert [r.iteration for r in records] == [1, 2, 3]


def test_interpolation_steps_are_even(pyramid, small_decoder_config, unit_latent):
    """Test that no step of a 16-sample decoded path is much larger than the typical one."""
    rng = np.random.default_rng(9)
    other = project_to_sphere(rng.standard_normal(unit_latent.shape[0]))
    path = interpolate_latents(unit_latent, other, 16)
    arcs = [np.linalg.norm(b - a) for a, b in zip(path, path[1:])]
    np.testing.assert_allclose(arcs, arcs[0], rtol=1e-6)

    decoded = decode_batch(np.stack(path), build_decoder(pyramid, small_decoder_config, seed=3))
    steps = [np.abs(b - a).mean() for a, b in zip(decoded, decoded[1:])]
    assert len(steps) == 15
    assert max(steps) <= 10.0 * np.median(steps)


@pytest.mark.slow
def test_single_sample_is_memorized(pyramid, synthetic_data):
    """Test that GLO reproduces one held face to within 1e-3 mean l1."""
    _, sequences = synthetic_data
    target = np.repeat(sequences[0].coords[:1], 64, axis=0)
    decoder_config = DecoderConfig(latent_channels=16, initial_channels=64, block_channels=[64, 64, 64, 64])
    config = GloTrainingConfig(iterations=3000, batch_size=1, log_every=500, checkpoint_every=500)
    state = train_glo([(sequences[0].sample_id, target)], config, pyramid, decoder_config)

    losses = [r.batch_loss for r in state.loss_history]
    assert np.mean(losses[-100:]) < np.mean(losses[:100])
    assert reconstruction_l1(state, [(sequences[0].sample_id, target)]) < 1e-3
