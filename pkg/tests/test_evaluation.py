"""
Tests for the Frechet distance, FED and the landmark distance metrics.
"""
import numpy as np
import pytest
import torch

from signface.core.errors import CovarianceError, InvalidInputError, ShapeError
from signface.evaluation.frechet import fit_gaussian, frechet_distance
from signface.evaluation.metrics import (
    avg_landmark_distance_distribution,
    fed,
    mouth_corner_lift,
    region_distances,
    sentiment_consistency,
)
from signface.models.run_config import FedTrainingConfig
from signface.networks.fed_autoencoder import FedAutoencoder
from signface.preprocessing.synthetic import generate_synthetic_dataset
from signface.training.fed_trainer import FedModel, build_fed_autoencoder, train_fed_autoencoder


@pytest.fixture(scope="module")
def labelled():
    _, sequences = generate_synthetic_dataset(24, seed=1)
    by_label = {}
    for seq in sequences:
        by_label.setdefault(seq.sentiment_label, []).append(seq.coords)
    return by_label


@pytest.fixture(scope="module")
def untrained_fed():
    return FedModel(build_fed_autoencoder(feature_dim=4, seed=0), 4, "untrained", 0)


def test_frechet_identical_gaussians():
    assert frechet_distance([0.0], [[1.0]], [0.0], [[1.0]]) == pytest.approx(0.0, abs=1e-12)


def test_frechet_mean_shift():
    assert frechet_distance([0.0], [[1.0]], [1.0], [[1.0]]) == pytest.approx(1.0)


def test_frechet_variance_change():
    """Test N(0, 1) against N(0, 4): 1 + 4 - 2 * 2."""
    assert frechet_distance([0.0], [[1.0]], [0.0], [[4.0]]) == pytest.approx(1.0)


def test_frechet_shape_mismatch():
    with pytest.raises(ShapeError):
        frechet_distance([0.0, 0.0], np.eye(2), [0.0], [[1.0]])


def test_fit_gaussian_needs_two_rows():
    with pytest.raises(CovarianceError):
        fit_gaussian(np.ones((1, 3)))


def test_fit_gaussian_stabilizes_covariance():
    stats = fit_gaussian(np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]))
    np.testing.assert_allclose(stats.mean, [1.0, 2.0])
    np.testing.assert_allclose(stats.cov, 1e-6 * np.eye(2))


def test_region_distances_identical():
    x = np.random.default_rng(0).random((64, 69, 2))
    distances = region_distances(x, x)
    assert distances.mouth == distances.eyebrows == distances.jaw_lips == 0.0


def test_region_distances_uniform_offset():
    x = np.random.default_rng(0).random((64, 69, 2))
    shifted = x.copy()
    shifted[..., 0] += 0.1
    distances = region_distances(shifted, x)
    assert distances.mouth == pytest.approx(0.1)
    assert distances.eyebrows == pytest.approx(0.1)
    assert distances.jaw_lips == pytest.approx(0.1)


def test_region_distances_mouth_only_offset():
    x = np.zeros((64, 69, 2))
    shifted = x.copy()
    shifted[:, 48:68, 1] += 0.1
    distances = region_distances(shifted, x)
    assert distances.mouth == pytest.approx(0.1)
    assert distances.eyebrows == 0.0
    assert distances.jaw_lips == pytest.approx(0.1 * 20 / 37)


def test_region_distances_grow_with_noise():
    rng = np.random.default_rng(5)
    x = rng.random((64, 69, 2))
    noise = rng.standard_normal((64, 69, 2))
    sweep = [region_distances(x + sigma * noise, x) for sigma in (0.01, 0.05, 0.1, 0.2)]
    for region in ("mouth", "eyebrows", "jaw_lips"):
        values = [getattr(d, region) for d in sweep]
        assert values == sorted(values)
        assert values[0] < values[-1]


def test_distribution_of_identical_pairs():
    x = np.random.default_rng(0).random((64, 69, 2))
    distribution = avg_landmark_distance_distribution([(x, x), (x, x)])
    assert distribution.counts[0] == 2
    assert sum(distribution.counts) == 2
    assert distribution.mean == 0.0


def test_distribution_of_a_single_pair():
    x = np.zeros((64, 69, 2))
    distribution = avg_landmark_distance_distribution([(x + 0.3, x)], bins=5)
    assert sum(distribution.counts) == 1
    assert len(distribution.bin_edges) == 6
    assert distribution.values == [pytest.approx(0.3)]


def test_distribution_needs_pairs():
    with pytest.raises(InvalidInputError):
        avg_landmark_distance_distribution([])


def test_mouth_corner_lift_by_hand():
    coords = np.zeros((2, 69, 2))
    coords[:, 33, 1] = 0.5
    coords[:, 48, 1] = 0.3
    coords[:, 54, 1] = 0.3
    assert mouth_corner_lift(coords) == pytest.approx(0.2)


def test_joy_lifts_corners_more_than_anger(labelled):
    """Test the mouth-corner statistic on synthetic joy and anger faces."""
    assert sentiment_consistency(labelled["joy"], labelled["anger"]) == 1.0
    with pytest.raises(InvalidInputError):
        sentiment_consistency(labelled["joy"], labelled["anger"][:1])


def test_fed_of_a_set_with_itself(untrained_fed, labelled):
    """Test that FED of a set with itself vanishes, even for an untrained encoder."""
    assert fed(labelled["joy"], labelled["joy"], untrained_fed) == pytest.approx(0.0, abs=1e-6)


def test_fed_separates_sentiments(untrained_fed, labelled):
    same = fed(labelled["joy"], labelled["joy"], untrained_fed)
    different = fed(labelled["joy"], labelled["anger"], untrained_fed)
    assert different > same


def test_fed_rejects_empty_sets(untrained_fed, labelled):
    with pytest.raises(InvalidInputError):
        fed([], labelled["joy"], untrained_fed)


def test_fed_training_needs_two_samples(labelled):
    with pytest.raises(InvalidInputError):
        train_fed_autoencoder(labelled["joy"][:1])


def test_fed_training_and_encoding(labelled):
    config = FedTrainingConfig(iterations=3, batch_size=4, feature_dim=4)
    model = train_fed_autoencoder(labelled["joy"] + labelled["anger"], config)
    assert len(model.loss_history) == 3
    assert model.final_mse is not None
    first = model.encode(labelled["joy"])
    second = model.encode(labelled["joy"])
    assert first.shape == (len(labelled["joy"]), 4)
    assert np.array_equal(first, second)


def test_fed_autoencoder_gradcheck():
    """Finite-difference check on a reduced autoencoder (3 vertices, 8 frames)."""
    for seed in range(5):
        torch.manual_seed(seed)
        autoencoder = FedAutoencoder(feature_dim=2, num_vertices=3, num_frames=8, channels=(4, 4, 4)).double()
        sequences = torch.randn(2, 8, 3, 2, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(autoencoder, (sequences,))


def test_frechet_is_symmetric_on_full_covariances():
    rng = np.random.default_rng(12)
    a, b = rng.standard_normal((32, 32)), rng.standard_normal((32, 32))
    cov1 = a @ a.T / 32 + 0.1 * np.eye(32)
    cov2 = b @ b.T / 32 + 0.1 * np.eye(32)
    mu1, mu2 = rng.standard_normal(32), rng.standard_normal(32)

    forward = frechet_distance(mu1, cov1, mu2, cov2)
    assert forward > 0.0
    assert frechet_distance(mu2, cov2, mu1, cov1) == pytest.approx(forward, rel=1e-6)
    assert frechet_distance(mu1, cov1, mu1, cov1) == pytest.approx(0.0, abs=1e-6)


def test_fed_ignores_sample_order(untrained_fed, labelled):
    generated = labelled["joy"] + labelled["sadness"]
    reference = labelled["anger"] + labelled["sadness"]
    order = np.random.default_rng(3).permutation(len(generated))
    shuffled = [generated[i] for i in order]
    expected = fed(generated, reference, untrained_fed)
    assert fed(shuffled, reference[::-1], untrained_fed) == pytest.approx(expected, rel=1e-4, abs=1e-9)
