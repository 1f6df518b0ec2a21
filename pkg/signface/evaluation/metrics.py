"""
FED, region-wise landmark distances and distance distributions.
"""
import logging
from typing import List, Sequence, Tuple

import numpy as np

from signface.core.config import REGION_INDICES
from signface.core.errors import InvalidInputError, ShapeError
from signface.evaluation.frechet import fit_gaussian, frechet_distance
from signface.models.report import DistanceDistribution, RegionDistances

logger = logging.getLogger(__name__)

NOSE_TIP = 33
MOUTH_CORNERS = (48, 54)


def _coords(sequence) -> np.ndarray:
    return np.asarray(getattr(sequence, "coords", sequence), dtype=np.float64)


def fed(generated: Sequence, reference: Sequence, model) -> float:
    """Frechet Expression Distance between two sets of sequences.

    Args:
        generated: Generated sequences
        reference: Ground-truth sequences
        model: FedModel whose encoder defines the feature space

    Returns:
        FED value
    """
    if len(generated) == 0 or len(reference) == 0:
        raise InvalidInputError("FED needs non-empty generated and reference sets")

    generated_features = model.encode(generated)
    reference_features = model.encode(reference)
    for name, features in (("generated", generated_features), ("reference", reference_features)):
        if features.shape[0] < features.shape[1]:
            logger.warning(
                f"FED {name} set has {features.shape[0]} samples for {features.shape[1]} feature dimensions"
            )

    first = fit_gaussian(generated_features)
    second = fit_gaussian(reference_features)
    return frechet_distance(first.mean, first.cov, second.mean, second.cov)


def _pointwise_distances(generated, reference) -> np.ndarray:
    generated, reference = _coords(generated), _coords(reference)
    if generated.shape != reference.shape:
        raise ShapeError(f"sequences differ in shape: {generated.shape} vs {reference.shape}")
    return np.linalg.norm(generated - reference, axis=-1)


def region_distances(generated, reference) -> RegionDistances:
    """Mean per-landmark Euclidean distance per facial region.

    Args:
        generated: (T, 69, 2) generated sequence
        reference: (T, 69, 2) reference sequence

    Returns:
        RegionDistances
    """
    distances = _pointwise_distances(generated, reference)
    return RegionDistances(**{
        region: float(distances[:, list(indices)].mean())
        for region, indices in REGION_INDICES.items()
    })


def average_landmark_distance(generated, reference) -> float:
    return float(_pointwise_distances(generated, reference).mean())


def avg_landmark_distance_distribution(pairs: List[Tuple], bins: int = 20) -> DistanceDistribution:
    """Histogram of the per-pair mean landmark distance.

    Args:
        pairs: (generated, reference) sequence pairs
        bins: Number of histogram bins

    Returns:
        DistanceDistribution with the raw values
    """
    if not pairs:
        raise InvalidInputError("distance distribution needs at least one pair")

    values = np.array([average_landmark_distance(g, r) for g, r in pairs])
    upper = float(values.max()) or 1.0
    counts, edges = np.histogram(values, bins=bins, range=(0.0, upper))
    return DistanceDistribution(
        values=values.tolist(),
        bin_edges=edges.tolist(),
        counts=counts.tolist(),
        mean=float(values.mean()),
    )


def mouth_corner_lift(sequence) -> float:
    """Nose-tip y minus mean mouth-corner y, averaged over frames.

    Image coordinates grow downwards, so raised corners give larger values.
    """
    coords = _coords(sequence)
    corners = coords[:, list(MOUTH_CORNERS), 1].mean(axis=1)
    return float((coords[:, NOSE_TIP, 1] - corners).mean())


def sentiment_consistency(joy_outputs: Sequence, anger_outputs: Sequence) -> float:
    """Fraction of sentences whose joy-forced output lifts the corners more than the anger-forced one."""
    if len(joy_outputs) != len(anger_outputs) or not joy_outputs:
        raise InvalidInputError("sentiment consistency needs matching non-empty output lists")
    wins = sum(mouth_corner_lift(j) > mouth_corner_lift(a) for j, a in zip(joy_outputs, anger_outputs))
    return wins / len(joy_outputs)
