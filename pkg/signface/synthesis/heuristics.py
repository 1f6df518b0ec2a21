"""
Nearest-neighbour latent lookup used in place of the sampling network.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from signface.core.errors import AmbiguousPathError, InvalidInputError, ShapeError
from signface.models.features import SentenceFeatures
from signface.training.glo_trainer import interpolate_latents

logger = logging.getLogger(__name__)


@dataclass
class FeatureBank:
    """Training sentences' features next to their GLO latents."""

    features: np.ndarray
    latents: np.ndarray
    sample_ids: List[str]

    def __post_init__(self):
        if len(self.features) != len(self.latents) or len(self.features) != len(self.sample_ids):
            raise ShapeError("feature bank rows do not line up")

    def __len__(self) -> int:
        return len(self.sample_ids)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[SentenceFeatures, np.ndarray]], sample_ids: Sequence[str] = None):
        if sample_ids is None:
            sample_ids = [str(i) for i in range(len(pairs))]
        features = np.stack([f.concatenated() for f, _ in pairs]).astype(np.float32) if pairs else np.zeros((0, 0))
        latents = np.stack([np.asarray(z, dtype=np.float64) for _, z in pairs]) if pairs else np.zeros((0, 0))
        return cls(features=features, latents=latents, sample_ids=list(sample_ids))


def _cosine_distances(query: np.ndarray, bank: np.ndarray) -> np.ndarray:
    query = query.astype(np.float64)
    bank = bank.astype(np.float64)
    norms = np.linalg.norm(bank, axis=1) * np.linalg.norm(query)
    norms = np.where(norms > 0, norms, 1.0)
    return 1.0 - bank @ query / norms


def nearest_neighbor_heuristic(
    features: SentenceFeatures,
    bank: Union[FeatureBank, Sequence[Tuple[SentenceFeatures, np.ndarray]]],
) -> np.ndarray:
    """Slerp midpoint of the latents of the two closest bank sentences.

    Closeness is cosine distance on the concatenated features; ties go to
    the earlier bank entry. A bank of one returns its latent, and so do two
    antipodal neighbours, which have no unique midpoint.

    Args:
        features: Query sentence features
        bank: FeatureBank or (features, latent) pairs

    Returns:
        Unit latent code
    """
    if not isinstance(bank, FeatureBank):
        bank = FeatureBank.from_pairs(list(bank))
    if len(bank) == 0:
        raise InvalidInputError("feature bank is empty")
    if len(bank) == 1:
        return bank.latents[0].copy()

    distances = _cosine_distances(features.concatenated(), bank.features)
    order = np.lexsort((np.arange(len(bank)), distances))
    first, second = bank.latents[order[0]], bank.latents[order[1]]
    try:
        return interpolate_latents(first, second, 3)[1]
    except AmbiguousPathError:
        nearest, runner_up = bank.sample_ids[order[0]], bank.sample_ids[order[1]]
        logger.warning(f"Nearest latents {nearest} and {runner_up} are antipodal; using the nearest")
        return first.copy()
