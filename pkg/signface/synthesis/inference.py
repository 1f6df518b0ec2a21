"""
Four-step inference: features, sampler, sphere projection, decoding.
"""
import logging
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from signface.core.errors import DegenerateLatentError, DegenerateVectorError
from signface.features.extractor import FeatureExtractor
from signface.models.features import SentenceFeatures
from signface.models.landmarks import ExpressionSequence
from signface.networks.decoder import decode
from signface.networks.sampler import SamplingNetwork
from signface.synthesis.heuristics import FeatureBank, nearest_neighbor_heuristic
from signface.training.glo_trainer import project_to_sphere

logger = logging.getLogger(__name__)

LatentSource = Union[SamplingNetwork, FeatureBank]


def sample_latent(features: SentenceFeatures, source: LatentSource) -> np.ndarray:
    """Unit latent for sentence features, from the sampler or a feature bank."""
    if isinstance(source, FeatureBank):
        return nearest_neighbor_heuristic(features, source)

    parameter = next(source.parameters())
    source.eval()
    with torch.no_grad():
        raw = source(torch.as_tensor(features.concatenated()[None], dtype=parameter.dtype))[0]
    try:
        return project_to_sphere(raw.numpy())
    except DegenerateLatentError as e:
        raise DegenerateVectorError(f"sampler output for '{features.source_text}' has zero norm") from e


def infer(
    text: str,
    extractor: FeatureExtractor,
    source: LatentSource,
    decoder: nn.Module,
    sentiment_override: Optional[str] = None,
) -> ExpressionSequence:
    """Synthesize the facial gesture of a sentence.

    Args:
        text: Sentence
        extractor: Feature extractor over the embedding backend
        source: Trained sampling network, or a feature bank
        decoder: Trained decoder
        sentiment_override: Label whose prototype replaces the sentiment embedding

    Returns:
        ExpressionSequence with text and sentiment metadata
    """
    features = extractor.extract(text, sentiment_override=sentiment_override)
    z = sample_latent(features, source)
    metadata = {
        "text": text,
        "sentiment_label": features.sentiment_label or "",
        "sentiment_source": "override" if sentiment_override else "backend",
    }
    return decode(z, decoder, metadata)


def synthesize_batch(
    items: Iterable[Tuple[str, str]],
    extractor: FeatureExtractor,
    source: LatentSource,
    decoder: nn.Module,
    sentiment_override: Optional[str] = None,
) -> Dict[str, ExpressionSequence]:
    """Run infer for (sample_id, text) items; results keyed by sample id."""
    outputs = {}
    for sample_id, text in items:
        outputs[sample_id] = infer(text, extractor, source, decoder, sentiment_override)
        logger.debug(f"Synthesized {sample_id}")
    return outputs
