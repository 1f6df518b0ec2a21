"""
Semantic and sentiment feature extraction on top of a backend.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from signface.core.config import CACHE_DIR, FEATURE_DIM, SENTIMENT_LABELS
from signface.core.errors import BackendError, ConfigurationError, ContractError, InvalidInputError
from signface.features.base import EmbeddingBackend
from signface.features.cache import FeatureCache
from signface.features.http_backend import HttpBackend
from signface.features.stub import stub_backend
from signface.models.features import SentenceFeatures
from signface.models.run_config import BackendConfig

logger = logging.getLogger(__name__)


def _check_text(text: str) -> None:
    if not isinstance(text, str) or not text.strip():
        raise InvalidInputError("text must be a non-empty string")


def _check_vector(vector, what: str) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float32)
    if vector.shape != (FEATURE_DIM,):
        raise ContractError(f"{what} embedding must have shape ({FEATURE_DIM},), got {vector.shape}")
    if not np.isfinite(vector).all():
        raise ContractError(f"{what} embedding is not finite")
    return vector


def extract_semantic(text: str, backend: EmbeddingBackend, cache: Optional[FeatureCache] = None) -> np.ndarray:
    """Semantic embedding F_s of a sentence.

    Args:
        text: Non-empty sentence
        backend: Embedding backend
        cache: Optional on-disk cache

    Returns:
        float32 vector of length 768
    """
    _check_text(text)
    if cache is not None:
        cached = cache.get(backend.backend_id, "semantic", text)
        if cached is not None:
            return _check_vector(cached[0], "semantic")

    vector = _check_vector(backend.semantic(text), "semantic")
    if cache is not None:
        cache.put(backend.backend_id, "semantic", text, vector)
    return vector


def extract_sentiment(
    text: str,
    backend: EmbeddingBackend,
    cache: Optional[FeatureCache] = None,
) -> Tuple[np.ndarray, Optional[str]]:
    """Sentiment embedding F_e of a sentence and the backend's label."""
    _check_text(text)
    if cache is not None:
        cached = cache.get(backend.backend_id, "sentiment", text)
        if cached is not None:
            return _check_vector(cached[0], "sentiment"), cached[1]

    vector, label = backend.sentiment(text)
    vector = _check_vector(vector, "sentiment")
    if label is not None and label not in SENTIMENT_LABELS:
        raise BackendError(f"Backend returned unknown sentiment label '{label}'")
    if cache is not None:
        cache.put(backend.backend_id, "sentiment", text, vector, label)
    return vector, label


class FeatureExtractor:
    """Builds SentenceFeatures for sentences."""

    def __init__(self, backend: EmbeddingBackend, cache: Optional[FeatureCache] = None):
        self.backend = backend
        self.cache = cache

    def extract(self, text: str, sentiment_override: Optional[str] = None) -> SentenceFeatures:
        """Extract [F_s, F_e] for one sentence.

        Args:
            text: Sentence
            sentiment_override: Label whose prototype replaces the sentiment embedding

        Returns:
            SentenceFeatures
        """
        semantic = extract_semantic(text, self.backend, self.cache)
        if sentiment_override is not None:
            if sentiment_override not in SENTIMENT_LABELS:
                raise InvalidInputError(f"Unknown sentiment label '{sentiment_override}'")
            sentiment = _check_vector(self.backend.sentiment_prototype(sentiment_override), "sentiment")
            label = sentiment_override
        else:
            sentiment, label = extract_sentiment(text, self.backend, self.cache)

        return SentenceFeatures(semantic=semantic, sentiment=sentiment, sentiment_label=label, source_text=text)


def build_backend(config: BackendConfig) -> EmbeddingBackend:
    """Backend selected by the run configuration."""
    if config.kind == "stub":
        return stub_backend(config.seed)
    if not config.endpoint:
        raise ConfigurationError("backend.kind = 'http' needs backend.endpoint or SIGNFACE_BACKEND_URL")
    return HttpBackend(config.endpoint, config.timeout, config.retries, config.backoff)


def build_extractor(config: BackendConfig) -> FeatureExtractor:
    """Extractor with the configured backend and cache directory."""
    cache_dir = config.cache_dir or CACHE_DIR
    cache = FeatureCache(cache_dir) if cache_dir else None
    return FeatureExtractor(build_backend(config), cache)
