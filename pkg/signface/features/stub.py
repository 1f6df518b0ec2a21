"""
Deterministic offline backend for tests and synthetic experiments.
"""
import hashlib
import re
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from signface.core.config import FEATURE_DIM, SENTIMENT_LABELS
from signface.core.errors import InvalidInputError
from signface.features.base import EmbeddingBackend

STUB_VERSION = "stub-v1"

# Spread of the text-dependent noise around a sentiment prototype
SENTIMENT_NOISE = 0.05

KEYWORDS: Dict[str, str] = {
    "happy": "joy",
    "wonderful": "joy",
    "glad": "joy",
    "love": "joy",
    "great": "joy",
    "sad": "sadness",
    "sorry": "sadness",
    "miss": "sadness",
    "lonely": "sadness",
    "cry": "sadness",
    "angry": "anger",
    "hate": "anger",
    "furious": "anger",
    "annoyed": "anger",
}

_TOKEN = re.compile(r"[a-z']+")


def keyword_label(text: str) -> Optional[str]:
    """First sentiment keyword of the text, if any."""
    for token in _TOKEN.findall(text.lower()):
        if token in KEYWORDS:
            return KEYWORDS[token]
    return None


class StubBackend(EmbeddingBackend):
    """Seeded hashing backend.

    Semantic vectors are unit Gaussians seeded by a hash of (seed, text).
    Sentiment vectors are one of three orthonormal prototypes, picked by the
    keyword table, plus a small text-dependent perturbation.
    """

    def __init__(self, seed: int = 0, forced_label: Optional[str] = None):
        if forced_label is not None and forced_label not in SENTIMENT_LABELS:
            raise InvalidInputError(f"Unknown sentiment label '{forced_label}'")
        self.seed = seed
        self.forced_label = forced_label

    @property
    def backend_id(self) -> str:
        forced = f":{self.forced_label}" if self.forced_label else ""
        return f"{STUB_VERSION}:{self.seed}{forced}"

    def _rng(self, kind: str, text: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{self.seed}:{kind}:{text}".encode("utf-8")).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    def _unit(self, kind: str, text: str) -> np.ndarray:
        vector = self._rng(kind, text).standard_normal(FEATURE_DIM)
        return vector / np.linalg.norm(vector)

    @cached_property
    def _prototypes(self) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 0x5E47])
        q, _ = np.linalg.qr(rng.standard_normal((FEATURE_DIM, len(SENTIMENT_LABELS))))
        return q.T

    def semantic(self, text: str) -> np.ndarray:
        return self._unit("semantic", text).astype(np.float32)

    def label_for(self, text: str) -> str:
        if self.forced_label is not None:
            return self.forced_label
        label = keyword_label(text)
        if label is None:
            digest = hashlib.sha256(f"{self.seed}:label:{text}".encode("utf-8")).digest()
            label = SENTIMENT_LABELS[digest[0] % len(SENTIMENT_LABELS)]
        return label

    def sentiment(self, text: str) -> Tuple[np.ndarray, Optional[str]]:
        label = self.label_for(text)
        vector = self.sentiment_prototype(label) + SENTIMENT_NOISE * self._unit("sentiment", text)
        return vector.astype(np.float32), label

    def sentiment_prototype(self, label: str) -> np.ndarray:
        if label not in SENTIMENT_LABELS:
            raise InvalidInputError(f"Unknown sentiment label '{label}'")
        return self._prototypes[SENTIMENT_LABELS.index(label)].copy()


def stub_backend(seed: int = 0) -> StubBackend:
    """Deterministic offline backend."""
    return StubBackend(seed)
