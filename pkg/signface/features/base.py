"""
Base class for sentence-embedding backends.
"""
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np

from signface.core.errors import ConfigurationError


class EmbeddingBackend(ABC):
    """Maps a sentence to semantic and sentiment embeddings."""

    @property
    @abstractmethod
    def backend_id(self) -> str:
        """Identifier used to key cached features."""
        pass

    @abstractmethod
    def semantic(self, text: str) -> np.ndarray:
        """Return the semantic sentence embedding.

        Args:
            text: Sentence

        Returns:
            Embedding vector
        """
        pass

    @abstractmethod
    def sentiment(self, text: str) -> Tuple[np.ndarray, Optional[str]]:
        """Return the sentiment embedding and the predicted label.

        Args:
            text: Sentence

        Returns:
            (embedding vector, label or None)
        """
        pass

    def sentiment_prototype(self, label: str) -> np.ndarray:
        """Representative sentiment embedding of a label."""
        raise ConfigurationError(f"Backend {self.backend_id} has no sentiment prototypes")
