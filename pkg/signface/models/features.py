"""
Sentence feature data models.
"""
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from signface.core.config import FEATURE_DIM
from signface.models.landmarks import SentimentLabel


class SentenceFeatures(BaseModel):
    """Semantic (F_s) and sentiment (F_e) embeddings of one sentence."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    semantic: np.ndarray
    sentiment: np.ndarray
    sentiment_label: Optional[SentimentLabel] = None
    source_text: str

    @field_validator("semantic", "sentiment", mode="before")
    @classmethod
    def _validate_vector(cls, value):
        vector = np.asarray(value, dtype=np.float32)
        if vector.shape != (FEATURE_DIM,):
            raise ValueError(f"feature vectors must have shape ({FEATURE_DIM},), got {vector.shape}")
        if not np.isfinite(vector).all():
            raise ValueError("feature vectors must be finite")
        return vector

    def concatenated(self) -> np.ndarray:
        """Return [F_s, F_e] as one float32 vector."""
        return np.concatenate([self.semantic, self.sentiment])
