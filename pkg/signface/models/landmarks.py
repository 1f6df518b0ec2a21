"""
Landmark data models.
"""
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from signface.core.config import NUM_LANDMARKS, SEQUENCE_LENGTH

SentimentLabel = Literal["joy", "sadness", "anger"]
SplitTag = Literal["train", "test"]


def _as_coords(value) -> np.ndarray:
    coords = np.asarray(value, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[1] != NUM_LANDMARKS or coords.shape[2] != 2:
        raise ValueError(f"coords must have shape (T, {NUM_LANDMARKS}, 2), got {coords.shape}")
    if coords.shape[0] < 1:
        raise ValueError("coords must contain at least one frame")
    if not np.isfinite(coords).all():
        raise ValueError("coords must be finite")
    return coords


class LandmarkSequence(BaseModel):
    """A T x 69 x 2 sequence of facial landmarks with its metadata."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sample_id: str
    speaker_id: str = "unknown"
    text: str = ""
    sentiment_label: Optional[SentimentLabel] = None
    fps: float = Field(24.0, gt=0)
    coords: np.ndarray
    flagged_frames: List[int] = []
    # Fingerprint of the conditioning pipeline that produced these coordinates
    conditioning: Optional[str] = None

    @field_validator("coords", mode="before")
    @classmethod
    def _validate_coords(cls, value):
        return _as_coords(value)

    @property
    def num_frames(self) -> int:
        return int(self.coords.shape[0])

    def with_coords(self, coords: np.ndarray, flagged_frames: Optional[List[int]] = None) -> "LandmarkSequence":
        """Return a copy carrying new coordinates (validated); the conditioning mark is dropped."""
        update = {"coords": _as_coords(coords), "conditioning": None}
        if flagged_frames is not None:
            update["flagged_frames"] = sorted(set(flagged_frames))
        return self.model_copy(update=update)


class ExpressionSequence(BaseModel):
    """A decoded facial gesture: exactly 64 frames of 69 landmarks."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coords: np.ndarray
    metadata: Dict[str, str] = {}

    @field_validator("coords", mode="before")
    @classmethod
    def _validate_coords(cls, value):
        coords = _as_coords(value)
        if coords.shape[0] != SEQUENCE_LENGTH:
            raise ValueError(f"expression sequences have {SEQUENCE_LENGTH} frames, got {coords.shape[0]}")
        return coords


class ManifestRecord(BaseModel):
    """One dataset sample."""

    model_config = ConfigDict(extra="forbid")

    sample_id: str
    speaker_id: str
    text: str
    sentiment_label: Optional[SentimentLabel] = None
    path: str
    split: Optional[SplitTag] = None


class DatasetManifest(BaseModel):
    """Dataset records with unique sample ids."""

    records: List[ManifestRecord] = []

    @model_validator(mode="after")
    def _unique_ids(self):
        seen = set()
        for record in self.records:
            if record.sample_id in seen:
                raise ValueError(f"duplicate sample_id: {record.sample_id}")
            seen.add(record.sample_id)
        return self

    def by_split(self, split: str) -> List[ManifestRecord]:
        return [r for r in self.records if r.split == split]

    def get(self, sample_id: str) -> Optional[ManifestRecord]:
        for record in self.records:
            if record.sample_id == sample_id:
                return record
        return None
