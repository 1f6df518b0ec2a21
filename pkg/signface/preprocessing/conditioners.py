"""
Conditioner classes and the pipeline chaining them.
"""
import hashlib
import json
import logging
from abc import ABC, abstractmethod
from typing import List, Optional

from signface.models.landmarks import LandmarkSequence
from signface.models.run_config import PreprocessConfig
from signface.preprocessing.conditioning import (
    frontalize,
    normalize_sequence,
    one_euro_filter,
    resample_uniform,
)

logger = logging.getLogger(__name__)


class BaseConditioner(ABC):
    """Base class for all conditioners."""

    name = "base"

    @abstractmethod
    def apply(self, seq: LandmarkSequence) -> LandmarkSequence:
        """Condition the sequence and return the result.

        Args:
            seq: Sequence to condition

        Returns:
            Conditioned sequence
        """
        pass

    def describe(self) -> dict:
        """Parameters that identify this conditioner in a fingerprint."""
        return {"name": self.name}


class Frontalizer(BaseConditioner):
    """Removes head pose per frame."""

    name = "frontalize"

    def apply(self, seq: LandmarkSequence) -> LandmarkSequence:
        return frontalize(seq)


class OneEuroSmoother(BaseConditioner):
    """Removes landmark jitter."""

    name = "one_euro"

    def __init__(self, min_cutoff: float = 1.0, beta: float = 0.007, d_cutoff: float = 1.0):
        self.min_cutoff = min_cutoff
        self.beta = beta
        self.d_cutoff = d_cutoff

    def apply(self, seq: LandmarkSequence) -> LandmarkSequence:
        return one_euro_filter(seq, self.min_cutoff, self.beta, self.d_cutoff)

    def describe(self) -> dict:
        return {"name": self.name, "min_cutoff": self.min_cutoff, "beta": self.beta, "d_cutoff": self.d_cutoff}


class UniformResampler(BaseConditioner):
    """Brings every sequence to the same number of frames."""

    name = "resample"

    def __init__(self, frames: int):
        self.frames = frames

    def apply(self, seq: LandmarkSequence) -> LandmarkSequence:
        return resample_uniform(seq, self.frames)

    def describe(self) -> dict:
        return {"name": self.name, "frames": self.frames}


class BoxNormalizer(BaseConditioner):
    """Bounding-box normalization per frame."""

    name = "normalize"

    def apply(self, seq: LandmarkSequence) -> LandmarkSequence:
        return normalize_sequence(seq)


class ConditioningPipeline:
    """Pipeline for running multiple conditioners in sequence."""

    def __init__(self, conditioners: List[BaseConditioner]):
        """Initialize the pipeline with a list of conditioners.

        Args:
            conditioners: List of conditioners to run
        """
        self.conditioners = conditioners

    @property
    def fingerprint(self) -> str:
        """Hash of the conditioner parameters."""
        parameters = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(parameters.encode("utf-8")).hexdigest()[:16]

    def run(self, seq: LandmarkSequence) -> LandmarkSequence:
        """Run all conditioners in the pipeline.

        A sequence already marked with this pipeline's fingerprint is
        returned unchanged, so conditioning twice equals conditioning once.

        Args:
            seq: Sequence to condition

        Returns:
            Conditioned sequence, marked with the fingerprint
        """
        fingerprint = self.fingerprint
        if seq.conditioning == fingerprint:
            logger.debug(f"Sample {seq.sample_id} is already conditioned ({fingerprint})")
            return seq
        for conditioner in self.conditioners:
            seq = conditioner.apply(seq)
        return seq.model_copy(update={"conditioning": fingerprint})

    def describe(self) -> List[dict]:
        return [conditioner.describe() for conditioner in self.conditioners]


def default_pipeline(config: Optional[PreprocessConfig] = None) -> ConditioningPipeline:
    """frontalize -> filter -> resample -> normalize."""
    config = config or PreprocessConfig()
    return ConditioningPipeline([
        Frontalizer(),
        OneEuroSmoother(config.min_cutoff, config.beta, config.d_cutoff),
        UniformResampler(config.frames),
        BoxNormalizer(),
    ])


def condition_sequence(seq: LandmarkSequence, config: Optional[PreprocessConfig] = None) -> LandmarkSequence:
    """Run the default conditioning pipeline on one sequence."""
    return default_pipeline(config).run(seq)
