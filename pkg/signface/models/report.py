"""
Evaluation report data models.
"""
from typing import Dict, List

from pydantic import BaseModel, Field


class RegionDistances(BaseModel):
    """Mean per-landmark Euclidean distances per facial region."""

    mouth: float = Field(..., ge=0)
    eyebrows: float = Field(..., ge=0)
    jaw_lips: float = Field(..., ge=0)


class DistanceDistribution(BaseModel):
    """Average-landmark-distance histogram with its raw values."""

    values: List[float]
    bin_edges: List[float]
    counts: List[int]
    mean: float = Field(..., ge=0)


class EvalReport(BaseModel):
    """Evaluation of generated sequences against references."""

    run_name: str = "default"
    fed: float = Field(..., ge=0)
    region_distances: RegionDistances
    avg_landmark_distance: DistanceDistribution
    sample_count: int
    excluded_ids: List[str] = []
    artifact_ids: Dict[str, str] = {}
