"""
Run configuration models.
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from signface.core.config import (
    FEATURE_DIM,
    KNN_NEIGHBORS,
    LATENT_CHANNELS,
    LEVEL_SIZES,
    MAX_GEODESIC,
    SEQUENCE_LENGTH,
)

ABLATION_FLAGS = ("wo_sem", "wo_sent", "wo_sn", "wo_glo", "wo_gcn", "wo_knn")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsConfig(_Section):
    """Locations of datasets and artifacts."""

    manifest: Optional[str] = None
    topology: Optional[str] = None
    checkpoints: str = "artifacts/checkpoints"
    output_dir: str = "artifacts"


class TopologyConfig(_Section):
    """Graph pyramid parameters."""

    level_sizes: List[int] = list(LEVEL_SIZES)
    k: int = Field(KNN_NEIGHBORS, ge=0)
    max_geodesic: int = Field(MAX_GEODESIC, ge=1)


class DecoderConfig(_Section):
    """Decoder architecture."""

    latent_channels: int = Field(LATENT_CHANNELS, ge=1)
    initial_channels: int = Field(512, ge=1)
    block_channels: List[int] = [256, 128, 64, 64]
    initial_frames: int = Field(4, ge=1)
    leaky_slope: float = Field(0.2, ge=0)
    temporal_kernel: int = Field(3, ge=1)
    mlp_hidden: int = Field(1024, ge=1)

    @field_validator("temporal_kernel")
    @classmethod
    def _odd_kernel(cls, value):
        if value % 2 == 0:
            raise ValueError("temporal_kernel must be odd")
        return value

    @property
    def latent_dim(self) -> int:
        return 2 * self.latent_channels

    @property
    def output_frames(self) -> int:
        return self.initial_frames * 2 ** len(self.block_channels)


class GloTrainingConfig(_Section):
    """GLO training parameters."""

    lr_params: float = Field(1e-3, gt=0)
    lr_latents: float = Field(1e-2, gt=0)
    # Cosine decay of the decoder rate down to lr_params * lr_min_ratio
    lr_schedule: Literal["constant", "cosine"] = "cosine"
    lr_min_ratio: float = Field(0.01, ge=0, le=1)
    batch_size: int = Field(8, ge=1)
    iterations: int = Field(2000, ge=0)
    loss: Literal["l1"] = "l1"
    seed: int = 0
    checkpoint_every: int = Field(500, ge=1)
    log_every: int = Field(100, ge=1)


class SamplerTrainingConfig(_Section):
    """Sampling network training parameters."""

    lr: float = Field(1e-4, gt=0)
    lr_decoder: float = Field(1e-4, gt=0)
    batch_size: int = Field(32, ge=1)
    steps: int = Field(2000, ge=0)
    hidden_dim: int = Field(2 * FEATURE_DIM, ge=1)
    seed: int = 0
    log_every: int = Field(100, ge=1)


class FedTrainingConfig(_Section):
    """FED autoencoder training parameters."""

    lr: float = Field(1e-3, gt=0)
    batch_size: int = Field(8, ge=1)
    iterations: int = Field(2000, ge=0)
    feature_dim: int = Field(32, ge=1)
    seed: int = 0
    log_every: int = Field(100, ge=1)


class PreprocessConfig(_Section):
    """Landmark conditioning parameters."""

    min_cutoff: float = Field(1.0, gt=0)
    beta: float = Field(0.007, ge=0)
    d_cutoff: float = Field(1.0, gt=0)
    frames: int = Field(SEQUENCE_LENGTH, ge=1)
    max_failure_ratio: float = Field(0.1, ge=0, le=1)
    split: Optional[str] = None


class BackendConfig(_Section):
    """Sentence feature backend."""

    kind: Literal["stub", "http"] = "stub"
    endpoint: Optional[str] = None
    seed: int = 0
    timeout: float = Field(30.0, gt=0)
    retries: int = Field(3, ge=0)
    backoff: float = Field(0.5, ge=0)
    cache_dir: Optional[str] = None


class AblationFlags(_Section):
    """The six ablation baselines; all off is the full model."""

    wo_sem: bool = False
    wo_sent: bool = False
    wo_sn: bool = False
    wo_glo: bool = False
    wo_gcn: bool = False
    wo_knn: bool = False

    def active(self) -> List[str]:
        return [name for name in ABLATION_FLAGS if getattr(self, name)]

    @property
    def name(self) -> str:
        active = self.active()
        return "+".join(active) if active else "full"


class RunConfig(_Section):
    """Complete configuration of a run."""

    seed: int = 0
    paths: PathsConfig = Field(default_factory=PathsConfig)
    topology: TopologyConfig = Field(default_factory=TopologyConfig)
    decoder: DecoderConfig = Field(default_factory=DecoderConfig)
    glo: GloTrainingConfig = Field(default_factory=GloTrainingConfig)
    sampler: SamplerTrainingConfig = Field(default_factory=SamplerTrainingConfig)
    fed: FedTrainingConfig = Field(default_factory=FedTrainingConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    backend: BackendConfig = Field(default_factory=BackendConfig)
    ablation: AblationFlags = Field(default_factory=AblationFlags)
