"""
Generative Latent Optimization: decoder parameters and one unit-sphere latent
per training sample, optimized jointly on the l1 reconstruction loss.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from signface.core.errors import (
    AmbiguousPathError,
    ContractError,
    DegenerateLatentError,
    InvalidInputError,
    InvalidParameterError,
    ShapeError,
    TrainingDivergedError,
)
from signface.models.landmarks import ExpressionSequence
from signface.models.run_config import DecoderConfig, GloTrainingConfig
from signface.networks.decoder import UNIT_NORM_TOLERANCE, build_decoder, decode_batch
from signface.topology.pyramid import GraphPyramid
from signface.training.batching import epoch_batches
from signface.training.history import LossRecord

logger = logging.getLogger(__name__)

MIN_NORM = 1e-12

# Antipodal when the cosine is within this distance of -1
ANTIPODAL_TOLERANCE = 1e-9

SequenceLike = Union[ExpressionSequence, np.ndarray, torch.Tensor]


def _values(sequence: SequenceLike):
    if isinstance(sequence, ExpressionSequence):
        return sequence.coords
    return sequence


def glo_loss(predicted: SequenceLike, target: SequenceLike):
    """Mean absolute difference over all entries.

    Tensors give a differentiable tensor; anything else gives a float.
    """
    predicted, target = _values(predicted), _values(target)
    if tuple(predicted.shape) != tuple(target.shape):
        raise ShapeError(f"loss operands differ in shape: {tuple(predicted.shape)} vs {tuple(target.shape)}")
    if isinstance(predicted, torch.Tensor):
        return (predicted - torch.as_tensor(target, dtype=predicted.dtype)).abs().mean()
    return float(np.mean(np.abs(np.asarray(predicted, dtype=np.float64) - np.asarray(target, dtype=np.float64))))


def project_to_sphere(v: np.ndarray) -> np.ndarray:
    """Return v / ||v||.

    Args:
        v: Finite vector

    Returns:
        Unit vector (float64)
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.isfinite(v).all():
        raise InvalidInputError("cannot project a non-finite vector")
    norm = np.linalg.norm(v)
    if norm < MIN_NORM:
        raise DegenerateLatentError(f"vector norm {norm:.3e} is too small to project")
    return v / norm


def random_latents(count: int, dim: int, generator: torch.Generator) -> torch.Tensor:
    """Standard-normal vectors projected to the unit sphere (float64)."""
    latents = torch.randn(count, dim, generator=generator, dtype=torch.float64)
    return latents / latents.norm(dim=1, keepdim=True)


@dataclass
class GloState:
    """Decoder, latent table and optimizers of a GLO run."""

    decoder: nn.Module
    latents: nn.Parameter
    sample_ids: List[str]
    param_optimizer: torch.optim.Optimizer
    latent_optimizer: torch.optim.Optimizer
    decoder_config: DecoderConfig
    config: GloTrainingConfig
    use_gcn: bool = True
    iteration: int = 0
    loss_history: List[LossRecord] = field(default_factory=list)
    checkpoint_id: str = ""

    @property
    def seed(self) -> int:
        return self.config.seed

    def latent(self, sample_id: str) -> np.ndarray:
        try:
            index = self.sample_ids.index(sample_id)
        except ValueError as e:
            raise InvalidInputError(f"No latent for sample '{sample_id}'") from e
        return self.latents.detach()[index].numpy().copy()

    def reconstruct(self) -> np.ndarray:
        """Decode every latent: (n, 64, 69, 2)."""
        return decode_batch(self.latents.detach().numpy(), self.decoder)


def _project_rows_(latents: torch.Tensor, rows: torch.Tensor, generator: torch.Generator, ids: List[str]) -> None:
    """Project the given rows in place; degenerate rows are re-randomized."""
    with torch.no_grad():
        norms = latents[rows].norm(dim=1)
        for position, norm in enumerate(norms.tolist()):
            if not math.isfinite(norm) or norm < MIN_NORM:
                row = int(rows[position])
                logger.warning(f"Latent of sample {ids[row]} degenerated (norm {norm:.3e}); re-randomizing")
                latents[row] = random_latents(1, latents.shape[1], generator)[0]
        latents[rows] = latents[rows] / latents[rows].norm(dim=1, keepdim=True)


def init_glo_state(
    sample_ids: List[str],
    pyramid: GraphPyramid,
    config: Optional[GloTrainingConfig] = None,
    decoder_config: Optional[DecoderConfig] = None,
    use_gcn: bool = True,
) -> GloState:
    """Seeded decoder, random unit latents and fresh optimizers."""
    config = config or GloTrainingConfig()
    decoder_config = decoder_config or DecoderConfig()

    decoder = build_decoder(pyramid, decoder_config, seed=config.seed, use_gcn=use_gcn)
    generator = torch.Generator().manual_seed(config.seed)
    latents = nn.Parameter(random_latents(len(sample_ids), decoder_config.latent_dim, generator))

    return GloState(
        decoder=decoder,
        latents=latents,
        sample_ids=list(sample_ids),
        param_optimizer=torch.optim.Adam(decoder.parameters(), lr=config.lr_params),
        latent_optimizer=torch.optim.SGD([latents], lr=config.lr_latents),
        decoder_config=decoder_config,
        config=config,
        use_gcn=use_gcn,
    )


def _targets(dataset: List[Tuple[str, SequenceLike]]) -> torch.Tensor:
    arrays = [np.asarray(_values(sequence), dtype=np.float32) for _, sequence in dataset]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"training sequences differ in shape: {sorted(shapes)}")
    return torch.from_numpy(np.stack(arrays))


def train_glo(
    dataset: List[Tuple[str, SequenceLike]],
    config: Optional[GloTrainingConfig] = None,
    pyramid: Optional[GraphPyramid] = None,
    decoder_config: Optional[DecoderConfig] = None,
    use_gcn: bool = True,
    on_checkpoint: Optional[Callable[[GloState], None]] = None,
) -> GloState:
    """Jointly fit decoder parameters and per-sample latents.

    Each iteration decodes a batch, takes an Adam step on the decoder and a
    plain gradient step on the batch latents, then projects those latents
    back onto the unit sphere. The decoder rate follows a cosine decay
    unless ``lr_schedule`` is ``constant``.

    Args:
        dataset: (sample_id, sequence) pairs
        config: GLO training parameters
        pyramid: Graph pyramid of the decoder
        decoder_config: Decoder architecture
        use_gcn: False trains the fully connected decoder
        on_checkpoint: Called with the state every ``checkpoint_every`` iterations

    Returns:
        GloState after the iteration budget
    """
    if not dataset:
        raise InvalidInputError("GLO training needs at least one sample")
    if pyramid is None:
        raise InvalidParameterError("GLO training needs a graph pyramid")

    config = config or GloTrainingConfig()
    sample_ids = [sample_id for sample_id, _ in dataset]
    targets = _targets(dataset)

    state = init_glo_state(sample_ids, pyramid, config, decoder_config, use_gcn)
    parameter = next(state.decoder.parameters())
    targets = targets.to(parameter.dtype)

    scheduler = None
    if config.lr_schedule == "cosine" and config.iterations > 0:
        scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
            state.param_optimizer, T_max=config.iterations, eta_min=config.lr_params * config.lr_min_ratio
        )

    generator = torch.Generator().manual_seed(config.seed + 1)
    batches = epoch_batches(len(sample_ids), config.batch_size, generator)
    start = time.perf_counter()

    logger.info(f"GLO training: {len(sample_ids)} samples, {config.iterations} iterations")
    state.decoder.train()
    for iteration in range(1, config.iterations + 1):
        rows = torch.tensor(next(batches), dtype=torch.long)

        prediction = state.decoder(state.latents[rows].to(parameter.dtype))
        loss = glo_loss(prediction, targets[rows])
        if not torch.isfinite(loss):
            batch_ids = [sample_ids[i] for i in rows.tolist()]
            logger.error(f"GLO loss is not finite at iteration {iteration}, batch {batch_ids}")
            raise TrainingDivergedError("glo", iteration, batch_ids)

        state.param_optimizer.zero_grad()
        state.latent_optimizer.zero_grad()
        loss.backward()
        state.param_optimizer.step()
        state.latent_optimizer.step()
        if scheduler is not None:
            scheduler.step()
        _project_rows_(state.latents, rows, generator, sample_ids)

        state.iteration = iteration
        state.loss_history.append(LossRecord(iteration, float(loss.item()), time.perf_counter() - start))

        if iteration % config.log_every == 0:
            logger.info(f"GLO iteration {iteration}/{config.iterations}: batch l1 {loss.item():.6f}")
        if on_checkpoint is not None and iteration % config.checkpoint_every == 0:
            on_checkpoint(state)

    state.decoder.eval()
    return state


def reconstruction_l1(state: GloState, dataset: List[Tuple[str, SequenceLike]]) -> float:
    """Mean l1 between every sample and the decoding of its latent."""
    reconstructed = state.reconstruct()
    targets = np.stack([np.asarray(_values(sequence), dtype=np.float64) for _, sequence in dataset])
    index = [state.sample_ids.index(sample_id) for sample_id, _ in dataset]
    return glo_loss(reconstructed[index], targets)


def interpolate_latents(z_a: np.ndarray, z_b: np.ndarray, steps: int) -> List[np.ndarray]:
    """Spherical linear interpolation between two unit latents.

    Args:
        z_a: Start latent
        z_b: End latent
        steps: Number of samples including both endpoints

    Returns:
        List of unit latents; the first is z_a and the last is z_b
    """
    z_a = np.asarray(z_a, dtype=np.float64)
    z_b = np.asarray(z_b, dtype=np.float64)
    if steps < 2:
        raise InvalidParameterError(f"steps must be at least 2, got {steps}")
    if z_a.shape != z_b.shape:
        raise ShapeError(f"latents differ in shape: {z_a.shape} vs {z_b.shape}")
    for name, z in (("z_a", z_a), ("z_b", z_b)):
        if abs(np.linalg.norm(z) - 1.0) > UNIT_NORM_TOLERANCE:
            raise ContractError(f"{name} must have unit norm, got {np.linalg.norm(z):.9f}")

    cosine = float(np.clip(np.dot(z_a, z_b), -1.0, 1.0))
    if cosine <= -1.0 + ANTIPODAL_TOLERANCE:
        raise AmbiguousPathError("antipodal latents have no unique great-circle path")

    omega = math.acos(cosine)
    samples = [z_a.copy()]
    for t in np.linspace(0.0, 1.0, steps)[1:-1]:
        if omega < 1e-12:
            samples.append(z_a.copy())
            continue
        sin_omega = math.sin(omega)
        z = (math.sin((1.0 - t) * omega) * z_a + math.sin(t * omega) * z_b) / sin_omega
        samples.append(project_to_sphere(z))
    samples.append(z_b.copy())
    return samples
