"""
Sampling-network training on GLO latents, and the end-to-end variant that
trains sampler and decoder together without GLO.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from signface.core.errors import DegenerateVectorError, InvalidInputError, ShapeError, TrainingDivergedError
from signface.models.features import SentenceFeatures
from signface.models.run_config import AblationFlags, DecoderConfig, SamplerTrainingConfig
from signface.networks.decoder import build_decoder
from signface.networks.sampler import SamplingNetwork, build_sampler
from signface.topology.pyramid import GraphPyramid
from signface.training.batching import epoch_batches
from signface.training.glo_trainer import glo_loss
from signface.training.history import LossRecord

logger = logging.getLogger(__name__)

MIN_NORM = 1e-12


def cosine_loss(predicted: Union[np.ndarray, torch.Tensor], target: Union[np.ndarray, torch.Tensor]):
    """1 - cos(p, z), in [0, 2].

    Works on single vectors or (N, D) batches; batches give the mean. Tensors
    give a differentiable tensor, arrays a float.
    """
    if tuple(predicted.shape) != tuple(target.shape):
        raise ShapeError(f"cosine operands differ in shape: {tuple(predicted.shape)} vs {tuple(target.shape)}")

    if isinstance(predicted, torch.Tensor):
        target = torch.as_tensor(target, dtype=predicted.dtype)
        p_norm = predicted.norm(dim=-1)
        z_norm = target.norm(dim=-1)
        if bool((p_norm < MIN_NORM).any()) or bool((z_norm < MIN_NORM).any()):
            raise DegenerateVectorError("cosine distance of a zero vector")
        return (1.0 - (predicted * target).sum(dim=-1) / (p_norm * z_norm)).mean()

    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    p_norm = np.linalg.norm(predicted, axis=-1)
    z_norm = np.linalg.norm(target, axis=-1)
    if np.any(p_norm < MIN_NORM) or np.any(z_norm < MIN_NORM):
        raise DegenerateVectorError("cosine distance of a zero vector")
    cosine = np.clip((predicted * target).sum(axis=-1) / (p_norm * z_norm), -1.0, 1.0)
    return float(np.mean(1.0 - cosine))


@dataclass
class SamplerState:
    """A trained sampling network with its history."""

    network: SamplingNetwork
    config: SamplerTrainingConfig
    steps: int = 0
    loss_history: List[LossRecord] = field(default_factory=list)

    @property
    def final_loss(self) -> Optional[float]:
        return self.loss_history[-1].batch_loss if self.loss_history else None


def stack_features(features: Sequence[SentenceFeatures]) -> torch.Tensor:
    """(N, 2F) float32 tensor of concatenated [F_s, F_e]."""
    return torch.from_numpy(np.stack([f.concatenated() for f in features]).astype(np.float32))


def train_sampler(
    pairs: List[Tuple[SentenceFeatures, np.ndarray]],
    config: Optional[SamplerTrainingConfig] = None,
    ablation: Optional[AblationFlags] = None,
) -> SamplerState:
    """Regress GLO latents from sentence features with the cosine loss.

    Args:
        pairs: (features, GLO latent) per training sample
        config: Sampler training parameters
        ablation: wo_sem / wo_sent zero the corresponding input branch

    Returns:
        SamplerState
    """
    if not pairs:
        raise InvalidInputError("sampler training needs at least one pair")
    config = config or SamplerTrainingConfig()
    ablation = ablation or AblationFlags()

    inputs = stack_features([features for features, _ in pairs])
    targets = torch.from_numpy(np.stack([np.asarray(z, dtype=np.float32) for _, z in pairs]))

    network = build_sampler(
        hidden_dim=config.hidden_dim,
        latent_dim=targets.shape[1],
        seed=config.seed,
        use_semantic=not ablation.wo_sem,
        use_sentiment=not ablation.wo_sent,
        feature_dim=inputs.shape[1] // 2,
    )
    state = SamplerState(network=network, config=config)

    optimizer = torch.optim.Adam(network.parameters(), lr=config.lr)
    generator = torch.Generator().manual_seed(config.seed + 1)
    batches = epoch_batches(len(pairs), config.batch_size, generator)
    start = time.perf_counter()

    logger.info(f"Sampler training: {len(pairs)} pairs, {config.steps} steps, ablation {ablation.name}")
    network.train()
    for step in range(1, config.steps + 1):
        rows = torch.tensor(next(batches), dtype=torch.long)
        loss = cosine_loss(network(inputs[rows]), targets[rows])
        if not torch.isfinite(loss):
            logger.error(f"Sampler loss is not finite at step {step}")
            raise TrainingDivergedError("sampler", step, [str(i) for i in rows.tolist()])

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        state.steps = step
        state.loss_history.append(LossRecord(step, float(loss.item()), time.perf_counter() - start))
        if step % config.log_every == 0:
            logger.info(f"Sampler step {step}/{config.steps}: cosine loss {loss.item():.6f}")

    network.eval()
    return state


def mean_cosine_loss(network: SamplingNetwork, pairs: List[Tuple[SentenceFeatures, np.ndarray]]) -> float:
    """Cosine loss over all pairs, evaluation mode."""
    inputs = stack_features([features for features, _ in pairs])
    targets = np.stack([np.asarray(z, dtype=np.float64) for _, z in pairs])
    network.eval()
    with torch.no_grad():
        predicted = network(inputs).numpy().astype(np.float64)
    return cosine_loss(predicted, targets)


@dataclass
class EndToEndState:
    """Sampler and decoder trained jointly on l1 (no GLO latents)."""

    network: SamplingNetwork
    decoder: nn.Module
    decoder_config: DecoderConfig
    config: SamplerTrainingConfig
    use_gcn: bool = True
    steps: int = 0
    loss_history: List[LossRecord] = field(default_factory=list)


def train_end_to_end(
    features: Sequence[SentenceFeatures],
    sequences: Sequence[np.ndarray],
    pyramid: GraphPyramid,
    config: Optional[SamplerTrainingConfig] = None,
    decoder_config: Optional[DecoderConfig] = None,
    ablation: Optional[AblationFlags] = None,
) -> EndToEndState:
    """Train sampler and decoder together through the sphere projection.

    Args:
        features: Sentence features per sample
        sequences: (64, 69, 2) target per sample
        pyramid: Graph pyramid of the decoder
        config: Sampler training parameters (lr_decoder for the decoder)
        decoder_config: Decoder architecture
        ablation: Input-branch and decoder flags

    Returns:
        EndToEndState
    """
    if not features or len(features) != len(sequences):
        raise InvalidInputError(f"need matching non-empty features and sequences ({len(features)} vs {len(sequences)})")
    config = config or SamplerTrainingConfig()
    decoder_config = decoder_config or DecoderConfig()
    ablation = ablation or AblationFlags()

    inputs = stack_features(features)
    targets = torch.from_numpy(np.stack([np.asarray(s, dtype=np.float32) for s in sequences]))

    network = build_sampler(
        hidden_dim=config.hidden_dim,
        latent_dim=decoder_config.latent_dim,
        seed=config.seed,
        use_semantic=not ablation.wo_sem,
        use_sentiment=not ablation.wo_sent,
        feature_dim=inputs.shape[1] // 2,
    )
    decoder = build_decoder(pyramid, decoder_config, seed=config.seed, use_gcn=not ablation.wo_gcn)
    state = EndToEndState(network, decoder, decoder_config, config, use_gcn=not ablation.wo_gcn)

    optimizer = torch.optim.Adam([
        {"params": network.parameters(), "lr": config.lr},
        {"params": decoder.parameters(), "lr": config.lr_decoder},
    ])
    generator = torch.Generator().manual_seed(config.seed + 1)
    batches = epoch_batches(len(features), config.batch_size, generator)
    start = time.perf_counter()

    logger.info(f"End-to-end training: {len(features)} samples, {config.steps} steps")
    network.train()
    decoder.train()
    for step in range(1, config.steps + 1):
        rows = torch.tensor(next(batches), dtype=torch.long)
        z = F.normalize(network(inputs[rows]), dim=1)
        loss = glo_loss(decoder(z), targets[rows])
        if not torch.isfinite(loss):
            logger.error(f"End-to-end loss is not finite at step {step}")
            raise TrainingDivergedError("end_to_end", step, [str(i) for i in rows.tolist()])

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        state.steps = step
        state.loss_history.append(LossRecord(step, float(loss.item()), time.perf_counter() - start))
        if step % config.log_every == 0:
            logger.info(f"End-to-end step {step}/{config.steps}: batch l1 {loss.item():.6f}")

    network.eval()
    decoder.eval()
    return state
