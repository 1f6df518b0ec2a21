"""
Training of the FED autoencoder and the FedModel wrapper around its encoder.
"""
import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import torch

from signface.core.errors import InvalidInputError, TrainingDivergedError
from signface.models.run_config import FedTrainingConfig
from signface.networks.fed_autoencoder import FedAutoencoder
from signface.training.batching import epoch_batches
from signface.training.history import LossRecord

logger = logging.getLogger(__name__)


def dataset_id(sequences: np.ndarray) -> str:
    """Content hash of a sequence stack."""
    return hashlib.sha256(np.ascontiguousarray(sequences, dtype=np.float64).tobytes()).hexdigest()[:16]


def as_sequence_stack(sequences: Sequence) -> np.ndarray:
    """(N, 64, 69, 2) float64 array from arrays or ExpressionSequence-like objects."""
    arrays = [np.asarray(getattr(s, "coords", s), dtype=np.float64) for s in sequences]
    if not arrays:
        return np.zeros((0,), dtype=np.float64)
    return np.stack(arrays)


@dataclass
class FedModel:
    """Trained autoencoder whose encoder defines the FED feature space."""

    autoencoder: FedAutoencoder
    feature_dim: int
    dataset_id: str
    seed: int
    loss_history: List[LossRecord] = field(default_factory=list)

    @property
    def final_mse(self) -> Optional[float]:
        return self.loss_history[-1].batch_loss if self.loss_history else None

    def encode(self, sequences: Sequence) -> np.ndarray:
        """(N, feature_dim) features, deterministic."""
        stack = as_sequence_stack(sequences)
        parameter = next(self.autoencoder.parameters())
        self.autoencoder.eval()
        with torch.no_grad():
            features = self.autoencoder.encode(torch.as_tensor(stack, dtype=parameter.dtype))
        return features.numpy().astype(np.float64)

    def reconstruction_mse(self, sequences: Sequence) -> float:
        stack = as_sequence_stack(sequences)
        parameter = next(self.autoencoder.parameters())
        self.autoencoder.eval()
        with torch.no_grad():
            batch = torch.as_tensor(stack, dtype=parameter.dtype)
            return float(((self.autoencoder(batch) - batch) ** 2).mean().item())


def build_fed_autoencoder(feature_dim: int = 32, seed: int = 0) -> FedAutoencoder:
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return FedAutoencoder(feature_dim=feature_dim)


def train_fed_autoencoder(sequences: Sequence, config: Optional[FedTrainingConfig] = None) -> FedModel:
    """Fit the FED autoencoder with the mean-squared reconstruction loss.

    Args:
        sequences: (64, 69, 2) sequences
        config: FED training parameters

    Returns:
        FedModel
    """
    config = config or FedTrainingConfig()
    stack = as_sequence_stack(sequences)
    if stack.shape[0] < 2:
        raise InvalidInputError(f"FED autoencoder training needs at least 2 samples, got {stack.shape[0]}")

    autoencoder = build_fed_autoencoder(config.feature_dim, config.seed)
    model = FedModel(autoencoder, config.feature_dim, dataset_id(stack), config.seed)
    data = torch.as_tensor(stack, dtype=torch.float32)

    optimizer = torch.optim.Adam(autoencoder.parameters(), lr=config.lr)
    generator = torch.Generator().manual_seed(config.seed + 1)
    batches = epoch_batches(stack.shape[0], config.batch_size, generator)
    start = time.perf_counter()

    logger.info(f"FED autoencoder training: {stack.shape[0]} samples, {config.iterations} iterations")
    autoencoder.train()
    for iteration in range(1, config.iterations + 1):
        rows = torch.tensor(next(batches), dtype=torch.long)
        batch = data[rows]
        loss = ((autoencoder(batch) - batch) ** 2).mean()
        if not torch.isfinite(loss):
            logger.error(f"FED loss is not finite at iteration {iteration}")
            raise TrainingDivergedError("fed", iteration, [str(i) for i in rows.tolist()])

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        model.loss_history.append(LossRecord(iteration, float(loss.item()), time.perf_counter() - start))
        if iteration % config.log_every == 0:
            logger.info(f"FED iteration {iteration}/{config.iterations}: mse {loss.item():.6f}")

    autoencoder.eval()
    return model
