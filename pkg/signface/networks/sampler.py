"""
Sampling network: sentence features to a latent code.
"""
from typing import Optional

import torch
from torch import nn

from signface.core.config import FEATURE_DIM, LATENT_CHANNELS
from signface.core.errors import ShapeError


class SamplingNetwork(nn.Module):
    """Four fully connected layers, tanh after the first three.

    The input is the concatenation [F_s, F_e]. Either branch can be switched
    off, in which case it is replaced by zeros before the first layer.
    """

    def __init__(
        self,
        feature_dim: int = FEATURE_DIM,
        hidden_dim: int = 2 * FEATURE_DIM,
        latent_dim: int = 2 * LATENT_CHANNELS,
        use_semantic: bool = True,
        use_sentiment: bool = True,
    ):
        super().__init__()
        self.feature_dim = feature_dim
        self.latent_dim = latent_dim
        self.use_semantic = use_semantic
        self.use_sentiment = use_sentiment
        self.layers = nn.Sequential(
            nn.Linear(2 * feature_dim, hidden_dim),
            nn.Tanh(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.Tanh(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.Tanh(),
            nn.Linear(hidden_dim, latent_dim),
        )

    def mask_inputs(self, features: torch.Tensor) -> torch.Tensor:
        """Zero the ablated branch of (N, 2F) features."""
        if features.dim() != 2 or features.shape[1] != 2 * self.feature_dim:
            raise ShapeError(f"expected (N, {2 * self.feature_dim}) features, got {tuple(features.shape)}")
        if self.use_semantic and self.use_sentiment:
            return features
        keep = torch.ones(2 * self.feature_dim, dtype=features.dtype, device=features.device)
        if not self.use_semantic:
            keep[: self.feature_dim] = 0.0
        if not self.use_sentiment:
            keep[self.feature_dim:] = 0.0
        return features * keep

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.layers(self.mask_inputs(features))


def build_sampler(
    hidden_dim: int = 2 * FEATURE_DIM,
    latent_dim: int = 2 * LATENT_CHANNELS,
    seed: int = 0,
    use_semantic: bool = True,
    use_sentiment: bool = True,
    feature_dim: Optional[int] = None,
) -> SamplingNetwork:
    """Construct a sampling network with seeded initialization."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return SamplingNetwork(
            feature_dim=feature_dim or FEATURE_DIM,
            hidden_dim=hidden_dim,
            latent_dim=latent_dim,
            use_semantic=use_semantic,
            use_sentiment=use_sentiment,
        )
