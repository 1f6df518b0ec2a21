"""
Decoders mapping unit-sphere latent codes to expression sequences.
"""
import logging
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from signface.core.config import NUM_LANDMARKS, SEQUENCE_LENGTH
from signface.core.errors import ConfigurationError, ContractError, ShapeError
from signface.models.landmarks import ExpressionSequence
from signface.models.run_config import DecoderConfig
from signface.networks.layers import DecoderBlock
from signface.topology.pyramid import GraphPyramid

logger = logging.getLogger(__name__)

# Normalized coordinates are centered at 0.5
OUTPUT_BIAS = 0.5

UNIT_NORM_TOLERANCE = 1e-6


class FaceDecoder(nn.Module):
    """Residual ST-GCN decoder over the graph pyramid.

    One node with 2C features is projected to (C0, T0, 1), then every block
    doubles T and moves one level up the pyramid; a 1x1 output layer yields
    the (x, y) coordinates.
    """

    def __init__(self, pyramid: GraphPyramid, config: Optional[DecoderConfig] = None):
        super().__init__()
        config = config or DecoderConfig()
        if len(config.block_channels) != len(pyramid.levels) - 1:
            raise ConfigurationError(
                f"{len(config.block_channels)} decoder blocks for {len(pyramid.levels)} pyramid levels"
            )
        if config.output_frames != SEQUENCE_LENGTH:
            raise ConfigurationError(f"decoder produces {config.output_frames} frames, expected {SEQUENCE_LENGTH}")

        self.latent_dim = config.latent_dim
        self.initial_channels = config.initial_channels
        self.initial_frames = config.initial_frames
        self.initial_vertices = pyramid.level_sizes[0]
        self.num_vertices = pyramid.level_sizes[-1]

        self.project = nn.Linear(
            self.latent_dim,
            self.initial_channels * self.initial_frames * self.initial_vertices,
        )

        blocks = []
        in_channels = config.initial_channels
        for out_channels, masks, level in zip(config.block_channels, pyramid.inter_level_adjacency, pyramid.levels[1:]):
            blocks.append(DecoderBlock(
                in_channels,
                out_channels,
                masks,
                level.normalized_adjacency(),
                config.temporal_kernel,
                config.leaky_slope,
            ))
            in_channels = out_channels
        self.blocks = nn.ModuleList(blocks)
        self.negative_slope = config.leaky_slope

        self.output = nn.Conv2d(in_channels, 2, kernel_size=1)
        nn.init.constant_(self.output.bias, OUTPUT_BIAS)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """Decode a batch of latents.

        Args:
            z: (N, 2C) latent codes

        Returns:
            (N, 64, V, 2) coordinates
        """
        if z.dim() != 2 or z.shape[1] != self.latent_dim:
            raise ShapeError(f"expected (N, {self.latent_dim}) latents, got {tuple(z.shape)}")
        h = self.project(z).view(-1, self.initial_channels, self.initial_frames, self.initial_vertices)
        h = F.leaky_relu(h, self.negative_slope)
        for block in self.blocks:
            h = block(h)
        return self.output(h).permute(0, 2, 3, 1)


class MLPDecoder(nn.Module):
    """Three fully connected layers with the decoder's input and output sizes."""

    def __init__(self, config: Optional[DecoderConfig] = None, num_vertices: int = NUM_LANDMARKS):
        super().__init__()
        config = config or DecoderConfig()
        self.latent_dim = config.latent_dim
        self.num_vertices = num_vertices
        self.layers = nn.Sequential(
            nn.Linear(self.latent_dim, config.mlp_hidden),
            nn.LeakyReLU(config.leaky_slope),
            nn.Linear(config.mlp_hidden, config.mlp_hidden),
            nn.LeakyReLU(config.leaky_slope),
            nn.Linear(config.mlp_hidden, SEQUENCE_LENGTH * num_vertices * 2),
        )
        nn.init.constant_(self.layers[-1].bias, OUTPUT_BIAS)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.dim() != 2 or z.shape[1] != self.latent_dim:
            raise ShapeError(f"expected (N, {self.latent_dim}) latents, got {tuple(z.shape)}")
        return self.layers(z).view(-1, SEQUENCE_LENGTH, self.num_vertices, 2)


def build_decoder(
    pyramid: GraphPyramid,
    config: Optional[DecoderConfig] = None,
    seed: int = 0,
    use_gcn: bool = True,
) -> nn.Module:
    """Construct a decoder with seeded initialization.

    Args:
        pyramid: Graph pyramid the decoder upsamples over
        config: Decoder architecture
        seed: Initialization seed
        use_gcn: False selects the fully connected decoder

    Returns:
        FaceDecoder or MLPDecoder
    """
    config = config or DecoderConfig()
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        if use_gcn:
            return FaceDecoder(pyramid, config)
        return MLPDecoder(config, pyramid.level_sizes[-1])


def check_unit_norm(z: np.ndarray, what: str = "latent") -> None:
    """Raise ContractError unless every row of z has unit norm."""
    norms = np.linalg.norm(np.atleast_2d(np.asarray(z, dtype=np.float64)), axis=1)
    if not np.all(np.abs(norms - 1.0) <= UNIT_NORM_TOLERANCE):
        raise ContractError(f"{what} must have unit norm, got norms {norms.tolist()}")


def decode_batch(latents: np.ndarray, decoder: nn.Module) -> np.ndarray:
    """Decode (N, 2C) unit latents into an (N, 64, 69, 2) array."""
    latents = np.atleast_2d(np.asarray(latents))
    check_unit_norm(latents)
    parameter = next(decoder.parameters())
    decoder.eval()
    with torch.no_grad():
        output = decoder(torch.as_tensor(latents, dtype=parameter.dtype))
    return output.cpu().numpy().astype(np.float64)


def decode(z: np.ndarray, decoder: nn.Module, metadata: Optional[dict] = None) -> ExpressionSequence:
    """Decode one unit-norm latent code.

    Args:
        z: (2C,) latent code
        decoder: Trained decoder

    Returns:
        ExpressionSequence of shape (64, 69, 2)
    """
    z = np.asarray(z)
    if z.ndim != 1:
        raise ShapeError(f"expected a single latent vector, got shape {z.shape}")
    coords = decode_batch(z[None], decoder)[0]
    return ExpressionSequence(coords=coords, metadata=metadata or {})
