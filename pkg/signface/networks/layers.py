"""
Spatio-temporal graph layers of the face decoder.

Feature tensors use the (N, C, T, V) layout: batch, channels, frames, vertices.
"""
import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from signface.core.errors import ShapeError


def spatial_upsample(features: torch.Tensor, masks: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Aggregate coarse-vertex features onto the fine level.

    f_i = sum over b, j of (masks * weights)[b, i, j] * f_j, per channel and frame.

    Args:
        features: (..., V) tensor over the coarse level
        masks: (B, V', V) binary inter-level masks
        weights: trainable tensor shaped like masks

    Returns:
        (..., V') tensor over the fine level
    """
    if weights.shape != masks.shape:
        raise ShapeError(f"weights {tuple(weights.shape)} do not match masks {tuple(masks.shape)}")
    if features.shape[-1] != masks.shape[-1]:
        raise ShapeError(f"features have {features.shape[-1]} vertices, level pair expects {masks.shape[-1]}")
    effective = (masks * weights).sum(dim=0)
    return torch.einsum("...v,uv->...u", features, effective)


class SpatialUpsample(nn.Module):
    """Inter-level aggregation with one trainable weight per mask entry."""

    def __init__(self, masks: np.ndarray):
        super().__init__()
        mask = torch.as_tensor(np.asarray(masks), dtype=torch.get_default_dtype())
        self.register_buffer("mask", mask)
        # Starts as a plain anchor/neighbour copy; zero wherever the mask is zero
        self.weight = nn.Parameter(mask.clone())

    @property
    def in_vertices(self) -> int:
        return int(self.mask.shape[-1])

    @property
    def out_vertices(self) -> int:
        return int(self.mask.shape[-2])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return spatial_upsample(x, self.mask, self.weight)


class TemporalUpsample(nn.Module):
    """Transposed convolution over time that doubles T, vertex-wise."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv = nn.ConvTranspose2d(
            in_channels,
            out_channels,
            kernel_size=(4, 1),
            stride=(2, 1),
            padding=(1, 0),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4:
            raise ShapeError(f"expected (N, C, T, V) features, got {tuple(x.shape)}")
        return self.conv(x)


class GraphConv(nn.Module):
    """Spatial graph convolution followed by a temporal convolution.

    The spatial stage mixes channels with a 1x1 kernel and aggregates over
    D^-1/2 (A + I) D^-1/2; the temporal stage convolves a fixed window of
    frames with padding that keeps T.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        adjacency: np.ndarray,
        temporal_kernel: int = 3,
        negative_slope: float = 0.2,
    ):
        super().__init__()
        self.register_buffer("adjacency", torch.as_tensor(np.asarray(adjacency), dtype=torch.get_default_dtype()))
        self.spatial = nn.Conv2d(in_channels, out_channels, kernel_size=1, bias=False)
        self.bias = nn.Parameter(torch.zeros(out_channels))
        self.temporal = nn.Conv2d(
            out_channels,
            out_channels,
            kernel_size=(temporal_kernel, 1),
            padding=(temporal_kernel // 2, 0),
        )
        self.negative_slope = negative_slope

    @property
    def num_vertices(self) -> int:
        return int(self.adjacency.shape[0])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[-1] != self.num_vertices:
            raise ShapeError(f"expected (N, C, T, {self.num_vertices}) features, got {tuple(x.shape)}")
        h = self.spatial(x)
        h = torch.einsum("nctv,uv->nctu", h, self.adjacency) + self.bias.view(1, -1, 1, 1)
        h = self.temporal(h)
        return F.leaky_relu(h, self.negative_slope)


class DecoderBlock(nn.Module):
    """temporal upsample (+ residual) -> spatial upsample -> graph conv."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        masks: np.ndarray,
        fine_adjacency: np.ndarray,
        temporal_kernel: int = 3,
        negative_slope: float = 0.2,
    ):
        super().__init__()
        self.temporal = TemporalUpsample(in_channels, out_channels)
        if in_channels != out_channels:
            self.residual = nn.Conv2d(in_channels, out_channels, kernel_size=1)
        else:
            self.residual = nn.Identity()
        self.spatial = SpatialUpsample(masks)
        self.graph_conv = GraphConv(out_channels, out_channels, fine_adjacency, temporal_kernel, negative_slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skip = self.residual(torch.repeat_interleave(x, 2, dim=2))
        h = self.temporal(x) + skip
        h = self.spatial(h)
        return self.graph_conv(h)
