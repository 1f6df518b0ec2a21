"""
Temporal-convolution autoencoder whose encoder defines the FED feature space.
"""
import torch
from torch import nn

from signface.core.config import NUM_LANDMARKS, SEQUENCE_LENGTH
from signface.core.errors import ShapeError


class FedAutoencoder(nn.Module):
    """Per-frame landmark vectors (69 x 2 = 138 channels) over 64 frames.

    Three stride-2 temporal convolutions take 64 frames to 8, a linear layer
    maps the flattened result to the bottleneck; the decoder mirrors it.
    """

    def __init__(
        self,
        feature_dim: int = 32,
        num_vertices: int = NUM_LANDMARKS,
        num_frames: int = SEQUENCE_LENGTH,
        channels: tuple = (128, 64, 64),
    ):
        super().__init__()
        if num_frames % 2 ** len(channels) != 0:
            raise ShapeError(f"{num_frames} frames cannot be halved {len(channels)} times")

        self.feature_dim = feature_dim
        self.num_vertices = num_vertices
        self.num_frames = num_frames
        self.in_channels = 2 * num_vertices
        self.bottleneck_frames = num_frames // 2 ** len(channels)
        self.bottleneck_channels = channels[-1]

        encoder = []
        previous = self.in_channels
        for width in channels:
            encoder += [nn.Conv1d(previous, width, kernel_size=4, stride=2, padding=1), nn.LeakyReLU(0.2)]
            previous = width
        self.encoder_conv = nn.Sequential(*encoder)
        self.encoder_fc = nn.Linear(self.bottleneck_channels * self.bottleneck_frames, feature_dim)

        self.decoder_fc = nn.Linear(feature_dim, self.bottleneck_channels * self.bottleneck_frames)
        decoder = []
        widths = list(channels[::-1][1:]) + [self.in_channels]
        previous = self.bottleneck_channels
        for index, width in enumerate(widths):
            decoder.append(nn.ConvTranspose1d(previous, width, kernel_size=4, stride=2, padding=1))
            if index < len(widths) - 1:
                decoder.append(nn.LeakyReLU(0.2))
            previous = width
        self.decoder_conv = nn.Sequential(*decoder)

    def _to_channels(self, sequences: torch.Tensor) -> torch.Tensor:
        if sequences.dim() != 4 or tuple(sequences.shape[1:]) != (self.num_frames, self.num_vertices, 2):
            raise ShapeError(
                f"expected (N, {self.num_frames}, {self.num_vertices}, 2) sequences, got {tuple(sequences.shape)}"
            )
        return sequences.reshape(sequences.shape[0], self.num_frames, self.in_channels).transpose(1, 2)

    def encode(self, sequences: torch.Tensor) -> torch.Tensor:
        """(N, 64, 69, 2) sequences to (N, feature_dim) features."""
        h = self.encoder_conv(self._to_channels(sequences))
        return self.encoder_fc(h.flatten(1))

    def decode(self, features: torch.Tensor) -> torch.Tensor:
        h = self.decoder_fc(features).view(-1, self.bottleneck_channels, self.bottleneck_frames)
        h = self.decoder_conv(h)
        return h.transpose(1, 2).reshape(-1, self.num_frames, self.num_vertices, 2)

    def forward(self, sequences: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(sequences))
