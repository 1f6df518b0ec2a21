"""
Tests for the spatio-temporal graph layers.
"""
import numpy as np
import pytest
import torch

from signface.core.errors import ShapeError
from signface.networks.layers import DecoderBlock, GraphConv, SpatialUpsample, TemporalUpsample, spatial_upsample


def _copy_mask():
    # one coarse vertex copied to two fine vertices at b = 0
    return torch.ones(1, 2, 1, dtype=torch.float64)


def test_spatial_upsample_identity_copy():
    features = torch.tensor([[1.0], [2.0]], dtype=torch.float64)  # (C=2, V=1)
    out = spatial_upsample(features, _copy_mask(), torch.ones(1, 2, 1, dtype=torch.float64))
    np.testing.assert_allclose(out.T.numpy(), [[1.0, 2.0], [1.0, 2.0]])


def test_spatial_upsample_weighted():
    features = torch.tensor([[1.0], [2.0]], dtype=torch.float64)
    weights = torch.tensor([[[0.5], [2.0]]], dtype=torch.float64)
    out = spatial_upsample(features, _copy_mask(), weights)
    np.testing.assert_allclose(out.T.numpy(), [[0.5, 1.0], [2.0, 4.0]])


def test_spatial_upsample_zero_weights():
    features = torch.tensor([[1.0], [2.0]], dtype=torch.float64)
    out = spatial_upsample(features, _copy_mask(), torch.zeros(1, 2, 1, dtype=torch.float64))
    assert torch.count_nonzero(out) == 0


def test_spatial_upsample_shape_mismatch():
    with pytest.raises(ShapeError):
        spatial_upsample(torch.ones(2, 3), _copy_mask(), torch.ones(1, 2, 1, dtype=torch.float64))
    with pytest.raises(ShapeError):
        spatial_upsample(torch.ones(2, 1), _copy_mask(), torch.ones(1, 3, 1, dtype=torch.float64))


def test_spatial_upsample_gradcheck():
    generator = torch.Generator().manual_seed(0)
    features = torch.randn(3, 4, 2, dtype=torch.float64, generator=generator, requires_grad=True)
    masks = (torch.rand(2, 5, 2, generator=generator) > 0.5).to(torch.float64)
    weights = torch.randn(2, 5, 2, dtype=torch.float64, generator=generator, requires_grad=True)
    assert torch.autograd.gradcheck(lambda f, w: spatial_upsample(f, masks, w), (features, weights))


def test_spatial_upsample_module_starts_as_mask(pyramid):
    layer = SpatialUpsample(pyramid.inter_level_adjacency[0])
    assert layer.in_vertices == 1
    assert layer.out_vertices == 7
    torch.testing.assert_close(layer.weight.detach(), layer.mask)


def test_temporal_upsample_doubles_frames():
    layer = TemporalUpsample(3, 5)
    assert layer(torch.randn(2, 3, 4, 6)).shape == (2, 5, 8, 6)


def test_temporal_upsample_zero_input():
    layer = TemporalUpsample(3, 3)
    torch.nn.init.zeros_(layer.conv.bias)
    assert torch.count_nonzero(layer(torch.zeros(1, 3, 4, 2))) == 0


def test_four_doublings_reach_sequence_length():
    x = torch.randn(1, 2, 4, 1)
    for _ in range(4):
        x = TemporalUpsample(2, 2)(x)
    assert x.shape[2] == 64


def test_graph_conv_single_vertex_identity():
    """Identity kernels on a one-vertex graph reduce to the nonlinearity."""
    channels = 3
    layer = GraphConv(channels, channels, np.ones((1, 1)), temporal_kernel=1)
    with torch.no_grad():
        layer.spatial.weight.copy_(torch.eye(channels).view(channels, channels, 1, 1))
        layer.temporal.weight.copy_(torch.eye(channels).view(channels, channels, 1, 1))
        layer.temporal.bias.zero_()
    x = torch.randn(2, channels, 5, 1)
    torch.testing.assert_close(layer(x), torch.nn.functional.leaky_relu(x, 0.2))


def test_graph_conv_preserves_constant_features_on_regular_graph():
    # 4-cycle: every vertex has degree 2
    adjacency = np.zeros((4, 4))
    for i in range(4):
        adjacency[i, (i + 1) % 4] = adjacency[(i + 1) % 4, i] = 1.0
    adjacency += np.eye(4)
    normalized = adjacency / 3.0

    layer = GraphConv(3, 4, normalized)
    x = torch.randn(2, 3, 6, 1).expand(2, 3, 6, 4).contiguous()
    out = layer(x)
    for v in range(1, 4):
        torch.testing.assert_close(out[..., v], out[..., 0])


def test_graph_conv_output_shape(pyramid):
    layer = GraphConv(8, 64, pyramid.levels[2].normalized_adjacency())
    assert layer(torch.randn(1, 8, 64, 16)).shape == (1, 64, 64, 16)


def test_graph_conv_rejects_wrong_vertex_count(pyramid):
    layer = GraphConv(8, 8, pyramid.levels[2].normalized_adjacency())
    with pytest.raises(ShapeError):
        layer(torch.randn(1, 8, 4, 7))


def test_graph_conv_gradcheck(pyramid):
    torch.manual_seed(0)
    layer = GraphConv(2, 2, pyramid.levels[1].normalized_adjacency()).double()
    x = torch.randn(1, 2, 4, 7, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(layer, (x,))


def test_decoder_block_moves_one_level(pyramid):
    block = DecoderBlock(6, 4, pyramid.inter_level_adjacency[1], pyramid.levels[2].normalized_adjacency())
    assert block(torch.randn(2, 6, 8, 7)).shape == (2, 4, 16, 16)


def test_temporal_upsample_gradcheck():
    for seed in range(5):
        torch.manual_seed(seed)
        layer = TemporalUpsample(2, 3).double()
        x = torch.randn(1, 2, 4, 3, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(layer, (x,))
