"""
Landmark conditioning: frontalization, one-euro smoothing, uniform
resampling and bounding-box normalization.
"""
import logging
import math

import numpy as np
from scipy.linalg import orthogonal_procrustes

from signface.core.config import STABLE_ANCHORS
from signface.core.errors import DegenerateFrameError, FrontalizationError, InvalidParameterError
from signface.models.landmarks import LandmarkSequence

logger = logging.getLogger(__name__)

# Relative size of the second singular value below which anchors count as collinear
_COLLINEAR_RATIO = 1e-6


def normalize_bbox(coords: np.ndarray) -> np.ndarray:
    """Scale by the bounding-box diagonal and center the box at 0.5.

    Works on a single (P, 2) frame or any (..., P, 2) stack of frames.

    Args:
        coords: Landmark coordinates

    Returns:
        Normalized coordinates; each frame's box diagonal is 1
    """
    coords = np.asarray(coords, dtype=np.float64)
    origin = coords.min(axis=-2, keepdims=True)
    extent = coords.max(axis=-2, keepdims=True) - origin
    diagonal = np.sqrt((extent ** 2).sum(axis=-1, keepdims=True))
    if np.any(diagonal <= 0.0):
        raise DegenerateFrameError("zero-extent bounding box: all points coincide")
    return (coords - origin - extent / 2.0) / diagonal + 0.5


def _similarity_to(anchors: np.ndarray, target: np.ndarray):
    """Least-squares similarity (R, s, t) mapping anchors onto target."""
    anchor_mean = anchors.mean(axis=0)
    target_mean = target.mean(axis=0)
    source = anchors - anchor_mean
    destination = target - target_mean

    singular = np.linalg.svd(source, compute_uv=False)
    if singular[0] <= 0.0 or singular[-1] <= _COLLINEAR_RATIO * singular[0]:
        raise FrontalizationError("anchor points are collinear")

    rotation, singular_sum = orthogonal_procrustes(source, destination)
    if np.linalg.det(rotation) < 0:
        raise FrontalizationError("best anchor alignment is a reflection")

    scale = singular_sum / (source ** 2).sum()
    return rotation, scale, anchor_mean, target_mean


def frontalize(seq: LandmarkSequence) -> LandmarkSequence:
    """Remove the per-frame head-pose similarity transform.

    The five stable anchors of every frame are aligned to the canonical
    template; the transform is applied to all 69 points, so shape residuals
    relative to the template survive. Frames whose anchors are degenerate
    are kept as they are and flagged.

    Args:
        seq: Landmark sequence

    Returns:
        Frontalized sequence
    """
    from signface.topology.template import canonical_template

    canonical = canonical_template()[list(STABLE_ANCHORS)]
    output = seq.coords.copy()
    flagged = list(seq.flagged_frames)

    for t, frame in enumerate(seq.coords):
        try:
            rotation, scale, anchor_mean, target_mean = _similarity_to(frame[list(STABLE_ANCHORS)], canonical)
        except FrontalizationError as e:
            logger.warning(f"Sample {seq.sample_id}, frame {t}: {str(e)}; frame left unaligned")
            flagged.append(t)
            continue
        output[t] = scale * (frame - anchor_mean) @ rotation + target_mean

    if len(set(flagged)) >= seq.num_frames:
        raise FrontalizationError(f"Sample {seq.sample_id}: no frame could be frontalized")

    return seq.with_coords(output, flagged_frames=flagged)


def _smoothing_factor(period: float, cutoff):
    r = 2.0 * math.pi * cutoff * period
    return r / (r + 1.0)


def one_euro_filter(
    seq: LandmarkSequence,
    min_cutoff: float = 1.0,
    beta: float = 0.007,
    d_cutoff: float = 1.0,
) -> LandmarkSequence:
    """Adaptive low-pass filter applied independently to every coordinate.

    Args:
        seq: Landmark sequence (its fps sets the sampling period)
        min_cutoff: Minimum cutoff frequency in Hz
        beta: Cutoff slope against speed
        d_cutoff: Cutoff for the derivative estimate in Hz

    Returns:
        Smoothed sequence; the first frame is unchanged
    """
    if min_cutoff <= 0 or d_cutoff <= 0:
        raise InvalidParameterError(f"cutoffs must be positive (min_cutoff={min_cutoff}, d_cutoff={d_cutoff})")
    if beta < 0:
        raise InvalidParameterError(f"beta must be non-negative, got {beta}")

    period = 1.0 / seq.fps
    alpha_d = _smoothing_factor(period, d_cutoff)

    output = np.empty_like(seq.coords)
    output[0] = seq.coords[0]
    x_prev = seq.coords[0]
    dx_prev = np.zeros_like(x_prev)

    for t in range(1, seq.num_frames):
        x = seq.coords[t]
        dx = (x - x_prev) / period
        dx_hat = alpha_d * dx + (1.0 - alpha_d) * dx_prev
        alpha = _smoothing_factor(period, min_cutoff + beta * np.abs(dx_hat))
        x_hat = alpha * x + (1.0 - alpha) * x_prev
        output[t] = x_hat
        x_prev, dx_prev = x_hat, dx_hat

    return seq.with_coords(output)


def resample_indices(num_frames: int, n: int) -> np.ndarray:
    """Indices round(i * (T - 1) / (n - 1)), rounding halves up."""
    if n < 1 or num_frames < 1:
        raise InvalidParameterError(f"frame counts must be positive (T={num_frames}, n={n})")
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    i = np.arange(n, dtype=np.int64)
    return (2 * i * (num_frames - 1) + (n - 1)) // (2 * (n - 1))


def resample_uniform(seq: LandmarkSequence, n: int) -> LandmarkSequence:
    """Select n frames uniformly over the sequence (no interpolation).

    Args:
        seq: Landmark sequence
        n: Target frame count

    Returns:
        Resampled sequence
    """
    indices = resample_indices(seq.num_frames, n)
    index_map = {int(old): new for new, old in enumerate(indices)}
    flagged = [index_map[t] for t in seq.flagged_frames if t in index_map]
    return seq.with_coords(seq.coords[indices]).model_copy(update={"flagged_frames": flagged})


def normalize_sequence(seq: LandmarkSequence) -> LandmarkSequence:
    """Apply normalize_bbox to every frame."""
    return seq.with_coords(normalize_bbox(seq.coords))
