"""
Canonical frontal face template and the base (contour chain) edges.

Coordinates follow the image convention (y grows downwards) and are
normalized with the bounding-box rule, so the template lies in [0, 1].
"""
from functools import lru_cache
from typing import FrozenSet, List, Tuple

import numpy as np

from signface.core.config import NUM_DETECTED_LANDMARKS, ROOT_VERTEX, STABLE_ANCHORS

# (start, stop, closed) chains of the 68-landmark convention
CONTOUR_CHAINS = (
    (0, 17, False),   # jaw
    (17, 22, False),  # left brow
    (22, 27, False),  # right brow
    (27, 36, False),  # nose bridge and nostrils
    (36, 42, True),   # left eye
    (42, 48, True),   # right eye
    (48, 60, True),   # outer lips
    (60, 68, True),   # inner lips
)


def _ellipse(center: Tuple[float, float], a: float, b: float, angles: np.ndarray) -> np.ndarray:
    return np.stack([center[0] + a * np.cos(angles), center[1] - b * np.sin(angles)], axis=1)


def detected_template() -> np.ndarray:
    """Return the 68 canonical landmarks before normalization."""
    points: List[np.ndarray] = []

    # Jaw from the left ear over the chin to the right ear
    t = np.arange(17) / 16.0
    points.append(np.stack([-0.95 * np.cos(np.pi * t), -0.1 + 1.1 * np.sin(np.pi * t)], axis=1))

    # Brows, arched upwards
    t = np.arange(5) / 4.0
    arch = -0.55 - 0.1 * np.sin(np.pi * t)
    points.append(np.stack([-0.8 + 0.6 * t, arch], axis=1))
    points.append(np.stack([0.2 + 0.6 * t, arch[::-1]], axis=1))

    # Nose bridge and nostrils (33 is the tip)
    points.append(np.stack([np.zeros(4), np.linspace(-0.35, 0.1, 4)], axis=1))
    t = np.arange(5) / 4.0
    points.append(np.stack([-0.2 + 0.4 * t, 0.2 + 0.04 * np.sin(np.pi * t)], axis=1))

    # Eyes: outer corner, two upper lid points, inner corner, two lower lid points
    eye_angles = np.pi * np.array([1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0, -1.0 / 3.0, -2.0 / 3.0])
    points.append(_ellipse((-0.45, -0.3), 0.17, 0.07, eye_angles))
    points.append(_ellipse((0.45, -0.3), 0.17, 0.07, eye_angles))

    # Outer lips: left corner, upper lip, right corner, lower lip
    outer = np.pi * (1.0 - np.arange(12) / 6.0)
    points.append(_ellipse((0.0, 0.5), 0.35, 0.15, outer))

    # Inner lips
    inner = np.pi * (1.0 - np.arange(8) / 4.0)
    points.append(_ellipse((0.0, 0.5), 0.22, 0.06, inner))

    template = np.concatenate(points, axis=0)
    assert template.shape == (NUM_DETECTED_LANDMARKS, 2)
    return template


def append_centroid(coords: np.ndarray) -> np.ndarray:
    """Append the centroid of the 68 detected landmarks as vertex 68.

    Args:
        coords: (..., 68, 2) array

    Returns:
        (..., 69, 2) array
    """
    coords = np.asarray(coords, dtype=np.float64)
    centroid = coords.mean(axis=-2, keepdims=True)
    return np.concatenate([coords, centroid], axis=-2)


@lru_cache(maxsize=1)
def _canonical_template() -> np.ndarray:
    from signface.preprocessing.conditioning import normalize_bbox

    template = normalize_bbox(append_centroid(detected_template()))
    template.setflags(write=False)
    return template


def canonical_template() -> np.ndarray:
    """Return the normalized 69-vertex template (a fresh copy)."""
    return _canonical_template().copy()


def canonical_base_edges() -> FrozenSet[Tuple[int, int]]:
    """Contour chains plus root links to the five stable anchors."""
    edges = set()
    for start, stop, closed in CONTOUR_CHAINS:
        for i in range(start, stop - 1):
            edges.add((i, i + 1))
        if closed:
            edges.add((start, stop - 1))
    for anchor in STABLE_ANCHORS:
        edges.add((min(anchor, ROOT_VERTEX), max(anchor, ROOT_VERTEX)))
    return frozenset(edges)
