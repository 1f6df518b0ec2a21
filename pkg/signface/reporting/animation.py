"""
Landmark-overlay animations: an animated GIF or a directory of PNG frames.
"""
import logging
from pathlib import Path
from typing import Iterable, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.animation import FuncAnimation, PillowWriter  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

logger = logging.getLogger(__name__)

MARGIN = 0.05


def _figure(coords: np.ndarray, title: str):
    fig, ax = plt.subplots(figsize=(4, 4))
    low = coords.reshape(-1, 2).min(axis=0) - MARGIN
    high = coords.reshape(-1, 2).max(axis=0) + MARGIN
    ax.set_xlim(low[0], high[0])
    # Image coordinates: y grows downwards
    ax.set_ylim(high[1], low[1])
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title, fontsize=8)
    return fig, ax


def render_animation(
    coords: np.ndarray,
    edges: Iterable[Tuple[int, int]],
    path: Union[str, Path],
    fps: float = 24.0,
    title: str = "",
) -> int:
    """Draw every frame's landmarks and graph edges.

    A ``.gif`` path gives an animated image; any other path is treated as a
    directory receiving ``frame_000.png`` ... files.

    Args:
        coords: (T, V, 2) landmark sequence
        edges: Face-graph edges to draw
        path: Output file or directory
        fps: Playback rate
        title: Optional caption

    Returns:
        Number of frames written
    """
    coords = np.asarray(coords, dtype=np.float64)
    edges = list(edges)
    path = Path(path)

    fig, ax = _figure(coords, title)
    points = ax.scatter(coords[0, :, 0], coords[0, :, 1], s=6, c="black")
    lines = LineCollection([coords[0, [i, j]] for i, j in edges], linewidths=0.6, colors="steelblue")
    ax.add_collection(lines)

    def update(t):
        points.set_offsets(coords[t])
        lines.set_segments([coords[t, [i, j]] for i, j in edges])
        return points, lines

    try:
        if path.suffix.lower() == ".gif":
            path.parent.mkdir(parents=True, exist_ok=True)
            animation = FuncAnimation(fig, update, frames=coords.shape[0], blit=False)
            animation.save(path, writer=PillowWriter(fps=fps))
        else:
            path.mkdir(parents=True, exist_ok=True)
            for t in range(coords.shape[0]):
                update(t)
                fig.savefig(path / f"frame_{t:03d}.png", dpi=80)
    finally:
        plt.close(fig)

    logger.info(f"Rendered {coords.shape[0]} frames to {path}")
    return coords.shape[0]
