"""
Static plots: distance distributions and loss curves.
"""
from pathlib import Path
from typing import List, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from signface.models.report import DistanceDistribution  # noqa: E402
from signface.training.history import LossRecord  # noqa: E402


def save_distribution_plot(distribution: DistanceDistribution, path: Union[str, Path], title: str = "") -> Path:
    """Histogram of average landmark distances as a PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    edges = distribution.bin_edges
    widths = [b - a for a, b in zip(edges, edges[1:])]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(edges[:-1], distribution.counts, width=widths, align="edge", edgecolor="black")
    ax.axvline(distribution.mean, color="red", linestyle="--", label=f"mean {distribution.mean:.4f}")
    ax.set_xlabel("Avg. landmark distance")
    ax.set_ylabel("Sequences")
    ax.set_title(title or "Avg. landmark distance distribution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def save_loss_plot(history: List[LossRecord], path: Union[str, Path], label: str = "loss") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r.iteration for r in history], [r.batch_loss for r in history])
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel(label)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
