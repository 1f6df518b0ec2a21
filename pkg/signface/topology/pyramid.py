"""
Multi-scale face graph pyramid with geodesic inter-level adjacency masks.
"""
import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from signface.core.config import KNN_NEIGHBORS, LEVEL_SIZES, MAX_GEODESIC, ROOT_VERTEX, TOPOLOGY_VERSION
from signface.core.errors import InvalidParameterError
from signface.topology.graph import (
    Edge,
    FaceGraph,
    build_knn_graph,
    farthest_point_order,
    geodesic_matrix,
)
from signface.topology.template import canonical_base_edges, canonical_template

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphPyramid:
    """Ordered face graphs from one vertex to the full face.

    ``level_vertices[l]`` lists the template indices of level ``l``;
    ``correspondences[p][j]`` is the fine-level index anchoring coarse vertex
    ``j`` of pair ``p``; ``inter_level_adjacency[p]`` has shape (B, V', V).
    """

    levels: Tuple[FaceGraph, ...]
    level_vertices: Tuple[Tuple[int, ...], ...]
    correspondences: Tuple[Tuple[int, ...], ...]
    inter_level_adjacency: Tuple[np.ndarray, ...]
    template: np.ndarray
    k: int
    max_geodesic: int
    topology_version: str = TOPOLOGY_VERSION

    @property
    def level_sizes(self) -> List[int]:
        return [level.num_vertices for level in self.levels]

    def orphan_vertices(self) -> Dict[int, List[int]]:
        """Fine vertices without any inter-level connection, per level pair."""
        orphans = {}
        for pair, masks in enumerate(self.inter_level_adjacency):
            rows = np.flatnonzero(masks.sum(axis=(0, 2)) == 0)
            if rows.size:
                orphans[pair] = rows.tolist()
        return orphans

    def to_document(self) -> Dict:
        """JSON-serializable topology document."""
        return {
            "topology_version": self.topology_version,
            "k": self.k,
            "max_geodesic": self.max_geodesic,
            "level_sizes": self.level_sizes,
            "template": self.template.tolist(),
            "levels": [
                {"vertices": list(vertices), "edges": [list(e) for e in level.sorted_edges()]}
                for vertices, level in zip(self.level_vertices, self.levels)
            ],
            "correspondences": [list(c) for c in self.correspondences],
            "inter_level_adjacency": [masks.astype(int).tolist() for masks in self.inter_level_adjacency],
        }

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(self.to_document(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


def _parent_links(template: np.ndarray, coarse: Sequence[int], fine: Sequence[int]) -> List[Edge]:
    """Link every vertex new at this level to its nearest vertex of the previous level."""
    local = {v: i for i, v in enumerate(fine)}
    coarse_set = set(coarse)
    links = []
    for v in fine:
        if v in coarse_set:
            continue
        candidates = list(coarse)
        distances = np.linalg.norm(template[candidates] - template[v], axis=1)
        nearest = candidates[int(np.lexsort((np.arange(len(candidates)), distances))[0])]
        links.append((local[v], local[nearest]))
    return links


def inter_level_masks(fine_graph: FaceGraph, anchors: Sequence[int], max_geodesic: int) -> np.ndarray:
    """A^w[b][i][j] = 1 iff hop distance(fine i, anchor of coarse j) == b, b < B."""
    distances = geodesic_matrix(fine_graph, list(anchors))  # (V, V')
    masks = np.zeros((max_geodesic, fine_graph.num_vertices, len(anchors)), dtype=np.float64)
    for b in range(max_geodesic):
        masks[b] = (distances.T == b).astype(np.float64)
    return masks


def link_orphans(masks: np.ndarray, positions: np.ndarray, anchors: Sequence[int]) -> List[int]:
    """Connect fine vertices that have no anchor within B - 1 hops.

    Each such row gets a single entry in the outermost slice, pointing at
    the anchor nearest in template coordinates (ties to the lower index).

    Args:
        masks: (B, V', V) masks, updated in place
        positions: (V', 2) fine-level template coordinates
        anchors: Fine-level index of every coarse vertex

    Returns:
        Rows that were linked
    """
    orphans = np.flatnonzero(masks.sum(axis=(0, 2)) == 0)
    anchor_positions = positions[list(anchors)]
    for i in orphans:
        distances = np.linalg.norm(anchor_positions - positions[i], axis=1)
        nearest = int(np.lexsort((np.arange(len(anchors)), distances))[0])
        masks[-1, i, nearest] = 1.0
    return orphans.tolist()


def build_pyramid(
    template: Optional[np.ndarray] = None,
    level_sizes: Sequence[int] = LEVEL_SIZES,
    k: int = KNN_NEIGHBORS,
    max_geodesic: int = MAX_GEODESIC,
) -> GraphPyramid:
    """Build the graph pyramid over the face template.

    Coarse levels are farthest-point-sampling prefixes seeded at the root
    vertex, so every coarse vertex anchors to itself in the finer level.

    Args:
        template: (69, 2) template; the canonical template when omitted
        level_sizes: Strictly increasing sizes ending at the template size
        k: k-NN neighbours per level (capped at level size - 1)
        max_geodesic: B, the number of geodesic slices

    Returns:
        GraphPyramid
    """
    template = canonical_template() if template is None else np.asarray(template, dtype=np.float64)
    level_sizes = [int(s) for s in level_sizes]

    if any(b <= a for a, b in zip(level_sizes, level_sizes[1:])) or level_sizes[0] < 1:
        raise InvalidParameterError(f"level sizes must be strictly increasing and positive: {level_sizes}")
    if level_sizes[-1] != template.shape[0]:
        raise InvalidParameterError(
            f"finest level must match the template ({template.shape[0]} vertices), got {level_sizes[-1]}"
        )
    if max_geodesic < 1:
        raise InvalidParameterError(f"max_geodesic must be >= 1, got {max_geodesic}")
    if k < 0:
        raise InvalidParameterError(f"k must be >= 0, got {k}")

    seed = ROOT_VERTEX if template.shape[0] > ROOT_VERTEX else 0
    order = farthest_point_order(template, seed)
    level_vertices = [tuple(sorted(order[:size])) for size in level_sizes]

    levels = []
    for index, vertices in enumerate(level_vertices):
        positions = template[list(vertices)]
        level_k = min(k, len(vertices) - 1)
        if index == len(level_vertices) - 1:
            base = canonical_base_edges() if template.shape[0] > ROOT_VERTEX else ()
        elif index == 0:
            base = ()
        else:
            base = _parent_links(template, level_vertices[index - 1], vertices)
        levels.append(build_knn_graph(positions, level_k, base))

    correspondences = []
    masks = []
    for pair, (coarse, fine, fine_graph) in enumerate(zip(level_vertices, level_vertices[1:], levels[1:])):
        local = {v: i for i, v in enumerate(fine)}
        anchors = tuple(local[v] for v in coarse)
        correspondences.append(anchors)
        pair_masks = inter_level_masks(fine_graph, anchors, max_geodesic)
        linked = link_orphans(pair_masks, template[list(fine)], anchors)
        if linked:
            logger.warning(
                f"Level pair {pair}: {len(linked)} fine vertices have no anchor within {max_geodesic - 1} hops; "
                f"linked to their nearest anchor"
            )
        masks.append(pair_masks)

    template = template.copy()
    template.setflags(write=False)
    return GraphPyramid(
        levels=tuple(levels),
        level_vertices=tuple(level_vertices),
        correspondences=tuple(correspondences),
        inter_level_adjacency=tuple(masks),
        template=template,
        k=k,
        max_geodesic=max_geodesic,
    )

