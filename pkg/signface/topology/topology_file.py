"""
Versioned topology file (JSON).
"""
import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from signface.core.config import TOPOLOGY_VERSION
from signface.core.errors import MissingArtifactError, VersionMismatchError
from signface.topology.graph import FaceGraph
from signface.topology.pyramid import GraphPyramid

logger = logging.getLogger(__name__)


def save_topology(pyramid: GraphPyramid, path: Union[str, Path]) -> Path:
    """Write the pyramid as a topology document.

    Args:
        pyramid: Graph pyramid
        path: Output path

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(pyramid.to_document(), f)
    logger.info(f"Topology {pyramid.fingerprint} written to {path}")
    return path


def load_topology(path: Union[str, Path]) -> GraphPyramid:
    """Load a topology document, rejecting unknown versions.

    Args:
        path: Topology file

    Returns:
        GraphPyramid
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"Topology file not found: {path}")

    with open(path, "r") as f:
        document = json.load(f)

    version = document.get("topology_version", "<missing>")
    if version != TOPOLOGY_VERSION:
        raise VersionMismatchError("topology", TOPOLOGY_VERSION, version)

    template = np.asarray(document["template"], dtype=np.float64)
    template.setflags(write=False)

    levels = []
    level_vertices = []
    for level in document["levels"]:
        vertices = tuple(int(v) for v in level["vertices"])
        positions = template[list(vertices)]
        positions.setflags(write=False)
        edges = frozenset((int(i), int(j)) for i, j in level["edges"])
        levels.append(FaceGraph(num_vertices=len(vertices), edges=edges, base_positions=positions))
        level_vertices.append(vertices)

    return GraphPyramid(
        levels=tuple(levels),
        level_vertices=tuple(level_vertices),
        correspondences=tuple(tuple(int(a) for a in c) for c in document["correspondences"]),
        inter_level_adjacency=tuple(np.asarray(m, dtype=np.float64) for m in document["inter_level_adjacency"]),
        template=template,
        k=int(document["k"]),
        max_geodesic=int(document["max_geodesic"]),
        topology_version=version,
    )
