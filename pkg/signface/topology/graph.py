"""
Face graph construction: k-NN augmentation and geodesic (hop) distances.
"""
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from sklearn.metrics import pairwise_distances

from signface.core.errors import InvalidParameterError

Edge = Tuple[int, int]


def _normalize_edges(edges: Iterable[Edge], num_vertices: int) -> FrozenSet[Edge]:
    normalized = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if not (0 <= i < num_vertices and 0 <= j < num_vertices):
            raise InvalidParameterError(f"edge ({i}, {j}) out of range for {num_vertices} vertices")
        if i != j:
            normalized.add((min(i, j), max(i, j)))
    return frozenset(normalized)


@dataclass(frozen=True)
class FaceGraph:
    """Undirected face graph; edges are stored once as (low, high) pairs."""

    num_vertices: int
    edges: FrozenSet[Edge]
    base_positions: np.ndarray

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency without self-loops."""
        adjacency = np.zeros((self.num_vertices, self.num_vertices), dtype=np.float64)
        for i, j in self.edges:
            adjacency[i, j] = 1.0
            adjacency[j, i] = 1.0
        return adjacency

    def normalized_adjacency(self) -> np.ndarray:
        """D^-1/2 (A + I) D^-1/2."""
        adjacency = self.adjacency() + np.eye(self.num_vertices)
        inv_sqrt = 1.0 / np.sqrt(adjacency.sum(axis=1))
        return adjacency * inv_sqrt[:, None] * inv_sqrt[None, :]


def nearest_neighbors(positions: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other points per point, ties to the lower index.

    Args:
        positions: (P, 2) coordinates
        k: Neighbour count

    Returns:
        (P, k) integer array
    """
    num_points = positions.shape[0]
    distances = pairwise_distances(positions)
    np.fill_diagonal(distances, np.inf)
    order = np.arange(num_points)
    neighbors = np.empty((num_points, k), dtype=np.int64)
    for i in range(num_points):
        # lexsort sorts by the last key first, index breaks ties
        neighbors[i] = np.lexsort((order, distances[i]))[:k]
    return neighbors


def build_knn_graph(positions: np.ndarray, k: int, base_edges: Iterable[Edge] = ()) -> FaceGraph:
    """Build base_edges plus each vertex's k nearest neighbours, symmetrized.

    Args:
        positions: (P, 2) finite coordinates
        k: Neighbour count, 0 <= k < P
        base_edges: Edges always present

    Returns:
        FaceGraph over P vertices
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise InvalidParameterError(f"positions must be (P, 2), got {positions.shape}")
    if not np.isfinite(positions).all():
        raise InvalidParameterError("positions must be finite")

    num_points = positions.shape[0]
    if k < 0 or k >= num_points:
        raise InvalidParameterError(f"k must satisfy 0 <= k < P, got k={k} for P={num_points}")

    edges = set(_normalize_edges(base_edges, num_points))
    if k > 0:
        for i, row in enumerate(nearest_neighbors(positions, k)):
            for j in row:
                edges.add((min(i, int(j)), max(i, int(j))))

    positions = positions.copy()
    positions.setflags(write=False)
    return FaceGraph(num_vertices=num_points, edges=frozenset(edges), base_positions=positions)


def _csr(graph: FaceGraph) -> csr_matrix:
    return csr_matrix(graph.adjacency())


def geodesic_distances(graph: FaceGraph, source: int) -> np.ndarray:
    """Breadth-first hop distance from source; unreachable vertices are inf.

    Args:
        graph: Face graph
        source: Source vertex index

    Returns:
        (num_vertices,) float array
    """
    if not 0 <= source < graph.num_vertices:
        raise IndexError(f"source {source} out of range for {graph.num_vertices} vertices")
    distances = shortest_path(_csr(graph), directed=False, unweighted=True, indices=source)
    return np.atleast_2d(distances)[0]


def geodesic_matrix(graph: FaceGraph, sources: List[int]) -> np.ndarray:
    """Hop distances from each source to every vertex, shape (len(sources), V)."""
    return shortest_path(_csr(graph), directed=False, unweighted=True, indices=list(sources))


def farthest_point_order(positions: np.ndarray, seed: int) -> List[int]:
    """Order all points by farthest-point sampling starting at seed.

    Ties go to the lower index.
    """
    positions = np.asarray(positions, dtype=np.float64)
    distances = pairwise_distances(positions)
    order = [int(seed)]
    min_distance = distances[seed].copy()
    min_distance[seed] = -np.inf
    while len(order) < positions.shape[0]:
        nxt = int(np.argmax(min_distance))
        order.append(nxt)
        min_distance = np.minimum(min_distance, distances[nxt])
        min_distance[order] = -np.inf
    return order
