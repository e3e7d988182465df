#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Indexed triangle mesh with the topology queries used by the zipper, the reports and the tests."""

import numpy as np

from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from typeguard import typechecked

DEGENERATE_EPS = 1e-12


def _asTriangles(points):
    points = np.asarray(points, dtype=float)
    return points[None] if points.ndim == 2 else points


@typechecked()
def triangleAreas(points: np.ndarray) -> np.ndarray:
    """Returns areas of triangles given as an (M, 3, 3) array (or a single (3, 3) one)."""
    tri = _asTriangles(points)
    return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)


@typechecked()
def edgeLengths(points: np.ndarray) -> np.ndarray:
    """Returns (M, 3) lengths of the edges opposite to each corner."""
    tri = _asTriangles(points)
    return np.stack(
        (
            np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
            np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
        ),
        axis=1,
    )


@typechecked()
def isDegenerate(points: np.ndarray) -> np.ndarray:
    """Returns True for triangles of (numerically) zero area."""
    longest = edgeLengths(points).max(axis=1)
    return triangleAreas(points) <= DEGENERATE_EPS * np.maximum(longest**2, DEGENERATE_EPS)


@typechecked()
def triangleAngles(points: np.ndarray) -> np.ndarray:
    """Returns (M, 3) interior angles in degrees from the law of cosines.
    Degenerate triangles get (0, 0, 180)."""
    lengths = edgeLengths(points)
    degenerate = isDegenerate(points)
    safe = np.where(degenerate[:, None], 1.0, lengths)
    sa, sb, sc = safe[:, 0], safe[:, 1], safe[:, 2]
    angles = np.degrees(
        np.arccos(
            np.clip(
                np.stack(
                    (
                        (sb**2 + sc**2 - sa**2) / (2.0 * sb * sc),
                        (sa**2 + sc**2 - sb**2) / (2.0 * sa * sc),
                        (sa**2 + sb**2 - sc**2) / (2.0 * sa * sb),
                    ),
                    axis=1,
                ),
                -1.0,
                1.0,
            )))
    angles[degenerate] = (0.0, 0.0, 180.0)
    return angles


@typechecked()
class MidSurfaceMesh():
    """Vertices (N x 3, physical coordinates) and triangles (M x 3 vertex indices)."""
    _vertices = None
    _triangles = None
    _flags = None

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray, flags: list[str] | None = None):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        self._vertices = vertices
        self._triangles = triangles
        self._flags = [] if flags is None else list(flags)

    def __repr__(self):
        return super().__repr__() + f"(vertices={self.vertexCount}, triangles={self.triangleCount})"

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def triangles(self) -> np.ndarray:
        return self._triangles

    @property
    def flags(self) -> list[str]:
        """Returns markers such as "single-slice"."""
        return self._flags

    @property
    def vertexCount(self) -> int:
        return len(self._vertices)

    @property
    def triangleCount(self) -> int:
        return len(self._triangles)

    def trianglePoints(self) -> np.ndarray:
        """Returns the (M, 3, 3) corner coordinates of every triangle."""
        return self._vertices[self._triangles]

    def edges(self) -> np.ndarray:
        """Returns the unique undirected edges (E x 2, smaller index first), sorted."""
        if self.triangleCount == 0:
            return np.zeros((0, 2), dtype=np.int64)
        return np.unique(self._halfEdges(), axis=0)

    def _halfEdges(self):
        tri = self._triangles
        pairs = np.concatenate((tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]))
        return np.sort(pairs, axis=1)

    def edgeTriangleCounts(self) -> tuple[np.ndarray, np.ndarray]:
        """Returns (edges, number of triangles bordering each edge)."""
        if self.triangleCount == 0:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
        edges, counts = np.unique(self._halfEdges(), axis=0, return_counts=True)
        return edges, counts

    def boundaryEdges(self) -> np.ndarray:
        """Returns edges bordered by exactly one triangle."""
        edges, counts = self.edgeTriangleCounts()
        return edges[counts == 1]

    def valences(self) -> np.ndarray:
        """Returns, per vertex, the number of distinct edges incident to it."""
        return np.bincount(self.edges().ravel(), minlength=self.vertexCount)

    def boundaryLoops(self) -> list[list[int]]:
        """Returns the boundary loops as vertex index walks (one per connected set of boundary edges)."""
        boundary = self.boundaryEdges()
        if len(boundary) == 0:
            return []
        n = self.vertexCount
        graph = coo_matrix((np.ones(len(boundary)), (boundary[:, 0], boundary[:, 1])), shape=(n, n))
        _, labels = connected_components(graph, directed=False)

        neighbours = {}
        for a, b in boundary.tolist():
            neighbours.setdefault(a, []).append(b)
            neighbours.setdefault(b, []).append(a)

        loops = {}
        for vertex in sorted(neighbours):
            loops.setdefault(int(labels[vertex]), []).append(vertex)
        walks = []
        for members in loops.values():
            start = members[0]
            walk, used, current = [start], set(), start
            while True:
                nexts = [_ for _ in sorted(neighbours[current]) if (min(current, _), max(current, _)) not in used]
                if not nexts:
                    break
                used.add((min(current, nexts[0]), max(current, nexts[0])))
                current = nexts[0]
                if current == start:
                    break
                walk += [current]
            walks += [walk]
        return walks

    def isManifold(self) -> bool:
        """Returns True if no edge borders more than two triangles."""
        _, counts = self.edgeTriangleCounts()
        return bool(np.all(counts <= 2))

    def validate(self) -> None:
        """Raises ValueError if an index is out of range or a triangle is degenerate or duplicated."""
        if self.triangleCount == 0:
            return
        if self._triangles.min() < 0 or self._triangles.max() >= self.vertexCount:
            raise ValueError(f"Triangle index out of range [0, {self.vertexCount})")
        degenerate = np.flatnonzero(isDegenerate(self.trianglePoints()))
        if len(degenerate):
            raise ValueError(f"Degenerate triangle(s) at {degenerate[:5].tolist()}")
        keys = np.sort(self._triangles, axis=1)
        if len(np.unique(keys, axis=0)) != self.triangleCount:
            raise ValueError("Duplicate triangle(s) in mesh")
