#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Zipper: stitches the mid-polylines of consecutive slices into a triangle mesh.

Edges of two consecutive slices are matched by the distance between their
centers. Mutually and uniquely nearest edges within the hole threshold are
valid pairs and become quads split along the diagonal keeping the larger
minimum angle. Other edges whose nearest counterpart is within the threshold
are non-pair edges and get a single triangle towards the closest endpoint of
that counterpart. Edges with no counterpart in reach are skipped, which is
how holes of the input survive in the mesh.
"""

import math

import numpy as np

from scipy.spatial import cKDTree
from typeguard import typechecked

from midmesh.context import debug, warn
from midmesh.mesh import MidSurfaceMesh, isDegenerate, triangleAngles
from midmesh.tracing import STEP_FACTOR, PolylineStack

TYP_SOURCE = tuple[int, int, int]
TYP_TRIANGLE = tuple[int, int, int]

HOLE_FACTOR = 2.0
ANGLE_TIE = 1e-9


@typechecked()
class ZipEdge():
    """Polyline segment lifted to 3D, between vertices i1 and i2 of the mesh."""
    _i1 = None
    _i2 = None
    _p1 = None
    _p2 = None
    _source = None

    def __init__(self, i1: int, i2: int, p1: np.ndarray, p2: np.ndarray, source: TYP_SOURCE):
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        if np.array_equal(p1, p2):
            raise ValueError(f"Zip edge {source} has coincident endpoints {p1.tolist()}")
        self._i1 = i1
        self._i2 = i2
        self._p1 = p1
        self._p2 = p2
        self._source = source

    def __repr__(self):
        return super().__repr__() + f"({self._i1}-{self._i2}, source={self._source})"

    @property
    def i1(self) -> int:
        return self._i1

    @property
    def i2(self) -> int:
        return self._i2

    @property
    def p1(self) -> np.ndarray:
        return self._p1

    @property
    def p2(self) -> np.ndarray:
        return self._p2

    @property
    def center(self) -> np.ndarray:
        return (self._p1 + self._p2) / 2.0

    @property
    def direction(self) -> np.ndarray:
        return self._p2 - self._p1

    @property
    def source(self) -> TYP_SOURCE:
        """Returns (slice index, polyline index within the slice, segment index)."""
        return self._source

    @property
    def sliceIndex(self) -> int:
        return self._source[0]


@typechecked()
class PairingResult():
    """Classification of the edges of two consecutive slices."""
    _validPairs = None
    _nonPairs = None
    _skipped = None

    def __init__(self, validPairs: list, nonPairs: list, skipped: list):
        self._validPairs = validPairs
        self._nonPairs = nonPairs
        self._skipped = skipped

    def __repr__(self):
        return super().__repr__() + f"(valid={len(self._validPairs)}, nonpair={len(self._nonPairs)}, skipped={len(self._skipped)})"

    @property
    def validPairs(self) -> list[tuple[ZipEdge, ZipEdge]]:
        """Returns (lower edge, upper edge) pairs."""
        return self._validPairs

    @property
    def nonPairs(self) -> list[tuple[ZipEdge, ZipEdge]]:
        """Returns (edge, nearest counterpart) for both slices."""
        return self._nonPairs

    @property
    def skipped(self) -> list[ZipEdge]:
        return self._skipped


def _nearest(tree, centers):
    """Returns (nearest distances, nearest indices, uniqueness) of centers in tree."""
    k = min(2, tree.n)
    distances, indices = tree.query(centers, k=k)
    distances = np.asarray(distances).reshape(len(centers), k)
    indices = np.asarray(indices).reshape(len(centers), k)
    unique = distances[:, 1] > distances[:, 0] if k == 2 else np.ones(len(centers), dtype=bool)
    return distances[:, 0], indices[:, 0], unique


@typechecked()
def pairEdges(lower: list[ZipEdge], upper: list[ZipEdge], holeThreshold: float) -> PairingResult:
    """Classifies every edge of both slices as valid pair, non-pair or skipped."""
    if not lower or not upper:
        return PairingResult([], [], list(lower) + list(upper))

    lowerCenters = np.asarray([_.center for _ in lower])
    upperCenters = np.asarray([_.center for _ in upper])
    dLower, nLower, uLower = _nearest(cKDTree(upperCenters), lowerCenters)
    dUpper, nUpper, uUpper = _nearest(cKDTree(lowerCenters), upperCenters)

    paired = np.zeros(len(lower), dtype=bool)
    pairedUpper = np.zeros(len(upper), dtype=bool)
    validPairs = []
    for a in range(len(lower)):
        b = int(nLower[a])
        if uLower[a] and uUpper[b] and int(nUpper[b]) == a and dLower[a] <= holeThreshold:
            validPairs += [(lower[a], upper[b])]
            paired[a] = pairedUpper[b] = True

    nonPairs, skipped = [], []
    for edges, flags, distances, nearest, others in ((lower, paired, dLower, nLower, upper), (upper, pairedUpper, dUpper, nUpper, lower)):
        for index, edge in enumerate(edges):
            if flags[index]:
                continue
            if distances[index] <= holeThreshold:
                nonPairs += [(edge, others[int(nearest[index])])]
            else:
                skipped += [edge]
    return PairingResult(validPairs, nonPairs, skipped)


def _keepSound(triangles, points):
    """Drops degenerate triangles."""
    if not triangles:
        return []
    corners = np.asarray([[points[_] for _ in tri] for tri in triangles])
    return [tri for tri, bad in zip(triangles, isDegenerate(corners)) if not bad]


@typechecked()
def triangulatePair(lower: ZipEdge, upper: ZipEdge) -> list[TYP_TRIANGLE]:
    """Splits the quad (lower.i1, lower.i2, upper ends) into two triangles, upper vertices last.

    The upper edge is reversed if its straight correspondence is longer than
    the crossed one. The diagonal keeping the larger minimum interior angle
    wins, ties going to (v2, v3)."""
    v1, v2 = lower.i1, lower.i2
    v3, v4 = upper.i1, upper.i2
    points = {v1: lower.p1, v2: lower.p2, v3: upper.p1, v4: upper.p2}
    p1, p2, p3, p4 = lower.p1, lower.p2, upper.p1, upper.p2
    if np.linalg.norm(p1 - p4) + np.linalg.norm(p2 - p3) < np.linalg.norm(p1 - p3) + np.linalg.norm(p2 - p4):
        v3, v4 = v4, v3
        p3, p4 = p4, p3
        points[v3], points[v4] = p3, p4

    splitA = [(v1, v2, v3), (v2, v4, v3)]
    splitB = [(v1, v2, v4), (v1, v4, v3)]
    minA = triangleAngles(np.asarray([[p1, p2, p3], [p2, p4, p3]])).min()
    minB = triangleAngles(np.asarray([[p1, p2, p4], [p1, p4, p3]])).min()
    return _keepSound(splitB if minB > minA + ANGLE_TIE else splitA, points)


@typechecked()
def triangulateNonpair(edge: ZipEdge, nearest: ZipEdge) -> list[TYP_TRIANGLE]:
    """Connects the edge to the endpoint of `nearest` closest to its center (0 or 1 triangle)."""
    center = edge.center
    if np.linalg.norm(nearest.p2 - center) < np.linalg.norm(nearest.p1 - center):
        apex, apexPoint = nearest.i2, nearest.p2
    else:
        apex, apexPoint = nearest.i1, nearest.p1

    if edge.p1[2] <= apexPoint[2]:
        triangle = (edge.i1, edge.i2, apex)
    elif float(np.dot(edge.direction, nearest.direction)) >= 0:
        triangle = (apex, edge.i2, edge.i1)
    else:
        triangle = (apex, edge.i1, edge.i2)
    return _keepSound([triangle], {edge.i1: edge.p1, edge.i2: edge.p2, apex: apexPoint})


@typechecked()
def holeThreshold(sliceSpacing: float) -> float:
    """Returns 2 * sqrt(h^2 + sz^2), the longest admissible link between two slices."""
    h = STEP_FACTOR * sliceSpacing
    return HOLE_FACTOR * math.hypot(h, sliceSpacing)


@typechecked()
def zipStack(stack: PolylineStack) -> MidSurfaceMesh:
    """Builds the mid-surface mesh of a stack. Vertices are ordered by slice, polyline, then point."""
    if len(stack) == 0:
        raise ValueError("Cannot zip an empty polyline stack")

    vertices, edges = [], {}
    for z in stack.slices():
        height = stack.sliceHeight(z)
        edges[z] = []
        for number, polyline in enumerate(stack.polylines(z)):
            base = len(vertices)
            points = np.column_stack((polyline.points, np.full(len(polyline), height)))
            vertices += list(points)
            count = len(polyline)
            ends = range(count if polyline.closed else count - 1)
            edges[z] += [ZipEdge(base + _, base + (_ + 1) % count, points[_], points[(_ + 1) % count], (z, number, _)) for _ in ends]

    vertices = np.asarray(vertices)
    flags = []
    slices = stack.slices()
    if len(slices) == 1:
        warn(f"Polyline stack holds a single slice ({slices[0]}), the mesh has no triangle")
        flags += ["single-slice"]

    threshold = holeThreshold(stack.sliceSpacing)
    triangles, seen = [], set()
    for z in slices:
        if z + 1 not in edges:
            continue
        pairing = pairEdges(edges[z], edges[z + 1], threshold)
        debug(f"zip {z}-{z + 1}: {pairing!r}")
        emitted = []
        for lower, upper in pairing.validPairs:
            emitted += triangulatePair(lower, upper)
        for edge, nearest in pairing.nonPairs:
            emitted += triangulateNonpair(edge, nearest)
        for triangle in emitted:
            key = tuple(sorted(triangle))
            if key not in seen:
                seen.add(key)
                triangles += [triangle]

    return MidSurfaceMesh(vertices, np.asarray(triangles, dtype=np.int64).reshape(-1, 3), flags=flags)
