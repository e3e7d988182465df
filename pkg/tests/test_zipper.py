#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests related to the zipper."""

import math

import numpy as np

from ward import test, raises

from midmesh import MidPolyline, PolylineStack, ZipEdge, pairEdges, triangulatePair, triangulateNonpair, zipStack
from midmesh import getCurrentContext
from midmesh.context import addContext, popContext
from midmesh.mesh import triangleAngles
from midmesh.zipper import holeThreshold

THRESHOLD = holeThreshold(1.0)


def chain(points, base, z, closed=False):
    """Returns the zip edges of a polyline given as N x 3 points, vertex indices starting at base."""
    points = np.asarray(points, dtype=float)
    count = len(points)
    ends = range(count if closed else count - 1)
    return [ZipEdge(base + k, base + (k + 1) % count, points[k], points[(k + 1) % count], (z, 0, k)) for k in ends]


def circle(n, radius, z, phase=0.0):
    angles = phase + np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.stack([radius * np.cos(angles), radius * np.sin(angles), np.full(n, float(z))], axis=1)


def directedEdges(triangles):
    return [(a, b) for tri in triangles for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))]


@test("holeThreshold is twice the diagonal of a step by a slice")
def test_01_holeThreshold():
    """holeThreshold is twice the diagonal of a step by a slice"""
    assert abs(THRESHOLD - 2.0 * math.sqrt(3.0)) < 1e-12
    assert abs(holeThreshold(0.5) - math.sqrt(3.0)) < 1e-12
    with raises(ValueError):
        ZipEdge(0, 1, np.zeros(3), np.zeros(3), (0, 0, 0))


@test("Identical polylines on consecutive slices pair edge by edge")
def test_02_pairEdgesIdentical():
    """Identical polylines on consecutive slices pair edge by edge"""
    lower = chain([[k, 0.0, 0.0] for k in range(6)], 0, 0)
    upper = chain([[k, 0.0, 1.0] for k in range(6)], 6, 1)
    pairing = pairEdges(lower, upper, THRESHOLD)
    assert [(a.source, b.source) for a, b in pairing.validPairs] == [((0, 0, k), (1, 0, k)) for k in range(5)]
    assert pairing.nonPairs == [] and pairing.skipped == []


@test("Pairing matches a brute-force oracle on random edges")
def test_03_pairEdgesOracle():
    """Pairing matches a brute-force oracle on random edges"""
    rng = np.random.default_rng(17)
    for _ in range(200):
        counts = rng.integers(1, 65, size=2)
        lower = [ZipEdge(2 * k, 2 * k + 1, np.append(rng.random(2) * 10, 0.0), np.append(rng.random(2) * 10, 0.0), (0, 0, k)) for k in range(counts[0])]
        upper = [ZipEdge(1000 + 2 * k, 1001 + 2 * k, np.append(rng.random(2) * 10, 1.0), np.append(rng.random(2) * 10, 1.0), (1, 0, k)) for k in range(counts[1])]
        distances = np.linalg.norm(np.array([_.center for _ in lower])[:, None, :] - np.array([_.center for _ in upper])[None, :, :], axis=2)

        def nearest(row):
            order = np.argsort(row)
            return int(order[0]), len(row) == 1 or row[order[1]] > row[order[0]]

        expectedPairs, expectedNon, expectedSkipped = set(), set(), set()
        for a in range(len(lower)):
            b, unique = nearest(distances[a])
            back, uniqueBack = nearest(distances[:, b])
            if unique and uniqueBack and back == a and distances[a, b] <= 3.0:
                expectedPairs.add((lower[a].source, upper[b].source))
        pairedSources = {_ for pair in expectedPairs for _ in pair}
        for edges, matrix, others in ((lower, distances, upper), (upper, distances.T, lower)):
            for index, edge in enumerate(edges):
                if edge.source in pairedSources:
                    continue
                b, _ = nearest(matrix[index])
                if matrix[index, b] <= 3.0:
                    expectedNon.add((edge.source, others[b].source))
                else:
                    expectedSkipped.add(edge.source)

        pairing = pairEdges(lower, upper, 3.0)
        assert {(a.source, b.source) for a, b in pairing.validPairs} == expectedPairs
        assert {(a.source, b.source) for a, b in pairing.nonPairs} == expectedNon
        assert {_.source for _ in pairing.skipped} == expectedSkipped
        assert len(pairing.validPairs) * 2 + len(pairing.nonPairs) + len(pairing.skipped) == len(lower) + len(upper)


@test("Edges out of reach are skipped and tied edges never pair")
def test_04_pairEdgesSkipAndTie():
    """Edges out of reach are skipped and tied edges never pair"""
    lower = chain([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], 0, 0)
    far = chain([[10.0, 0.0, 1.0], [11.0, 0.0, 1.0]], 2, 1)
    pairing = pairEdges(lower, far, THRESHOLD)
    assert pairing.validPairs == [] and pairing.nonPairs == [] and len(pairing.skipped) == 2

    assert len(pairEdges([], far, THRESHOLD).skipped) == 1

    tied = [
        ZipEdge(2, 3, np.array([0.0, 1.0, 1.0]), np.array([1.0, 1.0, 1.0]), (1, 0, 0)),
        ZipEdge(4, 5, np.array([0.0, -1.0, 1.0]), np.array([1.0, -1.0, 1.0]), (1, 1, 0)),
    ]
    pairing = pairEdges(lower, tied, THRESHOLD)
    assert pairing.validPairs == []
    assert len(pairing.nonPairs) == 3 and pairing.skipped == []


@test("Quads are split along the diagonal keeping the larger minimum angle")
def test_05_triangulatePair():
    """Quads are split along the diagonal keeping the larger minimum angle"""
    p1, p2, p3, p4 = (np.array(_, dtype=float) for _ in ([0, 0, 0], [4, 0, 0], [2, 0, 1], [5, 0, 1]))
    lower = ZipEdge(0, 1, p1, p2, (0, 0, 0))
    triangles = triangulatePair(lower, ZipEdge(2, 3, p3, p4, (1, 0, 0)))

    minA = triangleAngles(np.array([[p1, p2, p3], [p2, p4, p3]])).min()
    minB = triangleAngles(np.array([[p1, p2, p4], [p1, p4, p3]])).min()
    assert triangles == ([(0, 1, 3), (0, 3, 2)] if minB > minA else [(0, 1, 2), (1, 3, 2)])
    assert len(set(directedEdges(triangles))) == 6

    # A reversed upper edge is swapped back.
    assert triangulatePair(lower, ZipEdge(3, 2, p4, p3, (1, 0, 0))) == triangles

    # Symmetric trapezoids tie and keep the first split.
    symmetric = triangulatePair(lower, ZipEdge(2, 3, np.array([1.0, 0.0, 1.0]), np.array([3.0, 0.0, 1.0]), (1, 0, 0)))
    assert symmetric == [(0, 1, 2), (1, 3, 2)]


@test("Degenerate halves of a quad are dropped")
def test_06_triangulatePairCollinear():
    """Degenerate halves of a quad are dropped"""
    lower = ZipEdge(0, 1, np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), (0, 0, 0))
    upper = ZipEdge(2, 3, np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 1.0]), (1, 0, 0))
    assert triangulatePair(lower, upper) == [(1, 3, 2)]


@test("Non-pair edges get one triangle towards the nearest endpoint")
def test_07_triangulateNonpair():
    """Non-pair edges get one triangle towards the nearest endpoint"""
    lower = ZipEdge(0, 1, np.array([0.0, 0.0, 0.0]), np.array([2.0, 0.0, 0.0]), (0, 0, 0))
    upper = ZipEdge(2, 3, np.array([0.0, 1.0, 1.0]), np.array([0.5, 1.0, 1.0]), (1, 0, 0))
    assert triangulateNonpair(lower, upper) == [(0, 1, 3)]
    assert triangulateNonpair(upper, lower) == [(0, 3, 2)]

    reversedUpper = ZipEdge(3, 2, np.array([0.5, 1.0, 1.0]), np.array([0.0, 1.0, 1.0]), (1, 0, 0))
    assert triangulateNonpair(reversedUpper, lower) == [(0, 3, 2)]

    collinear = ZipEdge(4, 5, np.array([3.0, 0.0, 0.0]), np.array([4.0, 0.0, 0.0]), (1, 0, 0))
    assert triangulateNonpair(lower, collinear) == []


def circleStack(n, phase):
    stack = PolylineStack()
    stack.add(MidPolyline(0, circle(n, 8.0, 0)[:, :2], True, 0, math.sqrt(2.0)))
    stack.add(MidPolyline(1, circle(n, 8.0, 1, phase=phase)[:, :2], True, 0, math.sqrt(2.0)))
    return stack


@test("Two circles zip into a closed manifold strip")
def test_08_zipStackStrip():
    """Two circles zip into a closed manifold strip"""
    n = 32
    for phase in (0.0, math.pi / n):
        mesh = zipStack(circleStack(n, phase))
        mesh.validate()
        assert mesh.vertexCount == 2 * n
        assert mesh.triangleCount == 2 * n
        assert mesh.isManifold()
        loops = mesh.boundaryLoops()
        assert sorted(len(_) for _ in loops) == [n, n]
        assert len(set(directedEdges(mesh.triangles.tolist()))) == 3 * mesh.triangleCount
        assert np.allclose(mesh.vertices[:n, 2], 0.0) and np.allclose(mesh.vertices[n:, 2], 1.0)


@test("Edges facing a gap of the next slice leave a hole")
def test_09_zipStackHole():
    """Edges facing a gap of the next slice leave a hole"""
    n = 32
    stack = PolylineStack()
    stack.add(MidPolyline(0, circle(n, 8.0, 0)[:, :2], True, 0, math.sqrt(2.0)))
    stack.add(MidPolyline(1, circle(n, 8.0, 1)[: n // 2, :2], False, 0, math.sqrt(2.0)))
    mesh = zipStack(stack)
    mesh.validate()
    assert mesh.isManifold()
    assert 0 < mesh.triangleCount < 2 * n
    assert len(mesh.boundaryLoops()) == 1
    used = np.unique(mesh.triangles)
    assert not np.isin(np.arange(n // 2 + 3, n - 2), used).any()
    assert len(set(directedEdges(mesh.triangles.tolist()))) == 3 * mesh.triangleCount

    # Two open arcs zip into a strip with a single boundary.
    stack = PolylineStack()
    stack.add(MidPolyline(0, circle(n, 8.0, 0)[: n // 2, :2], False, 0, math.sqrt(2.0)))
    stack.add(MidPolyline(1, circle(n, 8.0, 1)[: n // 2, :2], False, 0, math.sqrt(2.0)))
    mesh = zipStack(stack)
    mesh.validate()
    assert mesh.isManifold() and len(mesh.boundaryLoops()) == 1
    assert mesh.triangleCount == 2 * (n // 2 - 1)
    assert len(set(directedEdges(mesh.triangles.tolist()))) == 3 * mesh.triangleCount


@test("Empty stacks are rejected and single slices give no triangle")
def test_10_zipStackDegenerate():
    """Empty stacks are rejected and single slices give no triangle"""
    with raises(ValueError):
        zipStack(PolylineStack())

    context = addContext("single")
    stack = PolylineStack()
    stack.add(MidPolyline(3, circle(8, 4.0, 0)[:, :2], True, 0, math.sqrt(2.0)))
    mesh = zipStack(stack)
    assert mesh.triangleCount == 0 and mesh.vertexCount == 8
    assert mesh.flags == ["single-slice"]
    assert len(getCurrentContext().warnings) == 1
    assert popContext() is context

    # Slices with a gap between them are not zipped together.
    stack = PolylineStack()
    stack.add(MidPolyline(0, circle(8, 4.0, 0)[:, :2], True, 0, math.sqrt(2.0)))
    stack.add(MidPolyline(2, circle(8, 4.0, 0)[:, :2], True, 0, math.sqrt(2.0)))
    assert zipStack(stack).triangleCount == 0
