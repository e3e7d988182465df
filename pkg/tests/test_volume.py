#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests related to volumes, components and phantoms."""

import itertools

from collections import deque

import numpy as np

from ward import test, raises

from midmesh import LabeledVolume, BinaryMask3D, SliceComponent, PhantomSpec
from midmesh import extractObjects, sliceComponents, dilate, generatePhantom


def floodFill(bits, offsets):
    """Brute-force component labeling, components numbered in linear (x fastest) scan order."""
    labels = np.zeros(bits.shape, dtype=int)
    count = 0
    for index in np.ndindex(*bits.shape[::-1]):
        start = index[::-1]
        if not bits[start] or labels[start]:
            continue
        count += 1
        labels[start] = count
        queue = deque([start])
        while queue:
            current = queue.popleft()
            for offset in offsets:
                neighbour = tuple(c + o for c, o in zip(current, offset))
                if all(0 <= n < s for n, s in zip(neighbour, bits.shape)) and bits[neighbour] and not labels[neighbour]:
                    labels[neighbour] = count
                    queue.append(neighbour)
    return labels, count


OFFSETS_26 = [_ for _ in itertools.product((-1, 0, 1), repeat=3) if _ != (0, 0, 0)]
OFFSETS_8 = [_ for _ in itertools.product((-1, 0, 1), repeat=2) if _ != (0, 0)]


def mask3D(bits):
    return BinaryMask3D(np.asarray(bits, dtype=bool))


@test("Objects are the 26-connected components of a label")
def test_01_extractObjects():
    """Objects are the 26-connected components of a label"""
    data = np.zeros((12, 12, 12), dtype=np.uint8)
    data[1:4, 1:4, 1:4] = 1
    data[7:10, 7:10, 7:10] = 1
    data[5, 5, 5] = 2
    objects = extractObjects(LabeledVolume(data), 1)
    assert len(objects) == 2
    assert objects[0].bits[1, 1, 1] and objects[1].bits[7, 7, 7]
    assert not np.any(objects[0].bits & objects[1].bits)
    assert np.array_equal(objects[0].bits | objects[1].bits, data == 1)

    # Diagonal contact is enough.
    data = np.zeros((6, 6, 6), dtype=np.uint8)
    data[1, 1, 1] = data[2, 2, 2] = 1
    assert len(extractObjects(LabeledVolume(data), 1)) == 1


@test("Absent labels give no object, non positive labels are rejected")
def test_02_extractObjectsEmpty():
    """Absent labels give no object, non positive labels are rejected"""
    volume = LabeledVolume(np.zeros((4, 4, 4), dtype=np.uint8))
    assert extractObjects(volume, 3) == []
    with raises(ValueError):
        extractObjects(volume, 0)


@test("Objects of a random volume match a flood fill oracle")
def test_03_extractObjectsOracle():
    """Objects of a random volume match a flood fill oracle"""
    rng = np.random.default_rng(7)
    data = (rng.random((16, 16, 16)) < 0.12).astype(np.uint8)
    objects = extractObjects(LabeledVolume(data, spacing=(1.0, 2.0, 0.5)), 1)
    labels, count = floodFill(data.astype(bool), OFFSETS_26)
    assert len(objects) == count
    for k, mask in enumerate(objects, 1):
        assert np.array_equal(mask.bits, labels == k)
        assert mask.spacing == (1.0, 2.0, 0.5)


@test("Slice components are 8-connected, identified and ordered")
def test_04_sliceComponents():
    """Slice components are 8-connected, identified and ordered"""
    bits = np.zeros((20, 20, 3), dtype=bool)
    xs, ys = np.meshgrid(np.arange(20), np.arange(20), indexing="ij")
    radius = np.hypot(xs - 9.5, ys - 9.5)
    bits[:, :, 0] = (radius >= 5) & (radius <= 8)
    bits[2:4, 2:4, 1] = True
    bits[10:12, 3:5, 1] = True
    bits[5:7, 14:17, 1] = True

    ring = sliceComponents(mask3D(bits), 0)
    assert len(ring) == 1
    assert ring[0].pixelCount == int(bits[:, :, 0].sum())

    blobs = sliceComponents(mask3D(bits), 1)
    assert len(blobs) == 3
    assert sorted(_.componentId for _ in blobs) == [0, 1, 2]
    assert [tuple(_.coordinates()[0]) for _ in blobs] == [(2, 2), (10, 3), (5, 14)]

    assert sliceComponents(mask3D(bits), 2) == []
    with raises(ValueError):
        sliceComponents(mask3D(bits), 3)


@test("Slice components of a random slice match a flood fill oracle")
def test_05_sliceComponentsOracle():
    """Slice components of a random slice match a flood fill oracle"""
    rng = np.random.default_rng(11)
    plane = rng.random((32, 32)) < 0.3
    components = sliceComponents(mask3D(plane[:, :, None]), 0)
    labels, count = floodFill(plane, OFFSETS_8)
    assert len(components) == count
    for k, component in enumerate(components, 1):
        assert np.array_equal(component.pixels, labels == k)
        assert np.all(component.dilatedPixels[component.pixels])


@test("Dilation grows components by one pixel, clipped to the slice")
def test_06_dilate():
    """Dilation grows components by one pixel, clipped to the slice"""
    pixels = np.zeros((12, 12), dtype=bool)
    pixels[5, 5] = True
    dilated = dilate(SliceComponent(0, pixels, 0))
    assert int(dilated.dilatedPixels.sum()) == 9
    assert np.array_equal(np.argwhere(dilated.dilatedPixels), [[x, y] for x in (4, 5, 6) for y in (4, 5, 6)])

    pixels = np.zeros((12, 12), dtype=bool)
    pixels[0, 0] = True
    assert int(dilate(SliceComponent(0, pixels, 0)).dilatedPixels.sum()) == 4

    with raises(ValueError):
        dilate(SliceComponent(0, np.zeros((4, 4), dtype=bool), 0))


@test("Dilation of a diagonal line matches the union of 3x3 blocks")
def test_07_dilateOracle():
    """Dilation of a diagonal line matches the union of 3x3 blocks"""
    pixels = np.zeros((16, 16), dtype=bool)
    for k in range(10):
        pixels[2 + k, 3 + k] = True
    union = set()
    for x, y in np.argwhere(pixels):
        union |= {(x + dx, y + dy) for dx, dy in itertools.product((-1, 0, 1), repeat=2) if 0 <= x + dx < 16 and 0 <= y + dy < 16}
    dilated = dilate(SliceComponent(0, pixels, 0)).dilatedPixels
    assert int(dilated.sum()) == len(union)
    assert {tuple(_) for _ in np.argwhere(dilated)} == union


@test("Phantom slabs and shells follow their analytic definition")
def test_08_generatePhantom():
    """Phantom slabs and shells follow their analytic definition"""
    slab = generatePhantom(PhantomSpec("slab", (16, 16, 16), thickness=5))
    assert int(slab.data.sum()) == 5 * 16 * 16
    assert slab.labels() == [1]

    cylinder = generatePhantom(PhantomSpec("cylinder_shell", (64, 64, 64), rInner=10, rOuter=14))
    centers = np.argwhere(cylinder.data == 1).astype(float)
    distances = np.hypot(centers[:, 0] - 31.5, centers[:, 1] - 31.5)
    assert distances.min() >= 10.0 and distances.max() <= 14.0
    assert centers[:, 2].min() == 2 and centers[:, 2].max() == 61

    sphere = generatePhantom(PhantomSpec("sphere_shell", (40, 40, 40), rInner=10, rOuter=14))
    expected = 0
    for i, j, k in np.ndindex(40, 40, 40):
        expected += 10.0 <= np.sqrt((i - 19.5)**2 + (j - 19.5)**2 + (k - 19.5)**2) <= 14.0
    assert int(sphere.data.sum()) == expected


@test("Phantom holes remove exactly the windowed voxels")
def test_09_phantomHoles():
    """Phantom holes remove exactly the windowed voxels"""
    window = ((40, 50), (27, 37), (27, 37))
    intact = generatePhantom(PhantomSpec("cylinder_shell", (64, 64, 64), rInner=10, rOuter=14))
    holed = generatePhantom(PhantomSpec("cylinder_shell", (64, 64, 64), rInner=10, rOuter=14, holes=[window]))
    assert holed.data.sum() < intact.data.sum()
    changed = np.argwhere(holed.data != intact.data)
    assert np.all((changed >= [40, 27, 27]) & (changed < [50, 37, 37]))
    assert not np.any(holed.data[40:50, 27:37, 27:37])


@test("Malformed phantoms are rejected")
def test_10_phantomValidation():
    """Malformed phantoms are rejected"""
    for spec in (
        PhantomSpec("cylinder_shell", (64, 64, 64), rInner=14, rOuter=10),
        PhantomSpec("cylinder_shell", (32, 32, 32), rInner=10, rOuter=15),
        PhantomSpec("sphere_shell", (64, 64, 20), rInner=10, rOuter=14),
        PhantomSpec("torus_shell", (64, 64, 64), rInner=2, rOuter=5, rMajor=4),
        PhantomSpec("slab", (16, 16, 16), thickness=0),
        PhantomSpec("cube", (16, 16, 16)),
        PhantomSpec("cylinder_shell", (64, 64, 64), rInner=10, rOuter=14, holes=[((0, 70), (0, 4), (0, 4))]),
        PhantomSpec("cylinder_shell", (64, 64, 64), rInner=10, rOuter=14, holes=[((5, 5), (0, 4), (0, 4))]),
    ):
        with raises(ValueError):
            generatePhantom(spec)


@test("Phantoms expose the distance to their analytic mid-surface")
def test_11_midSurfaceDistance():
    """Phantoms expose the distance to their analytic mid-surface"""
    cylinder = PhantomSpec("cylinder_shell", (64, 64, 64), rInner=10, rOuter=14)
    points = np.array([[31.5 + 12.0, 31.5, 10.0], [31.5, 31.5 - 13.0, 30.0]])
    assert np.allclose(cylinder.midSurfaceDistance(points), [0.0, 1.0])

    torus = PhantomSpec("torus_shell", (64, 64, 64), rInner=3, rOuter=7, rMajor=18)
    assert np.allclose(torus.midSurfaceDistance(np.array([[31.5 + 18.0, 31.5, 31.5 + 5.0]])), [0.0])

    slab = PhantomSpec("slab", (16, 16, 16), thickness=5)
    assert np.allclose(slab.midSurfaceDistance(np.array([[3.0, 4.0, 7.0], [0.0, 0.0, 9.0]])), [0.0, 2.0])
