#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Volume data model, connected components, dilation and analytic phantoms."""

import math

import numpy as np

from scipy import ndimage
from typeguard import typechecked

# 26-connectivity for objects, 8-connectivity for in-slice components.
OBJECT_STRUCTURE = np.ones((3, 3, 3), dtype=bool)
SLICE_STRUCTURE = np.ones((3, 3), dtype=bool)

PHANTOM_SHAPES = ("cylinder_shell", "sphere_shell", "torus_shell", "slab")
PHANTOM_MARGIN = 2
AXES = {"x": 0, "y": 1, "z": 2}

TYP_TRIPLE = tuple[float, float, float]
TYP_DIMS = tuple[int, int, int]
TYP_WINDOW = tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


def _checkGeometry(shape, spacing, origin):
    if len(shape) != 3 or any(n < 1 for n in shape):
        raise ValueError(f"Volume dims must be three values >= 1, got {tuple(shape)}")
    if any(not s > 0 for s in spacing):
        raise ValueError(f"Volume spacing must be > 0 on every axis, got {spacing}")
    if not all(math.isfinite(o) for o in origin):
        raise ValueError(f"Volume origin must be finite, got {origin}")


@typechecked()
class LabeledVolume():
    """3D grid of integer labels (0 is background) with physical spacing and origin.
    Voxel (i, j, k) has its center at origin + (i*sx, j*sy, k*sz)."""
    _data = None
    _spacing = None
    _origin = None

    def __init__(self, data: np.ndarray, spacing: TYP_TRIPLE = (1.0, 1.0, 1.0), origin: TYP_TRIPLE = (0.0, 0.0, 0.0)):
        _checkGeometry(data.shape, spacing, origin)
        if not np.issubdtype(data.dtype, np.integer):
            raise ValueError(f"Label data must be integer typed, got {data.dtype}")
        self._data = data
        self._spacing = tuple(float(_) for _ in spacing)
        self._origin = tuple(float(_) for _ in origin)

    def __repr__(self):
        return super().__repr__() + f"(dims={self.dims}, spacing={self._spacing})"

    @property
    def data(self) -> np.ndarray:
        """Returns the label array of shape (nx, ny, nz)."""
        return self._data

    @property
    def dims(self) -> TYP_DIMS:
        """Returns voxel counts (nx, ny, nz)."""
        return tuple(int(_) for _ in self._data.shape)

    @property
    def spacing(self) -> TYP_TRIPLE:
        """Returns physical size of a voxel along each axis."""
        return self._spacing

    @property
    def origin(self) -> TYP_TRIPLE:
        """Returns physical coordinate of voxel (0, 0, 0)."""
        return self._origin

    def labels(self) -> list[int]:
        """Returns the sorted foreground labels present in the volume."""
        return [int(_) for _ in np.unique(self._data) if _ != 0]


@typechecked()
class BinaryMask3D():
    """Foreground of one isolated object, same grid as its source volume."""
    _bits = None
    _spacing = None
    _origin = None

    def __init__(self, bits: np.ndarray, spacing: TYP_TRIPLE = (1.0, 1.0, 1.0), origin: TYP_TRIPLE = (0.0, 0.0, 0.0)):
        _checkGeometry(bits.shape, spacing, origin)
        self._bits = bits.astype(bool, copy=False)
        self._spacing = tuple(float(_) for _ in spacing)
        self._origin = tuple(float(_) for _ in origin)

    def __repr__(self):
        return super().__repr__() + f"(dims={self.dims}, voxels={self.count})"

    @property
    def bits(self) -> np.ndarray:
        """Returns the boolean array of shape (nx, ny, nz)."""
        return self._bits

    @property
    def dims(self) -> TYP_DIMS:
        """Returns voxel counts (nx, ny, nz)."""
        return tuple(int(_) for _ in self._bits.shape)

    @property
    def spacing(self) -> TYP_TRIPLE:
        """Returns physical size of a voxel along each axis."""
        return self._spacing

    @property
    def origin(self) -> TYP_TRIPLE:
        """Returns physical coordinate of voxel (0, 0, 0)."""
        return self._origin

    @property
    def count(self) -> int:
        """Returns the number of foreground voxels."""
        return int(np.count_nonzero(self._bits))


@typechecked()
class SliceComponent():
    """8-connected foreground component of one slice, with its one-pixel dilation."""
    _sliceIndex = None
    _pixels = None
    _dilatedPixels = None
    _componentId = None

    def __init__(self, sliceIndex: int, pixels: np.ndarray, componentId: int):
        if pixels.ndim != 2:
            raise ValueError(f"Slice component pixels must be a 2D raster, got {pixels.ndim}D")
        self._sliceIndex = sliceIndex
        self._pixels = pixels.astype(bool, copy=False)
        self._componentId = componentId
        self._dilatedPixels = ndimage.binary_dilation(self._pixels, structure=SLICE_STRUCTURE)

    def __repr__(self):
        return super().__repr__() + f"(z={self._sliceIndex}, id={self._componentId}, pixels={self.pixelCount})"

    @property
    def sliceIndex(self) -> int:
        """Returns the z index of the slice."""
        return self._sliceIndex

    @property
    def componentId(self) -> int:
        """Returns the id of the component, unique within its slice."""
        return self._componentId

    @property
    def pixels(self) -> np.ndarray:
        """Returns the component raster (nx, ny) of the slice."""
        return self._pixels

    @property
    def dilatedPixels(self) -> np.ndarray:
        """Returns the one-pixel (3x3) dilation of the component raster."""
        return self._dilatedPixels

    @property
    def pixelCount(self) -> int:
        """Returns the number of pixels of the component."""
        return int(np.count_nonzero(self._pixels))

    def coordinates(self) -> np.ndarray:
        """Returns (x, y) indices of the component pixels, ordered by (y, x)."""
        xs, ys = np.nonzero(self._pixels)
        order = np.lexsort((xs, ys))
        return np.stack((xs[order], ys[order]), axis=1)

    def containsPixel(self, x: int, y: int, dilated: bool = True) -> bool:
        """Returns True if pixel (x, y) belongs to the (dilated) component."""
        raster = self._dilatedPixels if dilated else self._pixels
        if not (0 <= x < raster.shape[0] and 0 <= y < raster.shape[1]):
            return False
        return bool(raster[x, y])


def _orderedLabels(labels, count, key):
    """Returns label ids sorted by the smallest key value of their members."""
    if count == 0:
        return []
    firsts = ndimage.minimum(key, labels=labels, index=np.arange(1, count + 1))
    return [int(_) + 1 for _ in np.argsort(np.asarray(firsts), kind="stable")]


@typechecked()
def extractObjects(volume: LabeledVolume, label: int) -> list[BinaryMask3D]:
    """Returns one mask per 26-connected component of voxels carrying `label`,
    ordered by their smallest linear voxel index (x fastest)."""
    if label <= 0:
        raise ValueError(f"Object label must be > 0, got {label}")

    selected = volume.data == label
    labels, count = ndimage.label(selected, structure=OBJECT_STRUCTURE)
    key = np.arange(selected.size).reshape(selected.shape, order="F")
    return [
        BinaryMask3D(labels == _,
                     spacing=volume.spacing,
                     origin=volume.origin) for _ in _orderedLabels(labels,
                                                                   count,
                                                                   key)
    ]


@typechecked()
def sliceComponents(mask: BinaryMask3D, z: int) -> list[SliceComponent]:
    """Returns the 8-connected components of slice z, ordered by smallest (y, x) pixel."""
    nz = mask.dims[2]
    if not 0 <= z < nz:
        raise ValueError(f"Slice index {z} out of range [0, {nz})")

    plane = mask.bits[:, :, z]
    labels, count = ndimage.label(plane, structure=SLICE_STRUCTURE)
    key = np.arange(plane.size).reshape(plane.shape, order="F")
    return [SliceComponent(z, labels == lab, componentId) for componentId, lab in enumerate(_orderedLabels(labels, count, key))]


@typechecked()
def dilate(component: SliceComponent) -> SliceComponent:
    """Returns the component with its dilated raster recomputed (3x3, clipped to the slice)."""
    if component.pixelCount == 0:
        raise ValueError("Cannot dilate an empty component")
    return SliceComponent(component.sliceIndex, component.pixels, component.componentId)


@typechecked()
class PhantomSpec():
    """Analytic thin-shell phantom, in voxel units (spacing 1, origin 0).

    Shells are centered in the volume. Cylinders and tori are built around
    `axis`; a cylinder stops PHANTOM_MARGIN voxels before both volume ends.
    Hole windows are half-open voxel ranges ((x0, x1), (y0, y1), (z0, z1))
    forced to background."""
    _shape = None
    _dims = None
    _rInner = None
    _rOuter = None
    _rMajor = None
    _thickness = None
    _axis = None
    _holes = None

    def __init__(
        self,
        shape: str,
        dims: TYP_DIMS,
        rInner: float = 0.0,
        rOuter: float = 0.0,
        rMajor: float = 0.0,
        thickness: int = 0,
        axis: str = "z",
        holes: list[TYP_WINDOW] | None = None,
    ):
        self._shape = shape
        self._dims = dims
        self._rInner = float(rInner)
        self._rOuter = float(rOuter)
        self._rMajor = float(rMajor)
        self._thickness = thickness
        self._axis = axis
        self._holes = [] if holes is None else list(holes)

    def __repr__(self):
        return super().__repr__() + f"(shape={self._shape}, dims={self._dims})"

    @property
    def shape(self) -> str:
        """Returns the phantom shape name."""
        return self._shape

    @property
    def dims(self) -> TYP_DIMS:
        """Returns the volume dims of the phantom."""
        return self._dims

    @property
    def holes(self) -> list[TYP_WINDOW]:
        """Returns the hole windows."""
        return self._holes

    @property
    def center(self) -> TYP_TRIPLE:
        """Returns the voxel-space center of the volume."""
        return tuple((n - 1) / 2.0 for n in self._dims)

    @property
    def midRadius(self) -> float:
        """Returns the radius of the analytic mid-surface of a shell."""
        return (self._rInner + self._rOuter) / 2.0

    def withoutHoles(self):
        """Returns the same phantom without hole windows."""
        return PhantomSpec(
            self._shape,
            self._dims,
            rInner=self._rInner,
            rOuter=self._rOuter,
            rMajor=self._rMajor,
            thickness=self._thickness,
            axis=self._axis,
            holes=None,
        )

    def validate(self) -> None:
        """Raises ValueError with a diagnostic if the phantom is not well-formed."""
        if self._shape not in PHANTOM_SHAPES:
            raise ValueError(f"Unknown phantom shape '{self._shape}', expected one of {', '.join(PHANTOM_SHAPES)}")
        if any(n < 1 for n in self._dims):
            raise ValueError(f"Phantom dims must be >= 1, got {self._dims}")
        if self._axis not in AXES:
            raise ValueError(f"Phantom axis must be one of x, y, z, got '{self._axis}'")

        axis = AXES[self._axis]
        center = self.center
        cross = [center[_] for _ in range(3) if _ != axis]
        if self._shape == "slab":
            if self._thickness < 1:
                raise ValueError(f"Slab thickness must be >= 1, got {self._thickness}")
            if self._dims[axis] - self._thickness < 2 * PHANTOM_MARGIN:
                raise ValueError(
                    f"Slab of thickness {self._thickness} does not fit {self._dims[axis]} voxels with a {PHANTOM_MARGIN}-voxel margin"
                )
        else:
            if not 0 <= self._rInner < self._rOuter:
                raise ValueError(
                    f"Phantom inner radius must be >= 0 and < outer radius, got r_in={self._rInner}, r_out={self._rOuter}"
                )
            if self._shape == "cylinder_shell":
                reach, axial = self._rOuter, self._dims[axis] - 2 * PHANTOM_MARGIN
                if axial < 1:
                    raise ValueError(f"Cylinder needs more than {2 * PHANTOM_MARGIN} voxels along its axis")
            elif self._shape == "sphere_shell":
                reach = self._rOuter
                cross = list(center)
            else:
                if not self._rMajor > self._rOuter:
                    raise ValueError(f"Torus major radius must exceed r_out, got r_major={self._rMajor}")
                reach = self._rMajor + self._rOuter
                if center[axis] - self._rOuter < PHANTOM_MARGIN:
                    raise ValueError(f"Torus tube (r_out={self._rOuter}) does not fit along axis {self._axis}")
            if min(cross) - reach < PHANTOM_MARGIN:
                raise ValueError(
                    f"Phantom shell of reach {reach} does not fit dims {self._dims} with a {PHANTOM_MARGIN}-voxel margin"
                )

        for window in self._holes:
            for (lo, hi), n in zip(window, self._dims):
                if not 0 <= lo < hi <= n:
                    raise ValueError(f"Hole window {window} is empty or outside dims {self._dims}")

    def _axisFrame(self, points):
        """Returns (axial offset, distance to the axis) of points relative to the volume center."""
        axis = AXES[self._axis]
        rel = points - np.asarray(self.center)
        axial = rel[..., axis]
        others = [_ for _ in range(3) if _ != axis]
        radial = np.hypot(rel[..., others[0]], rel[..., others[1]])
        return axial, radial

    def shellDistance(self, points: np.ndarray) -> np.ndarray:
        """Returns the quantity compared to [r_in, r_out] (or the slab offset) for voxel-space points."""
        axial, radial = self._axisFrame(points)
        if self._shape == "cylinder_shell":
            return radial
        if self._shape == "sphere_shell":
            return np.linalg.norm(points - np.asarray(self.center), axis=-1)
        if self._shape == "torus_shell":
            return np.hypot(radial - self._rMajor, axial)
        return axial

    def midSurfaceDistance(self, points: np.ndarray) -> np.ndarray:
        """Returns the distance of voxel-space points (N x 3) to the analytic mid-surface."""
        points = np.asarray(points, dtype=float)
        if self._shape == "slab":
            axis = AXES[self._axis]
            start = (self._dims[axis] - self._thickness) // 2
            mid = start + (self._thickness - 1) / 2.0
            return np.abs(points[..., axis] - mid)
        return np.abs(self.shellDistance(points) - self.midRadius)


@typechecked()
def generatePhantom(spec: PhantomSpec) -> LabeledVolume:
    """Voxelizes a phantom: a voxel is labeled 1 iff its center lies in the shell
    and outside every hole window."""
    spec.validate()
    grid = np.stack(np.meshgrid(*[np.arange(n, dtype=float) for n in spec.dims], indexing="ij"), axis=-1)
    axis = AXES[spec._axis]

    if spec.shape == "slab":
        start = (spec.dims[axis] - spec._thickness) // 2
        index = grid[..., axis]
        inside = (index >= start) & (index < start + spec._thickness)
    else:
        value = spec.shellDistance(grid)
        inside = (value >= spec._rInner) & (value <= spec._rOuter)
        if spec.shape == "cylinder_shell":
            index = grid[..., axis]
            inside &= (index >= PHANTOM_MARGIN) & (index <= spec.dims[axis] - 1 - PHANTOM_MARGIN)

    for (x0, x1), (y0, y1), (z0, z1) in spec.holes:
        inside[x0:x1, y0:y1, z0:z1] = False

    return LabeledVolume(inside.astype(np.uint8))
