#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Ridge field: distance transform, self-parameterized Gaussian smoothing and per-slice Hessian analysis."""

import math

import numpy as np

from scipy import ndimage
from typeguard import typechecked

from midmesh.context import debug
from midmesh.volume import BinaryMask3D

TYP_POINT = tuple[float, float]
TYP_TRIPLE = tuple[float, float, float]


class OutOfFieldError(ValueError):
    """Raised when a continuous point falls outside the sampled grid."""


@typechecked()
class ScalarField3D():
    """Real-valued voxel grid (SDF or smoothed ridge field)."""
    _values = None
    _spacing = None
    _origin = None

    def __init__(self, values: np.ndarray, spacing: TYP_TRIPLE = (1.0, 1.0, 1.0), origin: TYP_TRIPLE = (0.0, 0.0, 0.0)):
        if values.ndim != 3:
            raise ValueError(f"3D field expects a 3D array, got {values.ndim}D")
        if not np.all(np.isfinite(values)):
            raise ValueError("3D field values must be finite")
        self._values = values.astype(float, copy=False)
        self._spacing = tuple(float(_) for _ in spacing)
        self._origin = tuple(float(_) for _ in origin)

    def __repr__(self):
        return super().__repr__() + f"(dims={self.dims}, max={self.max():.4f})"

    @property
    def values(self) -> np.ndarray:
        """Returns the field values of shape (nx, ny, nz)."""
        return self._values

    @property
    def dims(self) -> tuple[int, int, int]:
        """Returns voxel counts (nx, ny, nz)."""
        return tuple(int(_) for _ in self._values.shape)

    @property
    def spacing(self) -> TYP_TRIPLE:
        """Returns physical size of a voxel along each axis."""
        return self._spacing

    @property
    def origin(self) -> TYP_TRIPLE:
        """Returns physical coordinate of voxel (0, 0, 0)."""
        return self._origin

    def max(self) -> float:
        """Returns the maximum field value."""
        return float(self._values.max())


@typechecked()
class ScalarField2D():
    """One z plane of a 3D field. Pixel (i, j) sits at origin + (i*sx, j*sy)."""
    _values = None
    _spacing = None
    _origin = None
    _sliceIndex = None
    _coefficients = None

    def __init__(self, values: np.ndarray, spacing: TYP_POINT = (1.0, 1.0), origin: TYP_POINT = (0.0, 0.0), sliceIndex: int = 0):
        if values.ndim != 2:
            raise ValueError(f"2D field expects a 2D array, got {values.ndim}D")
        self._values = values.astype(float, copy=False)
        self._spacing = tuple(float(_) for _ in spacing)
        self._origin = tuple(float(_) for _ in origin)
        self._sliceIndex = sliceIndex
        self._coefficients = None

    def __repr__(self):
        return super().__repr__() + f"(z={self._sliceIndex}, dims={self.dims})"

    @property
    def values(self) -> np.ndarray:
        """Returns the field values of shape (nx, ny)."""
        return self._values

    @property
    def dims(self) -> tuple[int, int]:
        """Returns pixel counts (nx, ny)."""
        return tuple(int(_) for _ in self._values.shape)

    @property
    def spacing(self) -> TYP_POINT:
        """Returns physical size of a pixel along x and y."""
        return self._spacing

    @property
    def origin(self) -> TYP_POINT:
        """Returns physical coordinate of pixel (0, 0)."""
        return self._origin

    @property
    def sliceIndex(self) -> int:
        """Returns the z index the plane was taken from."""
        return self._sliceIndex

    def toGrid(self, p: TYP_POINT) -> TYP_POINT:
        """Returns the continuous pixel coordinates of a physical point."""
        return ((p[0] - self._origin[0]) / self._spacing[0], (p[1] - self._origin[1]) / self._spacing[1])

    def toPhysical(self, i: float, j: float) -> TYP_POINT:
        """Returns the physical position of continuous pixel coordinates."""
        return (self._origin[0] + i * self._spacing[0], self._origin[1] + j * self._spacing[1])

    def contains(self, p: TYP_POINT) -> bool:
        """Returns True if p lies inside the hull of pixel centers."""
        u, v = self.toGrid(p)
        nx, ny = self.dims
        return 0.0 <= u <= nx - 1 and 0.0 <= v <= ny - 1

    def bounds(self) -> tuple[TYP_POINT, TYP_POINT]:
        """Returns the physical (low, high) corners of the hull of pixel centers."""
        nx, ny = self.dims
        return (self._origin, self.toPhysical(nx - 1, ny - 1))

    @property
    def coefficients(self) -> np.ndarray:
        """Returns the cubic spline coefficients of the field, computed on first use."""
        if self._coefficients is None:
            self._coefficients = ndimage.spline_filter(self._values, order=3, mode="mirror")
        return self._coefficients

    def splineSample(self, p: TYP_POINT) -> float:
        """Returns the cubic spline interpolation of the field at p."""
        if not self.contains(p):
            raise OutOfFieldError(f"Point {p} outside slice {self._sliceIndex}")
        u, v = self.toGrid(p)
        return splineAt(self.coefficients, u, v)


def splineAt(coefficients, u, v):
    """Cubic spline value at continuous pixel coordinates (u, v), unchecked."""
    return float(ndimage.map_coordinates(coefficients, [[u], [v]], order=3, prefilter=False, mode="mirror")[0])


@typechecked()
class HessianField2D():
    """Per-pixel second derivatives (fxx, fxy, fyy) of a 2D field."""
    _fxx = None
    _fxy = None
    _fyy = None
    _spacing = None
    _origin = None
    _sliceIndex = None

    def __init__(self, fxx: np.ndarray, fxy: np.ndarray, fyy: np.ndarray, spacing: TYP_POINT = (1.0, 1.0), origin: TYP_POINT = (0.0, 0.0), sliceIndex: int = 0):
        if not fxx.shape == fxy.shape == fyy.shape:
            raise ValueError(f"Hessian entries must share shape, got {fxx.shape}, {fxy.shape}, {fyy.shape}")
        self._fxx = fxx
        self._fxy = fxy
        self._fyy = fyy
        self._spacing = tuple(float(_) for _ in spacing)
        self._origin = tuple(float(_) for _ in origin)
        self._sliceIndex = sliceIndex

    @property
    def fxx(self) -> np.ndarray:
        return self._fxx

    @property
    def fxy(self) -> np.ndarray:
        return self._fxy

    @property
    def fyy(self) -> np.ndarray:
        return self._fyy

    @property
    def dims(self) -> tuple[int, int]:
        return tuple(int(_) for _ in self._fxx.shape)

    @property
    def spacing(self) -> TYP_POINT:
        return self._spacing

    @property
    def origin(self) -> TYP_POINT:
        return self._origin

    @property
    def sliceIndex(self) -> int:
        return self._sliceIndex


@typechecked()
class EigenPair2D():
    """Eigen decomposition of a symmetric 2x2 matrix, split by eigenvalue magnitude."""
    _lambdaMinAbs = None
    _lambdaMaxAbs = None
    _vTrace = None
    _vCorrect = None

    def __init__(self, lambdaMinAbs: float, lambdaMaxAbs: float, vTrace: TYP_POINT, vCorrect: TYP_POINT):
        self._lambdaMinAbs = lambdaMinAbs
        self._lambdaMaxAbs = lambdaMaxAbs
        self._vTrace = vTrace
        self._vCorrect = vCorrect

    def __repr__(self):
        return super().__repr__() + f"(l={self._lambdaMinAbs:.4f}/{self._lambdaMaxAbs:.4f}, trace={self._vTrace})"

    @property
    def lambdaMinAbs(self) -> float:
        """Returns the eigenvalue of smallest magnitude."""
        return self._lambdaMinAbs

    @property
    def lambdaMaxAbs(self) -> float:
        """Returns the eigenvalue of largest magnitude."""
        return self._lambdaMaxAbs

    @property
    def vTrace(self) -> TYP_POINT:
        """Returns the unit eigenvector of lambdaMinAbs (along the crest)."""
        return self._vTrace

    @property
    def vCorrect(self) -> TYP_POINT:
        """Returns the unit eigenvector of lambdaMaxAbs (across the crest)."""
        return self._vCorrect


@typechecked()
def computeSdf(mask: BinaryMask3D) -> ScalarField3D:
    """Returns, for each foreground voxel, the physical distance from its center to
    the nearest background voxel center. Background voxels are 0."""
    if mask.count == 0:
        raise ValueError("Cannot compute the distance field of an empty mask")
    if mask.count == mask.bits.size:
        raise ValueError("Cannot compute the distance field of a mask without background voxels")

    values = ndimage.distance_transform_edt(mask.bits, sampling=mask.spacing)
    return ScalarField3D(np.asarray(values, dtype=float), spacing=mask.spacing, origin=mask.origin)


@typechecked()
def gaussianKernel(sigma: float, spacing: float) -> np.ndarray:
    """Returns the unit-sum 1D Gaussian kernel truncated at ceil((2*sigma+1)/spacing) voxels."""
    if not sigma > 0:
        raise ValueError(f"Gaussian sigma must be > 0, got {sigma}")
    radius = math.ceil((2.0 * sigma + 1.0) / spacing)
    offsets = np.arange(-radius, radius + 1) * spacing
    kernel = np.exp(-offsets**2 / (2.0 * sigma**2))
    return kernel / kernel.sum()


@typechecked()
def gaussianSmooth(field: ScalarField3D, sigma: float) -> ScalarField3D:
    """Separable truncated Gaussian convolution with zero extension at the borders."""
    values = field.values
    for axis, spacing in enumerate(field.spacing):
        values = ndimage.correlate1d(values, gaussianKernel(sigma, spacing), axis=axis, mode="constant", cval=0.0)
    return ScalarField3D(values, spacing=field.spacing, origin=field.origin)


@typechecked()
def ridgeSigma(sdf: ScalarField3D) -> float:
    """Returns the smoothing standard deviation, half the field maximum."""
    return sdf.max() / 2.0


@typechecked()
def smoothSdf(sdf: ScalarField3D) -> ScalarField3D:
    """Returns the ridge height field: the SDF blurred with sigma = max(sdf) / 2."""
    sigma = ridgeSigma(sdf)
    if not sigma > 0:
        raise ValueError("Cannot smooth a distance field without positive values")
    debug(f"ridge field: sigma={sigma:.4f}")
    return gaussianSmooth(sdf, sigma)


@typechecked()
def extractSlice(field: ScalarField3D, z: int) -> ScalarField2D:
    """Returns a copy of plane z."""
    nz = field.dims[2]
    if not 0 <= z < nz:
        raise ValueError(f"Slice index {z} out of range [0, {nz})")
    return ScalarField2D(
        field.values[:, :, z].copy(),
        spacing=field.spacing[:2],
        origin=field.origin[:2],
        sliceIndex=z,
    )


@typechecked()
def computeHessian(field: ScalarField2D) -> HessianField2D:
    """Central-difference Hessian, replicated-edge stencils on the border."""
    nx, ny = field.dims
    if nx < 3 or ny < 3:
        raise ValueError(f"Hessian needs a slice of at least 3x3 pixels, got {nx}x{ny}")

    sx, sy = field.spacing
    f = np.pad(field.values, 1, mode="edge")
    center = f[1:-1, 1:-1]
    fxx = (f[2:, 1:-1] - 2.0 * center + f[:-2, 1:-1]) / sx**2
    fyy = (f[1:-1, 2:] - 2.0 * center + f[1:-1, :-2]) / sy**2
    fxy = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4.0 * sx * sy)
    return HessianField2D(fxx, fxy, fyy, spacing=field.spacing, origin=field.origin, sliceIndex=field.sliceIndex)


def _signed(vector):
    """Flips a vector so that its first nonzero coordinate is >= 0."""
    x, y = vector
    if x < 0 or (x == 0 and y < 0):
        return (-x + 0.0, -y + 0.0)
    return (x + 0.0, y + 0.0)


@typechecked()
def eigen2x2(fxx: float, fxy: float, fyy: float) -> EigenPair2D:
    """Diagonalizes [[fxx, fxy], [fxy, fyy]] with a single Jacobi rotation.

    vTrace belongs to the eigenvalue of smallest magnitude. Equal magnitudes
    pick the eigenvector closer to the x axis."""
    a, b, c = float(fxx), float(fxy), float(fyy)
    if not all(math.isfinite(_) for _ in (a, b, c)):
        raise ValueError(f"Hessian entries must be finite, got ({a}, {b}, {c})")

    if b == 0.0:
        pairs = [(a, (1.0, 0.0)), (c, (0.0, 1.0))]
    else:
        tau = (c - a) / (2.0 * b)
        t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
        cs = 1.0 / math.hypot(1.0, t)
        sn = t * cs
        pairs = [(a - t * b, (cs, -sn)), (c + t * b, (sn, cs))]

    (l0, v0), (l1, v1) = pairs
    if abs(l0) < abs(l1) or (abs(l0) == abs(l1) and abs(v0[0]) >= abs(v1[0])):
        small, large = (l0, v0), (l1, v1)
    else:
        small, large = (l1, v1), (l0, v0)
    return EigenPair2D(small[0], large[0], _signed(small[1]), _signed(large[1]))


def _bilinearWeights(origin, spacing, dims, p):
    """Returns (i0, j0, fu, fv) of the bilinear cell holding p."""
    nx, ny = dims
    if nx < 2 or ny < 2:
        raise OutOfFieldError(f"Cannot interpolate a {nx}x{ny} grid")
    u = (p[0] - origin[0]) / spacing[0]
    v = (p[1] - origin[1]) / spacing[1]
    if not (0.0 <= u <= nx - 1 and 0.0 <= v <= ny - 1):
        raise OutOfFieldError(f"Point {p} outside the sampled grid")
    i0 = min(int(math.floor(u)), nx - 2)
    j0 = min(int(math.floor(v)), ny - 2)
    return i0, j0, u - i0, v - j0


def _bilinear(values, i0, j0, fu, fv):
    return float((1.0 - fu) * (1.0 - fv) * values[i0, j0] + fu * (1.0 - fv) * values[i0 + 1, j0] +
                 (1.0 - fu) * fv * values[i0, j0 + 1] + fu * fv * values[i0 + 1, j0 + 1])


@typechecked()
def sampleField(field: ScalarField2D, p: TYP_POINT) -> float:
    """Bilinear interpolation of the field at physical point p."""
    i0, j0, fu, fv = _bilinearWeights(field.origin, field.spacing, field.dims, p)
    return _bilinear(field.values, i0, j0, fu, fv)


@typechecked()
def sampleHessian(hessian: HessianField2D, p: TYP_POINT) -> TYP_TRIPLE:
    """Bilinear interpolation of each Hessian entry at physical point p."""
    i0, j0, fu, fv = _bilinearWeights(hessian.origin, hessian.spacing, hessian.dims, p)
    return tuple(_bilinear(_, i0, j0, fu, fv) for _ in (hessian.fxx, hessian.fxy, hessian.fyy))
