#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Mid-polyline tracing on the slices of the ridge field.

Each slice component is traced from the peak of the ridge field along the
eigenvector of smallest curvature magnitude, one Euler step of length
h = sqrt(2) * sz at a time, every step being pulled back onto the crest by a
golden-section search across the ridge. A trace closes when it loops back to
its anchor. It exits when it leaves the one-pixel dilation of its component,
turns back on itself or lands on pixels it visited before, in which case the
other half is traced from the anchor in the opposite direction. Parts of
the component left uncovered are traced again as independent components.
Short traces of thick components are caps and are skipped.
"""

import math

from collections.abc import Callable

import numpy as np

from scipy import ndimage
from typeguard import typechecked

from midmesh.context import debug, warn
from midmesh.ridge import (
    HessianField2D,
    OutOfFieldError,
    ScalarField2D,
    ScalarField3D,
    computeHessian,
    eigen2x2,
    extractSlice,
    sampleHessian,
    splineAt,
)
from midmesh.volume import SLICE_STRUCTURE, BinaryMask3D, SliceComponent, sliceComponents

TYP_POINT = tuple[float, float]

STEP_FACTOR = math.sqrt(2.0)
CLOSURE_FACTOR = 0.5
MIN_CLOSURE_POINTS = 3
CAP_FACTOR = 4.0
BUDGET_FACTOR = 8.0
COVERAGE_MIN = 1.5
COVERAGE_SLACK = 0.5
RESIDUE_FACTOR = 4.0
MAX_RESIDUE_DEPTH = 8
GOLDEN_TOLERANCE = 1e-3
VISIT_FACTOR = 1.0
RECENT_STEPS = 3
TURN_STEPS = 3
ANCHOR_FACTOR = 2.0
TURN_COS = math.sqrt(0.5)
GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


@typechecked()
class MidPolyline():
    """Ordered crest points of one slice, open or closed (closing segment implicit)."""
    _sliceIndex = None
    _points = None
    _closed = None
    _componentId = None
    _step = None
    _truncated = None

    def __init__(self, sliceIndex: int, points: np.ndarray, closed: bool, componentId: int, step: float, truncated: bool = False):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError(f"Polyline points must be an N x 2 array, got shape {points.shape}")
        if len(points) < (3 if closed else 2):
            raise ValueError(f"A {'closed' if closed else 'open'} polyline needs at least {3 if closed else 2} points, got {len(points)}")
        self._sliceIndex = sliceIndex
        self._points = points
        self._closed = closed
        self._componentId = componentId
        self._step = step
        self._truncated = truncated

    def __repr__(self):
        return super().__repr__() + f"(z={self._sliceIndex}, points={len(self)}, closed={self._closed})"

    def __len__(self):
        return len(self._points)

    @property
    def sliceIndex(self) -> int:
        return self._sliceIndex

    @property
    def points(self) -> np.ndarray:
        """Returns the N x 2 physical (x, y) points."""
        return self._points

    @property
    def closed(self) -> bool:
        return self._closed

    @property
    def componentId(self) -> int:
        return self._componentId

    @property
    def step(self) -> float:
        """Returns the nominal step length h."""
        return self._step

    @property
    def truncated(self) -> bool:
        """Returns True if tracing stopped on the step budget."""
        return self._truncated

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Returns segment (starts, ends), closing segment included for closed polylines."""
        if self._closed:
            return self._points, np.roll(self._points, -1, axis=0)
        return self._points[:-1], self._points[1:]

    def segmentLengths(self) -> np.ndarray:
        starts, ends = self.segments()
        return np.linalg.norm(ends - starts, axis=1)

    def length(self) -> float:
        """Returns the arc length."""
        return float(self.segmentLengths().sum())


@typechecked()
class CapSkipped():
    """Outcome of a trace discarded as a cap (short ridge of a thick component)."""
    _sliceIndex = None
    _componentId = None
    _length = None
    _threshold = None

    def __init__(self, sliceIndex: int, componentId: int, length: float, threshold: float):
        self._sliceIndex = sliceIndex
        self._componentId = componentId
        self._length = length
        self._threshold = threshold

    def __repr__(self):
        return super().__repr__() + f"(z={self._sliceIndex}, id={self._componentId}, length={self._length:.3f}<{self._threshold:.3f})"

    @property
    def sliceIndex(self) -> int:
        return self._sliceIndex

    @property
    def componentId(self) -> int:
        return self._componentId

    @property
    def length(self) -> float:
        return self._length

    @property
    def threshold(self) -> float:
        return self._threshold


@typechecked()
class PolylineStack():
    """Mid-polylines of one object, bucketed by slice index."""
    _spacing = None
    _origin = None
    _buckets = None
    _caps = None

    def __init__(self, spacing: tuple[float, float, float] = (1.0, 1.0, 1.0), origin: tuple[float, float, float] = (0.0, 0.0, 0.0)):
        self._spacing = tuple(float(_) for _ in spacing)
        self._origin = tuple(float(_) for _ in origin)
        self._buckets = {}
        self._caps = []

    def __repr__(self):
        return super().__repr__() + f"(slices={len(self._buckets)}, polylines={len(self)})"

    def __len__(self):
        return sum(len(_) for _ in self._buckets.values())

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self._spacing

    @property
    def origin(self) -> tuple[float, float, float]:
        return self._origin

    @property
    def sliceSpacing(self) -> float:
        """Returns sz, the distance between slices."""
        return self._spacing[2]

    def sliceHeight(self, z: int) -> float:
        """Returns the physical z coordinate of slice z."""
        return self._origin[2] + z * self._spacing[2]

    def add(self, polyline: MidPolyline) -> None:
        self._buckets.setdefault(polyline.sliceIndex, []).append(polyline)

    def addCap(self, cap: CapSkipped) -> None:
        self._caps += [cap]

    def slices(self) -> list[int]:
        """Returns the slice indices holding at least one polyline, ascending."""
        return sorted(self._buckets)

    def polylines(self, z: int) -> list[MidPolyline]:
        """Returns the polylines of slice z, in tracing order."""
        return list(self._buckets.get(z, []))

    def allPolylines(self) -> list[MidPolyline]:
        return [polyline for z in self.slices() for polyline in self._buckets[z]]

    @property
    def caps(self) -> list[CapSkipped]:
        return self._caps

    @property
    def capCount(self) -> int:
        return len(self._caps)

    @property
    def truncatedCount(self) -> int:
        return sum(1 for _ in self.allPolylines() if _.truncated)


@typechecked()
class TraceState():
    """Current point r_i and unit direction v_i of a trace, with its step length.

    The visited raster is shared by every state of a trace: each pixel holds the
    number of the step that first came near it, 0 if none did."""
    _point = None
    _direction = None
    _step = None
    _visited = None

    def __init__(self, point: TYP_POINT, direction: TYP_POINT, step: float, visited: np.ndarray | None = None):
        norm = math.hypot(*direction)
        if not norm > 0:
            raise ValueError("Trace direction must be nonzero")
        self._point = (float(point[0]), float(point[1]))
        self._direction = (direction[0] / norm, direction[1] / norm)
        self._step = step
        self._visited = visited

    def __repr__(self):
        return super().__repr__() + f"(r={self._point}, v={self._direction})"

    @property
    def point(self) -> TYP_POINT:
        return self._point

    @property
    def direction(self) -> TYP_POINT:
        return self._direction

    @property
    def step(self) -> float:
        return self._step

    @property
    def visited(self) -> np.ndarray | None:
        return self._visited


@typechecked()
def findSeed(component: SliceComponent, field: ScalarField2D) -> TYP_POINT:
    """Returns the center of the component pixel holding the largest field value.
    Ties go to the smallest (y, x) pixel."""
    if component.pixelCount == 0:
        raise ValueError("Cannot seed an empty component")
    coordinates = component.coordinates()
    values = field.values[coordinates[:, 0], coordinates[:, 1]]
    x, y = coordinates[int(np.argmax(values))]
    return field.toPhysical(int(x), int(y))


def _searchInterval(field, p, direction, window):
    """Returns the [tmin, tmax] part of [-window, window] keeping p + t*direction in the field."""
    (xlo, ylo), (xhi, yhi) = field.bounds()
    tmin, tmax = -window, window
    for value, d, lo, hi in ((p[0], direction[0], xlo, xhi), (p[1], direction[1], ylo, yhi)):
        if d == 0.0:
            if not lo <= value <= hi:
                return None
            continue
        ta, tb = sorted(((lo - value) / d, (hi - value) / d))
        tmin, tmax = max(tmin, ta), min(tmax, tb)
    return None if tmin > tmax else (tmin, tmax)


@typechecked()
def goldenCorrect(
    field: ScalarField2D | Callable,
    p: TYP_POINT,
    direction: TYP_POINT,
    window: float | None = None,
) -> TYP_POINT:
    """Moves p along `direction` to the maximum of the field within +/- window.

    Slices are sampled with cubic splines and the window (one in-plane pixel by
    default) is clipped to the slice; p is returned unchanged if nothing is
    left. Any callable f(x, y) may be searched instead of a slice."""
    if isinstance(field, ScalarField2D):
        window = min(field.spacing) if window is None else window
        interval = _searchInterval(field, p, direction, window)
        if interval is None:
            return (float(p[0]), float(p[1]))
        coefficients = field.coefficients
        (ox, oy), (sx, sy) = field.origin, field.spacing
        umax, vmax = (_ - 1 for _ in field.dims)

        def sample(t):
            u = min(max((p[0] + t * direction[0] - ox) / sx, 0.0), umax)
            v = min(max((p[1] + t * direction[1] - oy) / sy, 0.0), vmax)
            return splineAt(coefficients, u, v)
    else:
        window = 1.0 if window is None else window
        interval = (-window, window)

        def sample(t):
            return float(field(p[0] + t * direction[0], p[1] + t * direction[1]))

    tolerance = GOLDEN_TOLERANCE * window
    a, b = interval
    c, d = b - GOLDEN_RATIO * (b - a), a + GOLDEN_RATIO * (b - a)
    fc, fd = sample(c), sample(d)
    while b - a > tolerance:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN_RATIO * (b - a)
            fc = sample(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN_RATIO * (b - a)
            fd = sample(d)

    # Monotone profiles peak on the window ends.
    best, fbest = (a + b) / 2.0, sample((a + b) / 2.0)
    for end in interval:
        fend = sample(end)
        if fend > fbest:
            best, fbest = end, fend
    return (float(p[0] + best * direction[0]), float(p[1] + best * direction[1]))


@typechecked()
def step(state: TraceState, field: ScalarField2D, hessian: HessianField2D) -> TraceState:
    """One corrected Euler step. Raises OutOfFieldError when the candidate leaves the slice."""
    r = state.point
    trace = eigen2x2(*sampleHessian(hessian, r)).vTrace
    if trace[0] * state.direction[0] + trace[1] * state.direction[1] < 0:
        trace = (-trace[0], -trace[1])

    candidate = (r[0] + state.step * trace[0], r[1] + state.step * trace[1])
    if not field.contains(candidate):
        raise OutOfFieldError(f"Step from {r} left slice {field.sliceIndex}")

    correct = eigen2x2(*sampleHessian(hessian, candidate)).vCorrect
    moved = goldenCorrect(field, candidate, correct)
    delta = (moved[0] - r[0], moved[1] - r[1])
    direction = delta if math.hypot(*delta) > 0 else trace
    return TraceState(moved, direction, state.step, visited=state.visited)


def _segmentDistances(points, starts, ends):
    """Returns, for each point, the distance to the nearest segment."""
    best = np.full(len(points), np.inf)
    if len(starts) == 0:
        return best
    axis = ends - starts
    squared = np.einsum("ij,ij->i", axis, axis)
    squared[squared == 0] = 1.0
    for chunk in range(0, len(points), 2048):
        rel = points[chunk:chunk + 2048, None, :] - starts[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", rel, axis) / squared, 0.0, 1.0)
        gap = rel - t[..., None] * axis[None, :, :]
        best[chunk:chunk + 2048] = np.sqrt(np.einsum("pij,pij->pi", gap, gap).min(axis=1))
    return best


def _pointSegmentDistance(p, a, b):
    return float(_segmentDistances(np.asarray([p]), np.asarray([a]), np.asarray([b]))[0])


def _pixelOf(field, p):
    u, v = field.toGrid(p)
    return int(round(u)), int(round(v))


def _stampSegment(visited, origin, spacing, a, b, radius, stamp):
    """Stamps the unvisited pixels whose centers lie within radius of segment ab."""
    lo = np.maximum(np.floor((np.minimum(a, b) - radius - origin) / spacing).astype(int), 0)
    hi = np.minimum(np.ceil((np.maximum(a, b) + radius - origin) / spacing).astype(int), np.asarray(visited.shape) - 1)
    if np.any(lo > hi):
        return
    window = visited[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1]
    i, j = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    centers = origin + np.column_stack((i.ravel(), j.ravel())) * spacing
    near = (_segmentDistances(centers, a[None, :], b[None, :]) <= radius).reshape(window.shape)
    window[near & (window == 0)] = stamp


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def _unit(v):
    norm = math.hypot(*v)
    return (v[0] / norm, v[1] / norm) if norm > 0 else (0.0, 0.0)


def _turnReference(points, headings):
    """Returns the heading a trace had TURN_STEPS steps ago, as a chord when enough points exist."""
    if len(points) < 2 * TURN_STEPS:
        return headings[max(0, len(headings) - TURN_STEPS)]
    a, b = points[-2 * TURN_STEPS], points[-TURN_STEPS]
    return _unit((b[0] - a[0], b[1] - a[1]))


def _trimTurn(points, headings, reference):
    """Drops the trailing points reached while turning away from reference."""
    while len(points) > 1 and _dot(headings[-1], reference) < TURN_COS:
        points.pop()
        headings.pop()
    return points


def _march(component, field, hessian, anchor, direction, h, budget, visited, first, zone, closable):
    """Traces from anchor until closure, exit or budget. Returns (points, status).

    Steps are stamped into `visited` from number `first` on. Within `zone` of the
    anchor a closable trace that has been away closes at its closest approach.
    Elsewhere, landing on pixels stamped more than RECENT_STEPS steps ago or
    turning back on itself ends the trace."""
    origin, spacing = np.asarray(field.origin), np.asarray(field.spacing)
    (ox, oy), (sx, sy) = field.origin, field.spacing
    radius = VISIT_FACTOR * h
    points = [anchor]
    headings = [direction]
    state = TraceState(anchor, direction, h, visited=visited)
    _stampSegment(visited, origin, spacing, np.asarray(anchor), np.asarray(anchor), radius, first)
    away = False
    for count in range(1, budget + 1):
        stamp = first + count
        try:
            advanced = step(state, field, hessian)
        except OutOfFieldError:
            return points, "exited"
        p, q = state.point, advanced.point
        if closable and len(points) >= MIN_CLOSURE_POINTS and _pointSegmentDistance(anchor, p, q) <= CLOSURE_FACTOR * h:
            return points, "closed"
        x, y = int(round((q[0] - ox) / sx)), int(round((q[1] - oy) / sy))
        if not component.containsPixel(x, y):
            return points, "exited"

        heading = advanced.direction
        reference = _turnReference(points, headings)
        if _dot(heading, headings[-1]) < 0.0:
            return _trimTurn(points, headings, reference), "exited"
        if len(points) >= 2 * TURN_STEPS:
            base = points[-TURN_STEPS]
            if _dot(_unit((q[0] - base[0], q[1] - base[1])), reference) < TURN_COS:
                return _trimTurn(points, headings, reference), "exited"

        gap = math.hypot(q[0] - anchor[0], q[1] - anchor[1])
        if gap <= zone:
            if closable and away and len(points) >= MIN_CLOSURE_POINTS and gap > math.hypot(p[0] - anchor[0], p[1] - anchor[1]):
                return points, "closed"
        else:
            away = True
            seen = visited[x, y]
            if 0 < seen < stamp - RECENT_STEPS:
                return _trimTurn(points, headings, reference), "exited"

        _stampSegment(visited, origin, spacing, np.asarray(p), np.asarray(q), radius, stamp)
        points += [q]
        headings += [heading]
        state = advanced
    return points, "truncated"


def _componentMaxSdf(component, field):
    """Returns the in-slice distance of the component's deepest pixel to the background."""
    distances = ndimage.distance_transform_edt(component.pixels, sampling=field.spacing)
    return float(distances.max())


@typechecked()
def trace(
    component: SliceComponent,
    field: ScalarField2D,
    hessian: HessianField2D,
    stepLength: float,
    stagger: bool = False,
    maxSdf: float | None = None,
) -> MidPolyline | CapSkipped:
    """Traces the mid-polyline of a slice component (see module documentation).

    stagger: anchor the trace half a step away from the seed along the crest.
    maxSdf: in-slice depth of the component, computed from its pixels if None."""
    if component.pixelCount == 0:
        raise ValueError("Cannot trace an empty component")
    h = stepLength
    maxSdf = _componentMaxSdf(component, field) if maxSdf is None else maxSdf
    budget = max(MIN_CLOSURE_POINTS + 1, math.ceil(BUDGET_FACTOR * component.pixelCount / (h / min(field.spacing))))

    seed = findSeed(component, field)
    start = eigen2x2(*sampleHessian(hessian, seed)).vTrace
    anchor = seed
    if stagger:
        shifted = (seed[0] + h / 2.0 * start[0], seed[1] + h / 2.0 * start[1])
        if field.contains(shifted) and component.containsPixel(*_pixelOf(field, shifted)):
            anchor = goldenCorrect(field, shifted, eigen2x2(*sampleHessian(hessian, shifted)).vCorrect)

    visited = np.zeros(field.dims, dtype=np.int64)
    zone = max(ANCHOR_FACTOR * h, maxSdf + h)
    points, status = _march(component, field, hessian, anchor, start, h, budget, visited, 1, zone, True)
    truncated = status == "truncated"
    if status == "exited":
        back, backStatus = _march(
            component, field, hessian, anchor, (-start[0], -start[1]), h, budget, visited, int(visited.max()) + 1, zone, False)
        points = back[:0:-1] + points
        truncated = backStatus == "truncated"
    if truncated:
        warn(f"Trace of component {component.componentId} on slice {component.sliceIndex} stopped after its step budget ({budget} steps)")

    closed = status == "closed"
    threshold = CAP_FACTOR * maxSdf
    length = 0.0 if len(points) < 2 else float(
        np.linalg.norm(np.diff(np.asarray(points + ([points[0]] if closed else [])), axis=0), axis=1).sum())
    if len(points) < 2 or length < threshold:
        debug(f"slice {component.sliceIndex}: component {component.componentId} is a cap ({length:.3f} < {threshold:.3f})")
        return CapSkipped(component.sliceIndex, component.componentId, length, threshold)
    return MidPolyline(component.sliceIndex, np.asarray(points), closed, component.componentId, h, truncated=truncated)


@typechecked()
def coverageResidue(
    component: SliceComponent,
    polylines: list[MidPolyline],
    field: ScalarField2D,
    maxSdf: float | None = None,
) -> list[SliceComponent]:
    """Returns the uncovered 8-connected parts of the component large enough to be traced again.

    A pixel is covered when its center lies within max(1.5, depth + 0.5) pixels
    of a polyline segment, depth being the in-slice max SDF of the component.
    Parts of at most 4 * depth pixels are ignored."""
    maxSdf = _componentMaxSdf(component, field) if maxSdf is None else maxSdf
    spacing = min(field.spacing)
    radius = max(COVERAGE_MIN * spacing, maxSdf + COVERAGE_SLACK * spacing)

    coordinates = component.coordinates()
    centers = np.asarray(field.origin) + coordinates * np.asarray(field.spacing)
    segments = [_.segments() for _ in polylines]
    if segments:
        starts = np.concatenate([_[0] for _ in segments])
        ends = np.concatenate([_[1] for _ in segments])
        covered = _segmentDistances(centers, starts, ends) <= radius
    else:
        covered = np.zeros(len(centers), dtype=bool)

    uncovered = np.zeros_like(component.pixels)
    rest = coordinates[~covered]
    uncovered[rest[:, 0], rest[:, 1]] = True
    labels, count = ndimage.label(uncovered, structure=SLICE_STRUCTURE)
    if count == 0:
        return []

    sizes = ndimage.sum_labels(uncovered, labels, index=np.arange(1, count + 1))
    key = np.arange(labels.size).reshape(labels.shape, order="F")
    firsts = ndimage.minimum(key, labels=labels, index=np.arange(1, count + 1))
    minimum = RESIDUE_FACTOR * maxSdf / spacing
    return [
        SliceComponent(component.sliceIndex, labels == int(lab) + 1, component.componentId)
        for lab in np.argsort(np.asarray(firsts), kind="stable")
        if sizes[lab] > minimum
    ]


@typechecked()
def extractStack(mask: BinaryMask3D, smoothed: ScalarField3D) -> PolylineStack:
    """Traces every slice component of the mask on the smoothed field, residues included."""
    if mask.dims != smoothed.dims:
        raise ValueError(f"Mask dims {mask.dims} differ from field dims {smoothed.dims}")

    stack = PolylineStack(spacing=mask.spacing, origin=mask.origin)
    h = STEP_FACTOR * mask.spacing[2]
    for z in range(mask.dims[2]):
        components = sliceComponents(mask, z)
        if not components:
            continue
        plane = extractSlice(smoothed, z)
        hessian = computeHessian(plane)
        depths = ndimage.distance_transform_edt(mask.bits[:, :, z], sampling=mask.spacing[:2])

        for component in components:
            maxSdf = float(depths[component.pixels].max())
            traced = []
            pending = [(component, 0)]
            while pending:
                part, depth = pending.pop(0)
                result = trace(part, plane, hessian, h, stagger=z % 2 == 1, maxSdf=maxSdf)
                if isinstance(result, CapSkipped):
                    stack.addCap(result)
                    continue
                stack.add(result)
                traced += [result]
                residues = coverageResidue(part, traced, plane, maxSdf=maxSdf)
                if residues and depth + 1 > MAX_RESIDUE_DEPTH:
                    warn(f"Dropping {len(residues)} untraced part(s) of component {component.componentId} on slice {z}")
                    continue
                pending += [(_, depth + 1) for _ in residues]
        debug(f"slice {z}: {len(components)} component(s), {len(stack.polylines(z))} polyline(s)")
    return stack
