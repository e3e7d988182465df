#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Mesh quality metrics: triangle quality, angle statistics and vertex valence."""

import math

import numpy as np

from rich.table import Table
from typeguard import typechecked

from midmesh.mesh import MidSurfaceMesh, edgeLengths, isDegenerate, triangleAngles, triangleAreas

QUALITY_SCALE = 6.0 / math.sqrt(3.0)
SMALL_ANGLE = 30.0
LARGE_ANGLE = 120.0
REGULAR_VALENCES = (5, 6, 7)
HISTOGRAM_BINS = 180


@typechecked()
def qualities(points: np.ndarray) -> np.ndarray:
    """Returns Q = (6 / sqrt(3)) * A / (p * h) for (M, 3, 3) triangles, 0 when degenerate.
    A is the area, p the half-perimeter and h the longest edge."""
    lengths = edgeLengths(points)
    half = lengths.sum(axis=1) / 2.0
    longest = lengths.max(axis=1)
    degenerate = isDegenerate(points)
    denominator = np.where(degenerate, 1.0, half * longest)
    return np.where(degenerate, 0.0, QUALITY_SCALE * triangleAreas(points) / denominator)


@typechecked()
def triangleQuality(triangle: np.ndarray) -> float:
    """Returns the quality of one triangle given as a (3, 3) array: 1 if equilateral, 0 if degenerate."""
    return float(qualities(np.asarray(triangle, dtype=float))[0])


def _requireTriangles(mesh):
    if mesh.triangleCount == 0:
        raise ValueError("Mesh quality needs at least one triangle")


@typechecked()
def angleStats(mesh: MidSurfaceMesh) -> tuple[float, float, float, np.ndarray]:
    """Returns (mean minimal angle, % of angles < 30, % of angles > 120, 1-degree histogram)."""
    _requireTriangles(mesh)
    angles = triangleAngles(mesh.trianglePoints())
    histogram, _ = np.histogram(angles, bins=HISTOGRAM_BINS, range=(0.0, 180.0))
    return (
        float(angles.min(axis=1).mean()),
        100.0 * float(np.count_nonzero(angles < SMALL_ANGLE)) / angles.size,
        100.0 * float(np.count_nonzero(angles > LARGE_ANGLE)) / angles.size,
        histogram,
    )


@typechecked()
def valenceStats(mesh: MidSurfaceMesh) -> float:
    """Returns the percentage of vertices with valence 5, 6 or 7. Boundary and isolated vertices count."""
    if mesh.vertexCount == 0:
        raise ValueError("Mesh valence needs at least one vertex")
    regular = np.isin(mesh.valences(), REGULAR_VALENCES)
    return 100.0 * float(np.count_nonzero(regular)) / mesh.vertexCount


@typechecked()
class QualityReport():
    """Quality figures of one mesh."""
    _vertexCount = None
    _triangleCount = None
    _qMin = None
    _qAvg = None
    _thetaMinAvg = None
    _fracLt30 = None
    _fracGt120 = None
    _v567 = None
    _histogram = None

    def __init__(
        self,
        vertexCount: int,
        triangleCount: int,
        qMin: float,
        qAvg: float,
        thetaMinAvg: float,
        fracLt30: float,
        fracGt120: float,
        v567: float,
        histogram: np.ndarray,
    ):
        self._vertexCount = vertexCount
        self._triangleCount = triangleCount
        self._qMin = qMin
        self._qAvg = qAvg
        self._thetaMinAvg = thetaMinAvg
        self._fracLt30 = fracLt30
        self._fracGt120 = fracGt120
        self._v567 = v567
        self._histogram = histogram

    def __repr__(self):
        return super().__repr__() + f"(Q_avg={self._qAvg:.4f}, V567={self._v567:.2f})"

    @property
    def vertexCount(self) -> int:
        return self._vertexCount

    @property
    def triangleCount(self) -> int:
        return self._triangleCount

    @property
    def qMin(self) -> float:
        return self._qMin

    @property
    def qAvg(self) -> float:
        return self._qAvg

    @property
    def thetaMinAvg(self) -> float:
        """Returns the mean of the minimal angle of each triangle, in degrees."""
        return self._thetaMinAvg

    @property
    def fracLt30(self) -> float:
        """Returns the percentage of angles below 30 degrees."""
        return self._fracLt30

    @property
    def fracGt120(self) -> float:
        """Returns the percentage of angles above 120 degrees."""
        return self._fracGt120

    @property
    def v567(self) -> float:
        return self._v567

    @property
    def histogram(self) -> np.ndarray:
        """Returns the angle counts of the 1-degree bins [0, 1), ..., [179, 180]."""
        return self._histogram

    def metrics(self) -> list[tuple[str, float]]:
        """Returns (name, value) of the scalar metrics, in report order."""
        return [
            ("q_min", self._qMin),
            ("q_avg", self._qAvg),
            ("theta_min_avg", self._thetaMinAvg),
            ("frac_lt_30", self._fracLt30),
            ("frac_gt_120", self._fracGt120),
            ("v567", self._v567),
        ]

    def toText(self) -> str:
        """Returns one `name = value` line per metric."""
        lines = [f"vertex_count = {self._vertexCount}", f"triangle_count = {self._triangleCount}"]
        lines += [f"{name} = {value:.4f}" for name, value in self.metrics()]
        return "\n".join(lines) + "\n"

    def toRecords(self) -> dict[str, float | int]:
        """Returns the flat key-value form, histogram bins included as histogram_<degree>."""
        records = {"vertex_count": self._vertexCount, "triangle_count": self._triangleCount}
        records.update({name: round(value, 4) for name, value in self.metrics()})
        records.update({f"histogram_{degree}": int(count) for degree, count in enumerate(self._histogram)})
        return records

    def toTable(self, title: str = "Mesh quality") -> Table:
        """Returns a rich table of the scalar metrics."""
        table = Table(title=title)
        table.add_column("Metric", style="bold")
        table.add_column("Value", justify="right")
        table.add_row("Vertices", str(self._vertexCount))
        table.add_row("Triangles", str(self._triangleCount))
        for name, value in self.metrics():
            table.add_row(name, f"{value:.4f}")
        return table


@typechecked()
def report(mesh: MidSurfaceMesh) -> QualityReport:
    """Computes every metric of a mesh. A mesh without triangles is rejected."""
    _requireTriangles(mesh)
    values = qualities(mesh.trianglePoints())
    thetaMinAvg, fracLt30, fracGt120, histogram = angleStats(mesh)
    return QualityReport(
        mesh.vertexCount,
        mesh.triangleCount,
        float(values.min()),
        float(values.mean()),
        thetaMinAvg,
        fracLt30,
        fracGt120,
        valenceStats(mesh),
        histogram,
    )
