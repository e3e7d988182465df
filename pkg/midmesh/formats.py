#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""File formats: NRRD and MHD+RAW volumes (raw, little endian, 8/16-bit unsigned),
OBJ / ascii PLY meshes and OBJ polylines."""

import pathlib
import re

import numpy as np

from typeguard import typechecked

from midmesh.context import warn
from midmesh.mesh import MidSurfaceMesh
from midmesh.tracing import PolylineStack
from midmesh.volume import LabeledVolume

TYP_PATH = str | pathlib.Path

SCALAR_TYPES = {"uint8": np.dtype("<u1"), "uint16": np.dtype("<u2")}
NRRD_TYPES = {
    "uchar": "uint8",
    "unsigned char": "uint8",
    "uint8": "uint8",
    "uint8_t": "uint8",
    "ushort": "uint16",
    "unsigned short": "uint16",
    "unsigned short int": "uint16",
    "uint16": "uint16",
    "uint16_t": "uint16",
}
MHD_TYPES = {"MET_UCHAR": "uint8", "MET_USHORT": "uint16"}
NRRD_NAMES = {"uint8": "uchar", "uint16": "ushort"}
MHD_NAMES = {"uint8": "MET_UCHAR", "uint16": "MET_USHORT"}


@typechecked()
class VolumeHeader():
    """Parsed volume header: geometry, scalar type and where the raw voxels are."""
    _dims = None
    _spacing = None
    _origin = None
    _scalarType = None
    _encoding = None
    _sourceFormat = None
    _dataFile = None
    _dataOffset = None

    def __init__(
        self,
        dims: tuple[int, int, int],
        spacing: tuple[float, float, float],
        origin: tuple[float, float, float],
        scalarType: str,
        sourceFormat: str,
        dataFile: pathlib.Path,
        dataOffset: int = 0,
        encoding: str = "raw",
    ):
        if any(n < 1 for n in dims):
            raise ValueError(f"{sourceFormat} header: sizes must be >= 1, got {dims}")
        if any(not s > 0 for s in spacing):
            raise ValueError(f"{sourceFormat} header: spacing must be > 0, got {spacing}")
        if scalarType not in SCALAR_TYPES:
            raise ValueError(f"{sourceFormat} header: unsupported type '{scalarType}'")
        self._dims = dims
        self._spacing = spacing
        self._origin = origin
        self._scalarType = scalarType
        self._encoding = encoding
        self._sourceFormat = sourceFormat
        self._dataFile = dataFile
        self._dataOffset = dataOffset

    def __repr__(self):
        return super().__repr__() + f"(format={self._sourceFormat}, dims={self._dims}, type={self._scalarType})"

    @property
    def dims(self) -> tuple[int, int, int]:
        return self._dims

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self._spacing

    @property
    def origin(self) -> tuple[float, float, float]:
        return self._origin

    @property
    def scalarType(self) -> str:
        return self._scalarType

    @property
    def encoding(self) -> str:
        return self._encoding

    @property
    def sourceFormat(self) -> str:
        """Returns "NRRD" or "MHD"."""
        return self._sourceFormat

    @property
    def dataFile(self) -> pathlib.Path:
        return self._dataFile

    @property
    def dataOffset(self) -> int:
        return self._dataOffset

    @property
    def bytesPerVoxel(self) -> int:
        return SCALAR_TYPES[self._scalarType].itemsize

    @property
    def expectedBytes(self) -> int:
        """Returns the size of the voxel data declared by the header."""
        nx, ny, nz = self._dims
        return nx * ny * nz * self.bytesPerVoxel


def _numbers(text, count, field, kind=float):
    values = text.split()
    if len(values) != count:
        raise ValueError(f"Field '{field}' expects {count} values, got '{text}'")
    try:
        return tuple(kind(_) for _ in values)
    except ValueError as error:
        raise ValueError(f"Field '{field}' is not numeric: '{text}'") from error


def _vectors(text, field):
    """Parses NRRD vectors such as "(1,0,0) (0,1,0) none"."""
    vectors = []
    for token in re.findall(r"\(([^)]*)\)|none", text):
        vectors += [None if token == "" else tuple(float(_) for _ in token.split(","))]
    if not vectors:
        raise ValueError(f"Field '{field}' holds no vector: '{text}'")
    return vectors


def _splitNrrd(raw, path):
    """Returns (header fields, offset of the attached data)."""
    if not raw.startswith(b"NRRD000"):
        raise ValueError(f"{path} is not a NRRD file (missing NRRD000X magic)")
    end = raw.find(b"\n\n")
    if end < 0:
        headerText, offset = raw.decode("latin-1"), len(raw)
    else:
        headerText, offset = raw[:end].decode("latin-1"), end + 2

    fields = {}
    for line in headerText.splitlines()[1:]:
        line = line.strip()
        if not line or line.startswith("#") or ":=" in line:
            continue
        if ": " not in line:
            raise ValueError(f"Malformed NRRD header line '{line}'")
        key, value = line.split(": ", 1)
        fields[key.strip().lower()] = value.strip()
    return fields, offset


def _nrrdHeader(path):
    raw = path.read_bytes()
    fields, offset = _splitNrrd(raw, path)

    encoding = fields.get("encoding", "")
    if encoding != "raw":
        raise ValueError(f"Unsupported NRRD encoding '{encoding}', only 'raw' is read")
    typeName = fields.get("type", "")
    if typeName not in NRRD_TYPES:
        raise ValueError(f"Unsupported NRRD type '{typeName}', expected unsigned 8 or 16-bit integers")
    scalarType = NRRD_TYPES[typeName]
    if fields.get("dimension") != "3":
        raise ValueError(f"Unsupported NRRD dimension '{fields.get('dimension')}', expected 3")
    if "sizes" not in fields:
        raise ValueError("NRRD header misses the 'sizes' field")
    dims = _numbers(fields["sizes"], 3, "sizes", int)
    endian = fields.get("endian", "little")
    if endian != "little" and scalarType != "uint8":
        raise ValueError(f"Unsupported NRRD endian '{endian}', only 'little' is read")

    if "spacings" in fields:
        spacing = _numbers(fields["spacings"], 3, "spacings")
    elif "space directions" in fields:
        directions = _vectors(fields["space directions"], "space directions")
        if len(directions) != 3 or any(_ is None for _ in directions):
            raise ValueError(f"Field 'space directions' must hold 3 vectors, got '{fields['space directions']}'")
        spacing = tuple(float(np.linalg.norm(_)) for _ in directions)
    else:
        warn(f"{path.name}: no spacing in NRRD header, using 1.0 per axis")
        spacing = (1.0, 1.0, 1.0)

    origin = (0.0, 0.0, 0.0)
    if "space origin" in fields:
        origin = _vectors(fields["space origin"], "space origin")[0]
        if origin is None or len(origin) != 3:
            raise ValueError(f"Field 'space origin' must be a 3-vector, got '{fields['space origin']}'")

    dataFile, dataOffset = path, offset
    detached = fields.get("data file", fields.get("datafile"))
    if detached is not None:
        dataFile, dataOffset = path.parent / detached, 0
    skip = int(fields.get("byte skip", fields.get("byteskip", "0")))
    if skip < 0:
        raise ValueError(f"Unsupported NRRD byte skip '{skip}'")
    return VolumeHeader(dims, spacing, tuple(origin), scalarType, "NRRD", dataFile, dataOffset + skip)


def _mhdHeader(path):
    fields, order, offset = {}, [], 0
    raw = path.read_bytes()
    for line in raw.split(b"\n"):
        offset += len(line) + 1
        text = line.decode("latin-1").strip()
        if not text:
            continue
        if "=" not in text:
            raise ValueError(f"Malformed MHD header line '{text}'")
        key, value = (_.strip() for _ in text.split("=", 1))
        fields[key] = value
        order += [key]
        if key == "ElementDataFile":
            break
    if not order or order[-1] != "ElementDataFile":
        raise ValueError("MHD header misses the 'ElementDataFile' field")

    if fields.get("CompressedData", "False").lower() == "true":
        raise ValueError("Unsupported MHD field 'CompressedData = True', only raw data is read")
    if fields.get("NDims", "3") != "3":
        raise ValueError(f"Unsupported MHD 'NDims = {fields['NDims']}', expected 3")
    typeName = fields.get("ElementType", "")
    if typeName not in MHD_TYPES:
        raise ValueError(f"Unsupported MHD 'ElementType = {typeName}', expected MET_UCHAR or MET_USHORT")
    scalarType = MHD_TYPES[typeName]
    msb = fields.get("BinaryDataByteOrderMSB", fields.get("ElementByteOrderMSB", "False"))
    if msb.lower() == "true" and scalarType != "uint8":
        raise ValueError("Unsupported MHD 'BinaryDataByteOrderMSB = True', only little endian is read")
    if "DimSize" not in fields:
        raise ValueError("MHD header misses the 'DimSize' field")
    dims = _numbers(fields["DimSize"], 3, "DimSize", int)

    spacingKey = next((_ for _ in ("ElementSpacing", "ElementSize") if _ in fields), None)
    if spacingKey is None:
        warn(f"{path.name}: no ElementSpacing in MHD header, using 1.0 per axis")
        spacing = (1.0, 1.0, 1.0)
    else:
        spacing = _numbers(fields[spacingKey], 3, spacingKey)
    originKey = next((_ for _ in ("Offset", "Origin", "Position") if _ in fields), None)
    origin = (0.0, 0.0, 0.0) if originKey is None else _numbers(fields[originKey], 3, originKey)

    if fields["ElementDataFile"] == "LOCAL":
        dataFile, dataOffset = path, offset
    else:
        dataFile, dataOffset = path.parent / fields["ElementDataFile"], 0
    return VolumeHeader(dims, spacing, origin, scalarType, "MHD", dataFile, dataOffset)


@typechecked()
def readHeader(path: TYP_PATH) -> VolumeHeader:
    """Parses the header of a .nrrd/.nhdr or .mhd/.mha file."""
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Volume file {path} does not exist")
    suffix = path.suffix.lower()
    if suffix in (".nrrd", ".nhdr"):
        return _nrrdHeader(path)
    if suffix in (".mhd", ".mha"):
        return _mhdHeader(path)
    raise ValueError(f"Unsupported volume format '{path.suffix}', expected .nrrd, .nhdr, .mhd or .mha")


@typechecked()
def loadVolume(path: TYP_PATH) -> LabeledVolume:
    """Reads a labeled volume from NRRD or MHD+RAW."""
    header = readHeader(path)
    if not header.dataFile.is_file():
        raise FileNotFoundError(f"Volume data file {header.dataFile} does not exist")
    raw = header.dataFile.read_bytes()[header.dataOffset:]
    if len(raw) != header.expectedBytes:
        raise ValueError(
            f"{header.sourceFormat} data size mismatch in {header.dataFile}: expected {header.expectedBytes} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype=SCALAR_TYPES[header.scalarType]).reshape(header.dims, order="F")
    return LabeledVolume(data.astype(SCALAR_TYPES[header.scalarType].type), spacing=header.spacing, origin=header.origin)


def _float(value):
    return f"{value:.17g}"


@typechecked()
def saveVolume(volume: LabeledVolume, path: TYP_PATH) -> None:
    """Writes a volume as attached raw NRRD (.nrrd) or MHD with a .raw side file (.mhd)."""
    path = pathlib.Path(path)
    low, high = int(volume.data.min()), int(volume.data.max())
    if low < 0 or high > 65535:
        raise ValueError(f"Labels must fit unsigned 16-bit integers, got range [{low}, {high}]")
    scalarType = "uint8" if high <= 255 else "uint16"
    payload = np.asarray(volume.data, dtype=SCALAR_TYPES[scalarType]).tobytes(order="F")
    nx, ny, nz = volume.dims
    sx, sy, sz = volume.spacing

    suffix = path.suffix.lower()
    if suffix == ".nrrd":
        header = "\n".join([
            "NRRD0004",
            f"type: {NRRD_NAMES[scalarType]}",
            "dimension: 3",
            "space dimension: 3",
            f"sizes: {nx} {ny} {nz}",
            f"space directions: ({_float(sx)},0,0) (0,{_float(sy)},0) (0,0,{_float(sz)})",
            f"space origin: ({','.join(_float(_) for _ in volume.origin)})",
            "encoding: raw",
            "endian: little",
        ])
        path.write_bytes(header.encode("latin-1") + b"\n\n" + payload)
    elif suffix == ".mhd":
        dataFile = path.with_suffix(".raw")
        header = "\n".join([
            "ObjectType = Image",
            "NDims = 3",
            "BinaryData = True",
            "BinaryDataByteOrderMSB = False",
            "CompressedData = False",
            f"Offset = {' '.join(_float(_) for _ in volume.origin)}",
            f"ElementSpacing = {_float(sx)} {_float(sy)} {_float(sz)}",
            f"DimSize = {nx} {ny} {nz}",
            f"ElementType = {MHD_NAMES[scalarType]}",
            f"ElementDataFile = {dataFile.name}",
        ])
        path.write_text(header + "\n")
        dataFile.write_bytes(payload)
    else:
        raise ValueError(f"Unsupported volume format '{path.suffix}', expected .nrrd or .mhd")


def _meshFormat(path, meshFormat):
    meshFormat = (meshFormat or path.suffix.lstrip(".")).lower()
    if meshFormat not in ("obj", "ply"):
        raise ValueError(f"Unsupported mesh format '{meshFormat}', expected obj or ply")
    return meshFormat


@typechecked()
def writeMesh(mesh: MidSurfaceMesh, path: TYP_PATH, meshFormat: str | None = None) -> None:
    """Writes an OBJ (1-based faces) or ascii PLY 1.0 mesh. Coordinates use 6 decimals."""
    path = pathlib.Path(path)
    vertices = [f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices.tolist()]
    if _meshFormat(path, meshFormat) == "obj":
        lines = [f"v {_}" for _ in vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    else:
        lines = [
            "ply",
            "format ascii 1.0",
            f"element vertex {mesh.vertexCount}",
            "property float x",
            "property float y",
            "property float z",
            f"element face {mesh.triangleCount}",
            "property list uchar int vertex_indices",
            "end_header",
        ]
        lines += vertices
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    path.write_text("\n".join(lines) + "\n")


@typechecked()
def writePolylines(stack: PolylineStack, path: TYP_PATH) -> None:
    """Writes the polylines of a stack as OBJ `l` records; closed lines repeat their first index."""
    lines, records, base = [], [], 1
    for polyline in stack.allPolylines():
        height = stack.sliceHeight(polyline.sliceIndex)
        lines += [f"v {x:.6f} {y:.6f} {height:.6f}" for x, y in polyline.points.tolist()]
        indices = list(range(base, base + len(polyline)))
        if polyline.closed:
            indices += [base]
        records += ["l " + " ".join(str(_) for _ in indices)]
        base += len(polyline)
    pathlib.Path(path).write_text("\n".join(lines + records) + "\n")


def _readText(path):
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"File {path} does not exist")
    return path, path.read_text().splitlines()


@typechecked()
def readMesh(path: TYP_PATH) -> MidSurfaceMesh:
    """Reads an OBJ or ascii PLY triangle mesh."""
    path, lines = _readText(path)
    vertices, triangles = [], []
    if _meshFormat(path, None) == "obj":
        for line in lines:
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "v":
                vertices += [[float(_) for _ in tokens[1:4]]]
            elif tokens[0] == "f":
                triangles += [[int(_.split("/")[0]) - 1 for _ in tokens[1:4]]]
    else:
        if not lines or lines[0].strip() != "ply" or "format ascii 1.0" not in lines:
            raise ValueError(f"{path} is not an ascii PLY 1.0 file")
        counts = {}
        for line in lines:
            tokens = line.split()
            if tokens[:1] == ["element"]:
                counts[tokens[1]] = int(tokens[2])
            if tokens == ["end_header"]:
                break
        body = lines[lines.index("end_header") + 1:]
        nv, nf = counts.get("vertex", 0), counts.get("face", 0)
        vertices = [[float(_) for _ in line.split()[:3]] for line in body[:nv]]
        for line in body[nv:nv + nf]:
            tokens = [int(_) for _ in line.split()]
            if tokens[0] != 3:
                raise ValueError(f"{path}: only triangular faces are read, got a {tokens[0]}-gon")
            triangles += [tokens[1:4]]
    return MidSurfaceMesh(np.asarray(vertices, dtype=float), np.asarray(triangles, dtype=np.int64))


@typechecked()
def readPolylines(path: TYP_PATH) -> list[tuple[np.ndarray, bool]]:
    """Reads OBJ `l` records back as (N x 3 points, closed) pairs."""
    _, lines = _readText(path)
    vertices, polylines = [], []
    for line in lines:
        tokens = line.split()
        if tokens[:1] == ["v"]:
            vertices += [[float(_) for _ in tokens[1:4]]]
        elif tokens[:1] == ["l"]:
            indices = [int(_) - 1 for _ in tokens[1:]]
            closed = len(indices) > 3 and indices[0] == indices[-1]
            if closed:
                indices = indices[:-1]
            polylines += [(np.asarray(vertices, dtype=float)[indices], closed)]
    return polylines
