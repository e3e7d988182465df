#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Main module of MidMesh: per-object pipeline, run manifest and command line."""

import argparse
import pathlib
import sys
import time

from rich.progress import Progress
from typeguard import typechecked

from midmesh import __version__
from midmesh.context import ERR_CONSOLE, addContext, popContext, getCurrentContext, setVerbose, warn
from midmesh.formats import loadVolume, writeMesh, writePolylines
from midmesh.mesh import MidSurfaceMesh
from midmesh.quality import report
from midmesh.ridge import computeSdf, smoothSdf
from midmesh.tracing import PolylineStack, extractStack
from midmesh.volume import AXES, BinaryMask3D, PhantomSpec, extractObjects, generatePhantom
from midmesh.zipper import zipStack

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_NO_OBJECT = 3

PHANTOM_NAMES = {
    "cylinder": "cylinder_shell",
    "sphere": "sphere_shell",
    "torus": "torus_shell",
    "slab": "slab",
}
STAGES = ("ridge_field", "tracing", "zipping")


@typechecked()
class RunManifest():
    """Summary of one run, written as `key = value` lines. Timing lines start with `time_`."""
    _inputPath = None
    _label = None
    _version = None
    _objects = None
    _timings = None
    _warnings = None
    _failures = None

    def __init__(
        self,
        inputPath: str,
        label: int,
        objects: list[dict],
        timings: dict[str, float] | None = None,
        warnings: list[str] | None = None,
        failures: list[str] | None = None,
        version: str = __version__,
    ):
        self._inputPath = inputPath
        self._label = label
        self._version = version
        self._objects = objects
        self._timings = {} if timings is None else dict(timings)
        self._warnings = [] if warnings is None else list(warnings)
        self._failures = [] if failures is None else list(failures)

    def __repr__(self):
        return super().__repr__() + f"(input={self._inputPath}, objects={self.objectCount})"

    @property
    def objectCount(self) -> int:
        return len(self._objects)

    @property
    def objects(self) -> list[dict]:
        return self._objects

    @property
    def failures(self) -> list[str]:
        return self._failures

    def toText(self) -> str:
        """Returns the manifest text. Only `time_` lines change between identical runs."""
        lines = [
            f"tool_version = {self._version}",
            f"input = {self._inputPath}",
            f"label = {self._label}",
            f"object_count = {self.objectCount}",
        ]
        for record in self._objects:
            prefix = f"object_{record['index']}"
            lines += [f"{prefix}_{key} = {value}" for key, value in record.items() if key != "index"]
        lines += [f"warning_count = {len(self._warnings)}"]
        lines += [f"warning_{k} = {message}" for k, message in enumerate(self._warnings, 1)]
        lines += [f"failure_count = {len(self._failures)}"]
        lines += [f"failure_{k} = {message}" for k, message in enumerate(self._failures, 1)]
        for stage in STAGES:
            lines += [f"time_{stage} = {self._timings.get(stage, 0.0):.3f}"]
        tracing = self._timings.get("ridge_field", 0.0) + self._timings.get("tracing", 0.0)
        lines += [f"time_total = {tracing:.3f} + {self._timings.get('zipping', 0.0):.3f}"]
        return "\n".join(lines) + "\n"

    def write(self, path: pathlib.Path) -> None:
        path.write_text(self.toText())


def _phantomNumber(item, value, kind):
    try:
        return kind(value)
    except ValueError as error:
        raise ValueError(f"Phantom parameter '{item}' is not a number") from error


@typechecked()
def parsePhantom(text: str) -> PhantomSpec:
    """Parses `shape:key=value,...`, e.g. `cylinder:r_in=10,r_out=14,dims=64,hole=40:50:27:37:27:37`."""
    name, _, params = text.partition(":")
    if name not in PHANTOM_NAMES:
        raise ValueError(f"Unknown phantom '{name}', expected one of {', '.join(PHANTOM_NAMES)}")

    values, holes, dims = {}, [], None
    for item in filter(None, params.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"Phantom parameter '{item}' is not key=value")
        if key in ("r_in", "r_out", "r_major"):
            values[key] = _phantomNumber(item, value, float)
        elif key == "thickness":
            values[key] = _phantomNumber(item, value, int)
        elif key == "axis":
            if value not in AXES:
                raise ValueError(f"Phantom axis must be x, y or z, got '{value}'")
            values[key] = value
        elif key == "dims":
            sizes = tuple(_phantomNumber(item, _, int) for _ in value.split("x"))
            dims = sizes * 3 if len(sizes) == 1 else sizes
            if len(dims) != 3:
                raise ValueError(f"Phantom dims must be N or NxMxK, got '{value}'")
        elif key == "hole":
            bounds = [_phantomNumber(item, _, int) for _ in value.split(":")]
            if len(bounds) != 6:
                raise ValueError(f"Phantom hole must be x0:x1:y0:y1:z0:z1, got '{value}'")
            holes += [((bounds[0], bounds[1]), (bounds[2], bounds[3]), (bounds[4], bounds[5]))]
        else:
            raise ValueError(f"Unknown phantom parameter '{key}'")
    if dims is None:
        raise ValueError("Phantom needs a 'dims' parameter")

    return PhantomSpec(
        PHANTOM_NAMES[name],
        dims,
        rInner=values.get("r_in", 0.0),
        rOuter=values.get("r_out", 0.0),
        rMajor=values.get("r_major", 0.0),
        thickness=values.get("thickness", 0),
        axis=values.get("axis", "z"),
        holes=holes,
    )


def _timed(stage, function, *args):
    start = time.perf_counter()
    result = function(*args)
    getCurrentContext().addTiming(stage, time.perf_counter() - start)
    return result


@typechecked()
def extractMidSurface(mask: BinaryMask3D) -> tuple[PolylineStack, MidSurfaceMesh]:
    """Runs ridge field, tracing and zipping on one object. Stage timings go to the current context."""
    smoothed = _timed("ridge_field", lambda _: smoothSdf(computeSdf(_)), mask)
    stack = _timed("tracing", extractStack, mask, smoothed)
    mesh = _timed("zipping", zipStack, stack)
    return stack, mesh


def _processObject(index, mask, output, args, progress):
    """Extracts and writes one object. Returns its manifest record."""
    stack, mesh = extractMidSurface(mask)
    mesh.validate()
    name = f"object_{index}"
    writeMesh(mesh, output / f"{name}.obj")
    if args.ply:
        writeMesh(mesh, output / f"{name}.ply")
    if args.dump_polylines:
        writePolylines(stack, output / f"{name}_lines.obj")

    record = {
        "index": index,
        "voxels": mask.count,
        "polylines": len(stack),
        "caps": stack.capCount,
        "truncated": stack.truncatedCount,
        "vertices": mesh.vertexCount,
        "triangles": mesh.triangleCount,
        "boundary_loops": len(mesh.boundaryLoops()),
        "status": "ok",
    }
    if args.report:
        if mesh.triangleCount == 0:
            warn(f"Object {index} has no triangle, no quality report written")
        else:
            quality = report(mesh)
            (output / f"{name}_report.txt").write_text(quality.toText())
            progress.console.print(quality.toTable(title=name))
    return record


@typechecked()
def cliExtract(argv: list[str] | None = None) -> int:
    """Command line pipeline. Returns 0 on success, 1 if an object failed,
    2 on usage or input errors, 3 if no object carries the label."""
    argparser = argparse.ArgumentParser(prog="midmesh", description="MidMesh extracts mid-surface meshes from thin segmented shells.")
    source = argparser.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "-i",
        "--input",
        type=str,
    )
    source.add_argument(
        "--phantom",
        type=str,
    )
    argparser.add_argument(
        "-l",
        "--label",
        type=int,
        default=1,
    )
    argparser.add_argument(
        "-o",
        "--output",
        type=str,
        required=True,
    )
    argparser.add_argument(
        "--dump-polylines",
        action="store_true",
    )
    argparser.add_argument(
        "--report",
        action="store_true",
    )
    argparser.add_argument(
        "--ply",
        action="store_true",
    )
    argparser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
    )
    try:
        args = argparser.parse_args(argv)
    except SystemExit as error:
        return EXIT_OK if error.code in (0, None) else EXIT_USAGE

    # Global arguments handling.
    if args.verbose:
        setVerbose()

    inputName = args.input if args.input is not None else f"phantom:{args.phantom}"
    context = addContext(inputName)
    try:
        try:
            volume = loadVolume(args.input) if args.input is not None else generatePhantom(parsePhantom(args.phantom))
            objects = extractObjects(volume, args.label)
        except (ValueError, FileNotFoundError) as error:
            ERR_CONSOLE.print(f"[[bold red]STOP[/]] {error}", highlight=False)
            return EXIT_USAGE

        output = pathlib.Path(args.output)
        output.mkdir(parents=True, exist_ok=True)
        if not objects:
            ERR_CONSOLE.print(f"[[bold red]STOP[/]] No object carries label {args.label} in {inputName}.", highlight=False)
            RunManifest(inputName, args.label, [], context.timings, context.warnings, context.failures).write(output / "manifest.txt")
            return EXIT_NO_OBJECT

        with Progress() as progress:
            progress.console.print(f"[+] [green bold] Extracting {len(objects)} object(s) with label {args.label} from {inputName}.[/bold green]")
            task = progress.add_task("Objects", total=len(objects))
            for job, mask in enumerate(objects):
                progress.console.print(f"[{job+1}/{len(objects)}] Object {job + 1} ({mask.count} voxels)")
                try:
                    context.addObject(_processObject(job + 1, mask, output, args, progress))
                except Exception as error:  # pylint: disable=broad-exception-caught
                    progress.console.print(f"[[red bold]FAILED[/red bold]] Object {job + 1}: {type(error).__name__}: {error}")
                    context.addFailure(f"object_{job + 1}: {error}")
                    context.addObject({"index": job + 1, "voxels": mask.count, "status": "failed"})
                progress.advance(task)

        RunManifest(inputName, args.label, context.objects, context.timings, context.warnings, context.failures).write(output / "manifest.txt")
        return EXIT_PARTIAL if context.failures else EXIT_OK
    finally:
        popContext()


def main():
    """Main function of MidMesh."""
    sys.exit(cliExtract(sys.argv[1:]))


if __name__ == "__main__":
    main()
