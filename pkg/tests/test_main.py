#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests related to the command line helpers."""

from ward import test, raises

from midmesh import RunManifest, parsePhantom


@test("Phantom descriptions are parsed into phantom specs")
def test_01_parsePhantom():
    """Phantom descriptions are parsed into phantom specs"""
    cylinder = parsePhantom("cylinder:r_in=10,r_out=14,dims=64,hole=40:50:27:37:27:37")
    assert cylinder.shape == "cylinder_shell"
    assert cylinder.dims == (64, 64, 64)
    assert cylinder.midRadius == 12.0
    assert cylinder.holes == [((40, 50), (27, 37), (27, 37))]

    slab = parsePhantom("slab:thickness=5,dims=16x16x24,axis=z")
    assert slab.shape == "slab" and slab.dims == (16, 16, 24)
    assert parsePhantom("torus:r_in=3,r_out=7,r_major=18,dims=64").shape == "torus_shell"


@test("Malformed phantom descriptions are rejected")
def test_02_parsePhantomErrors():
    """Malformed phantom descriptions are rejected"""
    for text in (
        "cube:dims=8",
        "cylinder:r_in=10,r_out=14",
        "cylinder:r_in=ten,r_out=14,dims=64",
        "cylinder:r_in=10,r_out=14,dims=64x64",
        "cylinder:r_in=10,r_out=14,dims=64,hole=1:2:3",
        "cylinder:r_in=10,r_out=14,dims=64,colour=red",
        "cylinder:r_in,dims=64",
        "slab:thickness=5,dims=16,axis=w",
    ):
        with raises(ValueError):
            parsePhantom(text)


@test("Run manifests list objects, warnings, failures and timings")
def test_03_runManifest():
    """Run manifests list objects, warnings, failures and timings"""
    manifest = RunManifest(
        "phantom:slab:thickness=5,dims=16",
        1,
        [{"index": 1, "voxels": 1280, "status": "ok"}],
        timings={"ridge_field": 0.25, "tracing": 1.0, "zipping": 0.5},
        warnings=["something odd"],
        failures=[],
        version="v1.2.3",
    )
    assert manifest.objectCount == 1 and manifest.failures == []
    assert manifest.toText().splitlines() == [
        "tool_version = v1.2.3",
        "input = phantom:slab:thickness=5,dims=16",
        "label = 1",
        "object_count = 1",
        "object_1_voxels = 1280",
        "object_1_status = ok",
        "warning_count = 1",
        "warning_1 = something odd",
        "failure_count = 0",
        "time_ridge_field = 0.250",
        "time_tracing = 1.000",
        "time_zipping = 0.500",
        "time_total = 1.250 + 0.500",
    ]
