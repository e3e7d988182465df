#!/usr/bin/env python
# -*- coding: utf-8 -*-

__version__ = "v0.3.0+0000000"

from midmesh.volume import LabeledVolume, BinaryMask3D, SliceComponent, PhantomSpec
from midmesh.volume import extractObjects, sliceComponents, dilate, generatePhantom
from midmesh.ridge import ScalarField3D, ScalarField2D, HessianField2D, EigenPair2D, OutOfFieldError
from midmesh.ridge import computeSdf, smoothSdf, extractSlice, computeHessian, eigen2x2, sampleHessian, sampleField
from midmesh.tracing import MidPolyline, PolylineStack, TraceState, CapSkipped
from midmesh.tracing import findSeed, goldenCorrect, step, trace, coverageResidue, extractStack
from midmesh.mesh import MidSurfaceMesh
from midmesh.zipper import ZipEdge, PairingResult, pairEdges, triangulatePair, triangulateNonpair, zipStack
from midmesh.quality import QualityReport, triangleQuality, angleStats, valenceStats, report
from midmesh.formats import VolumeHeader, loadVolume, saveVolume, writeMesh, writePolylines, readMesh, readPolylines
from midmesh.main import RunManifest, parsePhantom, extractMidSurface, cliExtract
from midmesh.context import getCurrentContext, getOldContext
from midmesh.context import setVerbose, unsetVerbose, isVerbose
from midmesh.context import setDevTest, unsetDevTest, isDevTest
