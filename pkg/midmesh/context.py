#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""MidMesh functions to handle run contexts (flags, warnings, timings)."""

from collections import deque

from rich.console import Console
from typeguard import typechecked

VERBOSE = False
DEV_TEST = False

CONSOLE = Console()
ERR_CONSOLE = Console(stderr=True)


@typechecked()
def isVerbose() -> bool:
    """Returns True if run is in verbose mode, False otherwise."""
    return VERBOSE


@typechecked()
def isDevTest() -> bool:
    """Returns True if run is in development mode, False otherwise."""
    return DEV_TEST


@typechecked()
def setVerbose() -> None:
    """Sets run to verbose mode."""
    global VERBOSE
    VERBOSE = True


@typechecked()
def setDevTest() -> None:
    """Sets run to development mode."""
    global DEV_TEST
    DEV_TEST = True


@typechecked()
def unsetVerbose() -> None:
    """Sets run to NOT verbose mode."""
    global VERBOSE
    VERBOSE = False


@typechecked()
def unsetDevTest() -> None:
    """Sets run to NOT development mode."""
    global DEV_TEST
    DEV_TEST = False
    resetOldContexts()


@typechecked()
def warn(message: str) -> None:
    """Prints a warning and records it in the current context."""
    ERR_CONSOLE.print(f"[[bold yellow]WARN[/bold yellow]] {message}", highlight=False)
    getCurrentContext().addWarning(message)


@typechecked()
def debug(message: str) -> None:
    """Prints a diagnostic line in verbose mode only."""
    if VERBOSE:
        CONSOLE.print(f"[dim]{message}[/dim]", highlight=False)


def getOldContext(name):
    """Dev purpose: returns an old context for inspection."""
    return DEV_OLD_CONTEXTS[name]


def addOldContext(name, context):
    """Dev purpose: adds an old context for inspection."""
    DEV_OLD_CONTEXTS[name] = context


def resetOldContexts():
    """Empties old contexts."""
    global DEV_OLD_CONTEXTS
    DEV_OLD_CONTEXTS = {}


def getCurrentContext():
    """Returns current context."""
    return CONTEXTS[-1]


def getContexts():
    """Returns all contexts, base context first."""
    return CONTEXTS


def addContext(name):
    """Pushes a new run context."""
    CONTEXTS.append(Context(name))
    return CONTEXTS[-1]


def popContext():
    """Pops last run context. The base context is never popped."""
    if len(CONTEXTS) == 1:
        raise ValueError("Cannot pop the base context")
    context = CONTEXTS.pop()
    if isDevTest():
        addOldContext(context.name, context)
    return context


class Context():
    """Class registering a context of execution (objects, stage timings, warnings, failures)."""
    _name = None
    _timings = None
    _objects = None
    _warnings = None
    _failures = None

    def __init__(self, name):
        self._name = name
        self._timings = {}
        self._objects = []
        self._warnings = []
        self._failures = []

    @property
    def name(self):
        """Returns the name of the context (usually the input path)."""
        return self._name

    def addTiming(self, stage, seconds):
        """Accumulates wall-clock time spent in a stage."""
        self._timings[stage] = self._timings.get(stage, 0.0) + seconds

    @property
    def timings(self) -> dict:
        """Returns accumulated stage timings in seconds."""
        return self._timings

    def addObject(self, record):
        """Registers the result record of one processed object."""
        self._objects += [record]

    @property
    def objects(self) -> list:
        """Returns the result records of processed objects."""
        return self._objects

    def addWarning(self, message):
        """Registers a warning."""
        self._warnings += [message]

    @property
    def warnings(self) -> list:
        """Returns warnings raised during the run."""
        return self._warnings

    def addFailure(self, message):
        """Registers an object failure."""
        self._failures += [message]

    @property
    def failures(self) -> list:
        """Returns object failures of the run."""
        return self._failures

    def clear(self):
        """Clears everything registered in the context."""
        self._timings = {}
        self._objects = []
        self._warnings = []
        self._failures = []


CONTEXTS = deque()
CONTEXTS.append(Context(None))
DEV_OLD_CONTEXTS = {}
