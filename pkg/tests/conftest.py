"""Collects the ward tests of this directory so that pytest can run them.

The test modules are written for ward (``@test("...")`` on functions named ``_``).
Each ward test is exposed as one pytest item and run through ward's own runner,
with ward's fixture cache and scoped teardowns.
"""

import importlib
import sys

from pathlib import Path

import pytest

from ward._fixtures import FixtureCache
from ward._testing import COLLECTED_TESTS
from ward.models import Scope
from ward.testing import Test, TestOutcome

_CACHE = FixtureCache()


class WardFailure(Exception):
    """Raised when ward reports a test as failed."""


class WardItem(pytest.Item):
    """A single ward test instance."""

    def __init__(self, *, wardTest, lastInModule, **kwargs):
        super().__init__(**kwargs)
        self.wardTest = wardTest
        self.lastInModule = lastInModule

    def runtest(self):
        try:
            result = self.wardTest.run(_CACHE)
            _CACHE.teardown_fixtures_for_scope(Scope.Test, scope_key=self.wardTest.id, capture_output=True)
        finally:
            if self.lastInModule:
                _CACHE.teardown_fixtures_for_scope(Scope.Module, scope_key=self.wardTest.path, capture_output=True)
        if result.outcome == TestOutcome.SKIP:
            pytest.skip(result.message or "skipped by ward")
        if result.outcome == TestOutcome.XFAIL:
            pytest.xfail(str(result.error))
        if result.outcome not in (TestOutcome.PASS, TestOutcome.XPASS):
            if result.error is not None:
                raise result.error
            raise WardFailure(result.message)

    def reportinfo(self):
        return self.path, self.wardTest.line_number, self.wardTest.description


class WardModule(pytest.Module):
    """A test module whose tests are registered by ward."""

    def _getobj(self):
        # ward only registers tests of modules imported under their bare name, as ward itself does
        directory = str(self.path.parent)
        if directory not in sys.path:
            sys.path.insert(0, directory)
        return importlib.import_module(self.path.stem)

    def collect(self):
        module = self.obj
        path = Path(module.__file__).absolute()
        tests = []
        for fn in COLLECTED_TESTS[path]:
            meta = fn.ward_meta
            test = Test(fn=fn, module_name=module.__name__, marker=meta.marker,
                        description=meta.description or "", capture_output=True, tags=meta.tags or [])
            tests.extend(test.get_parameterised_instances())
        for index, test in enumerate(tests):
            name = f"{test.line_number}: {test.description}"
            yield WardItem.from_parent(self, name=name, wardTest=test, lastInModule=index == len(tests) - 1)


def pytest_pycollect_makemodule(module_path, parent):
    return WardModule.from_parent(parent, path=module_path)


def pytest_sessionfinish(session):
    _CACHE.teardown_global_fixtures(capture_output=True)
