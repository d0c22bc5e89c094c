from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coevo.helloworld import fixtures  # noqa: E402
from coevo.model import Repository  # noqa: E402

FIXTURES = fixtures.fixtures_dir()


@pytest.fixture
def graph1():
    return fixtures.metamodel("graph1")


@pytest.fixture
def shapes():
    return fixtures.metamodel("shapes")


@pytest.fixture
def g_a(graph1) -> Repository:
    return fixtures.model("g_a", graph1)


@pytest.fixture
def g_a_json() -> dict:
    return json.loads((FIXTURES / "g_a.model.json").read_text())


# one PASS/FAIL line per acceptance criterion, printed after the run
_criteria: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    failed = call.excinfo is not None and call.when in ("setup", "call")
    ok = _criteria.get(number, (title, True))[1] and not failed
    if call.when == "call" or failed:
        _criteria[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
