"""Shared fixtures and the per-criterion acceptance report."""

from collections import defaultdict

import pytest

_outcomes = defaultdict(list)
_details = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the test's acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        if marker is not None:
            _details[marker.args[0]].append(text)
        print(text)

    return add


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key in report.keywords:
        if key.startswith("criterion_"):
            _outcomes[int(key.split("_")[1])].append((report.nodeid, report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.keywords[f"criterion_{marker.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        ok = all(outcome == "passed" for _, outcome in results)
        status = "PASS" if ok else "FAIL"
        extra = "; ".join(_details.get(n, []))
        tr.write_line(f"criterion {n:2d}: {status} ({len(results)} tests){': ' + extra if extra else ''}")
