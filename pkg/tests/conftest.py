import pytest

from rmtrace.haar import seeded_rng

_criteria = {}


@pytest.fixture
def rng():
    return seeded_rng(20111, 0)


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        marker = _markers.get(report.nodeid)
        if marker is not None:
            _criteria[marker] = report.outcome


_markers = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (num, desc), outcome in sorted(_criteria.items()):
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {desc}")
