from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_criteria = {}


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / name


@pytest.fixture
def criterion(request):
    """Mark the acceptance criterion a test certifies; outcome is reported at the end."""

    def mark(number, title):
        _criteria.setdefault(number, {"title": title, "tests": []})["tests"].append(request.node.nodeid)

    return mark


_outcomes = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = all(_outcomes.get(t) == "passed" for t in entry["tests"])
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {entry['title']}")
