import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracture import parse_instance  # noqa: E402

DATA = Path(__file__).parent / "data"

_criteria = {}


@pytest.fixture
def figure1():
    return parse_instance((DATA / "figure1.json").read_text())


@pytest.fixture
def figure1_path():
    return DATA / "figure1.json"


def pytest_runtest_logreport(report):
    match = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match or report.when not in ("setup", "call"):
        return
    key = int(match.group(1))
    if report.when == "setup" and not report.failed:
        return
    ok = report.passed
    prev = _criteria.get(key)
    if prev is None:
        _criteria[key] = (match.group(2), ok, report.duration)
    else:
        _criteria[key] = (prev[0], prev[1] and ok, prev[2] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        name, ok, seconds = _criteria[key]
        terminalreporter.write_line(
            f"criterion {key}: {'PASS' if ok else 'FAIL'}  {name.replace('_', ' ')}  ({seconds:.1f} s)")
