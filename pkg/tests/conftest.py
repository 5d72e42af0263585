import re

import pytest

from tetmodal import ChildPlacement, NestingNode, compose_problem

_CRITERIA = {}


@pytest.fixture(scope="session")
def standard():
    return compose_problem(NestingNode())


@pytest.fixture(scope="session")
def nested():
    """The standard primitive with one child at each optimum."""
    root = NestingNode(
        children=(
            ChildPlacement(NestingNode(), "major", rotation=0, scale=0.25),
            ChildPlacement(NestingNode(), "minor", rotation=90, scale=0.25),
        )
    )
    return compose_problem(root)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2).replace("_", " "))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[key] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (n, name), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {n:2d} {status}: {name}")
