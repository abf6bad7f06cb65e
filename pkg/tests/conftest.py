import re

import pytest

from pmuplan.cases import load_case


@pytest.fixture(scope="session")
def ieee14():
    return load_case("ieee14")


@pytest.fixture(scope="session")
def ieee118():
    return load_case("ieee118")


# ---- acceptance summary -----------------------------------------------------
# Tests named test_criterion_<n>_* report one PASS/FAIL line each at the end
# of the run, so the gate status is readable without scrolling the log.

_CRITERION = re.compile(r"test_criterion_(\d+)")

_LABELS = {
    1: "exhaustive knapsack sweep reproduces the six-row reference table",
    2: "greedy knapsack sweep reproduces the five-row reference table",
    3: "sensitivity summary rows match reference sums and averages",
    4: "ten-stage plan comparison matches the reference stage table",
    5: "14-bus audit tally is 78 submodular / 12 supermodular / 0 ties",
    6: "combination counting formula agrees with the triple stream",
    7: "118-bus audit of 6480 triples completes within five minutes",
    8: "linear-algebra identities hold on random placements",
    9: "exhaustive plan dominates greedy on random configurations",
}

_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    num = int(match.group(1))
    if report.when != "call":
        if report.failed:
            _outcomes[num] = "FAIL (setup error)"
        return
    if hasattr(report, "wasxfail"):
        # documented deviation from the reference values; asserted exactly
        _outcomes[num] = "FAIL (expected, documented)"
    elif report.passed:
        _outcomes[num] = "PASS"
    elif report.skipped:
        _outcomes[num] = "SKIP"
    else:
        _outcomes[num] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        label = _LABELS.get(num, "")
        terminalreporter.write_line(f"CRITERION {num}: {_outcomes[num]} - {label}")
