from __future__ import annotations

import cmath
from functools import lru_cache

import pytest

from newtongraph.complex_poly import RootSpec, newton_map_from_roots
from newtongraph.newton_graph import newton_graph_level

ACCEPTANCE_LINES = {}


def roots_of_unity(d, order=None):
    roots = [cmath.exp(2j * cmath.pi * k / d) for k in range(d)]
    if order is not None:
        roots = [roots[i] for i in order]
    return roots


def unity_map(d, order=None):
    return newton_map_from_roots(RootSpec.simple(roots_of_unity(d, order)))


@lru_cache(maxsize=None)
def pipeline(d, order=None):
    return newton_graph_level(unity_map(d, order))


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""

    def record(number, title, detail=""):
        ACCEPTANCE_LINES[number] = (title, detail, request.node)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        title, detail, node = ACCEPTANCE_LINES[number]
        rep = getattr(node, "rep_call", None)
        status = "PASS" if rep is not None and rep.passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  {detail}".rstrip())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
