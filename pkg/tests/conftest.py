import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cornerwave.geometry import Polygon  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

# the triangle used for the convergence studies (vertices in tests/fixtures/triangle.json)
TRIANGLE = np.array([[0.0, 0.0], [2.5, 0.0], [0.8, 1.9]])
TRIANGLE_K = 7.77 + 1e-6j
TRIANGLE_PHI = 7 * np.pi / 4

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def square():
    return Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


@pytest.fixture(scope="session")
def triangle():
    return Polygon(TRIANGLE)


@pytest.fixture(scope="session")
def fixture_path():
    def path(name):
        return os.path.join(FIXTURES, name)

    return path


@pytest.fixture
def report(request):
    """Record one acceptance line and echo it to the terminal immediately."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(line):
        ACCEPTANCE_LINES.append(line)
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line, flush=True)
        else:
            print(line, flush=True)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
