import math

import pytest

from caustic_forge.oval import Ellipse, PerturbedEllipse, SuperEllipse4, make_oval

ELLIPSE_A = math.sqrt(5.0) / 2.0  # 4x^2/5 + y^2 = 1

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def circle_half():
    """Unit circle with the source at (0.5, 0)."""
    return make_oval(Ellipse(1.0, 1.0), (0.5, 0.0))


@pytest.fixture(scope="session")
def off_ellipse():
    return make_oval(Ellipse(ELLIPSE_A, 1.0), (0.6, 0.2))


@pytest.fixture(scope="session")
def quartic():
    return make_oval(SuperEllipse4(), (0.6, 0.4))


@pytest.fixture(scope="session")
def perturbed():
    return make_oval(PerturbedEllipse(0.5, 0.25), (0.5, 0.3))


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
