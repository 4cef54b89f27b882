import numpy as np
import pytest

from quasistat import ContactPendulum, LiftConfig, LinearSpringPendulum, build_bottom_grid, lift, sample_fibers

# reference parameter set of the contact model
CONTACT_PARAMS = dict(L0=1.0, W0=0.1, mg=10.0, k_min=1.0, k_max=1e4, eps=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def linear():
    return LinearSpringPendulum()


@pytest.fixture(scope="session")
def contact():
    return ContactPendulum(**CONTACT_PARAMS)


@pytest.fixture(scope="session")
def contact_grid(contact):
    """31x31 grid over +-1.5 L0 with diagonals, its fibers and the lifted graph."""
    bottom = build_bottom_grid([(-1.5, 1.5), (-1.5, 1.5)], [31, 31], diagonals=True)
    fibers = sample_fibers(contact, bottom, LiftConfig())
    graph = lift(contact, bottom, LiftConfig(), fibers=fibers)
    return bottom, fibers, graph


def ring_window(system, half_width=1.5):
    """Control box of half-width ``half_width * L0`` around the critical control."""
    cx, cy = system.u_crit
    r = half_width * system.L0
    return [(cx - r, cx + r), (cy - r, cy + r)]


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion; returns the verdict."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
