import numpy as np
import pytest

from dislog.datasets import ingest
from dislog.kernels import KernelSpec

# one representative setting per family
KERNELS = [
    KernelSpec("normal"),
    KernelSpec("student-t", 4),
    KernelSpec("power-exponential", -0.5),
    KernelSpec("power-exponential", 0.5),
    KernelSpec("contaminated-normal", (0.5, 0.5)),
    KernelSpec("extended-bs", 0.5),
    KernelSpec("extended-bs-t", (0.5, 4)),
]

# three extra-parameter settings per family
KERNEL_GRID = {
    "normal": [()],
    "student-t": [(1.0,), (4.0,), (30.0,)],
    "power-exponential": [(-0.7,), (0.0,), (0.9,)],
    "contaminated-normal": [(0.1, 0.2), (0.5, 0.5), (0.9, 0.7)],
    "extended-bs": [(0.3,), (1.0,), (2.5,)],
    "extended-bs-t": [(0.5, 1.0), (1.0, 4.0), (2.0, 20.0)],
}

ALL_KERNELS = [KernelSpec(fam, xi) for fam, xis in KERNEL_GRID.items() for xi in xis]


def kernel_id(kernel):
    return str(kernel)


@pytest.fixture(scope="session")
def computer_breaks():
    return ingest("computer-breaks")


@pytest.fixture(scope="session")
def pain_relief():
    return ingest("pain-relief")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte Carlo checks")


@pytest.fixture(scope="session")
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.__dict__.setdefault("acceptance_lines", {})

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
