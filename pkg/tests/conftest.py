import numpy as np
import pytest

from nocspose.camera import CameraIntrinsics
from nocspose.mesh import normalize_to_nocs
from nocspose.synthetic import make_box, make_l_block


@pytest.fixture(scope="session")
def cam():
    return CameraIntrinsics(500.0, 500.0, 320.0, 240.0, 640, 480)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def l_block():
    return make_l_block()


@pytest.fixture(scope="session")
def l_block_nocs(l_block):
    return normalize_to_nocs(l_block)


@pytest.fixture(scope="session")
def box_nocs():
    return normalize_to_nocs(make_box())



ACCEPTANCE_RESULTS = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_RESULTS[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[n])
