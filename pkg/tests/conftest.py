import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hyperflow.fixtures import FIXTURES, fixture_path, load_fixture  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20231)


@pytest.fixture(scope="session")
def doubled():
    return load_fixture("doubled_tet")


@pytest.fixture(scope="session")
def penta():
    return load_fixture("pentachoron")


@pytest.fixture(scope="session")
def torus():
    return load_fixture("torus_cusp")


@pytest.fixture(scope="session", params=FIXTURES)
def complex_(request):
    return load_fixture(request.param)


@pytest.fixture
def fixture_file():
    return lambda name: str(fixture_path(name))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
