import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pottsgate.landscape import LandscapeIndex  # noqa: E402
from pottsgate.lattice import TorusLattice  # noqa: E402


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def criteria(request):
    """Collects one result line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_CRITERIA, {})


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])


@pytest.fixture(scope="session")
def lat34():
    return TorusLattice(3, 4)


@pytest.fixture(scope="session")
def lat45():
    return TorusLattice(4, 5)


@pytest.fixture(scope="session")
def idx234(lat34):
    return LandscapeIndex(2, lat34)


@pytest.fixture(scope="session")
def idx334(lat34):
    return LandscapeIndex(3, lat34)


@pytest.fixture(scope="session")
def idx245(lat45):
    return LandscapeIndex(2, lat45)


@pytest.fixture
def degenerate_lattice():
    def make(K, L):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return TorusLattice(K, L, degenerate=True)

    return make
