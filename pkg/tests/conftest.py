import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import EX1_A, EX1_C  # noqa: E402

from distobs.jointobs import SystemModel  # noqa: E402
from distobs.scenarios import example_config  # noqa: E402
from distobs.topology import Digraph, Periodic, laplacian_set  # noqa: E402

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def ex1_model():
    return SystemModel(EX1_A, tuple(np.array(c, dtype=float) for c in EX1_C))


@pytest.fixture(scope="session")
def ex1_graphs():
    e = lambda *pairs: Digraph.from_edges(5, [(a - 1, b - 1) for a, b in pairs])  # noqa: E731
    return [e((2, 5), (5, 2)), e((3, 2), (1, 3)), e((5, 3), (4, 1)), e((3, 4))]


@pytest.fixture(scope="session")
def ex1_law():
    return Periodic(0.1, (0.25, 0.25, 0.25, 0.25))


@pytest.fixture(scope="session")
def ex1_lapset(ex1_graphs, ex1_law):
    return laplacian_set(ex1_graphs, law=ex1_law)


@pytest.fixture(scope="session")
def ex1_config():
    return example_config(1)


@pytest.fixture(scope="session")
def ex1_bank(ex1_config):
    from distobs.simulate import build_banks
    return build_banks(ex1_config)[0][2]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
