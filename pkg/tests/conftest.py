from __future__ import annotations

import math
import sys

import numpy as np
import pytest

from qwalknet.netgraph import augment_self_loops, grid_topology

R = 1 / math.sqrt(2)
GRID_PATH = (6, 7, 12, 17, 18)

# BFS-valid spanning tree of the 5x5 grid rooted at node 5: 7 leaves, height 7
GRID_TREE_PARENTS = {
    0: 5, 1: 0, 2: 1, 3: 2, 4: 3, 6: 5, 7: 6, 8: 7, 9: 8, 10: 5, 11: 6, 12: 7, 13: 8, 14: 9,
    15: 10, 16: 11, 17: 12, 18: 13, 19: 18, 20: 15, 21: 16, 22: 17, 23: 18, 24: 19,
}


@pytest.fixture
def grid5():
    return augment_self_loops(grid_topology(5, 5))


@pytest.fixture
def grid5x2():
    return augment_self_loops(grid_topology(5, 5, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_qubit(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=4)
    v = np.array([complex(z[0], z[1]), complex(z[2], z[3])])
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
