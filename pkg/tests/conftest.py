import os

import hypothesis
import numpy as np
import pytest

from nesh.game import GameSpec, default_game
from nesh.topology import Topology

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_game(rng: np.random.Generator, n: int) -> GameSpec:
    """A random well-posed quadratic game (M is diagonally dominant)."""
    return GameSpec(rho=rng.uniform(0.5, 3.0, n), x_desired=rng.uniform(-20, 20, n),
                    p0=float(rng.uniform(0.0, 0.3)), q0=float(rng.uniform(-2, 2)))


def random_connected_graph(rng: np.random.Generator, n: int, p_extra: float = 0.3,
                           weighted: bool = True) -> Topology:
    """Random spanning tree plus extra edges, so connectivity holds by construction."""
    adj = np.zeros((n, n))
    order = rng.permutation(n)
    for k in range(1, n):
        i, j = order[k], order[rng.integers(k)]
        adj[i, j] = adj[j, i] = rng.uniform(0.2, 3.0) if weighted else 1.0
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j] == 0 and rng.random() < p_extra:
                adj[i, j] = adj[j, i] = rng.uniform(0.2, 3.0) if weighted else 1.0
    return Topology(adj)


@pytest.fixture
def game():
    return default_game()


@pytest.fixture
def cycle5():
    return Topology.preset("cycle", 5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import SCORECARD
    except ImportError:
        return
    if SCORECARD:
        terminalreporter.section("acceptance criteria")
        for line in SCORECARD:
            terminalreporter.write_line(line)
