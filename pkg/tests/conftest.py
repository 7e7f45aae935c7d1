import numpy as np
import pytest
from hypothesis import settings, strategies as st

from shaken.graph import InteractionGraph, build_doubling, orient

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@st.composite
def small_doublings(draw, max_free=4, max_frozen=1):
    """Random doubling graph with a seeded orientation, small enough to enumerate."""
    n_free = draw(st.integers(1, max_free))
    n_frozen = draw(st.integers(0, max_frozen))
    n = n_free + n_frozen
    coupling = st.floats(-2, 2, allow_nan=False)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                edges.append((i, j, draw(coupling)))
    lam = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=n, max_size=n))
    frozen_sites = draw(st.permutations(range(n)))[:n_frozen]
    frozen = {x: draw(st.sampled_from([-1, 1])) for x in frozen_sites}
    g = InteractionGraph(n, edges, lam, frozen)
    o = orient(g, seed=draw(st.integers(0, 2**32 - 1)))
    return build_doubling(g, o, draw(st.floats(0, 3, allow_nan=False)))


@pytest.fixture
def triangle():
    """Cyclic triangle with unit couplings, used across modules."""
    g = InteractionGraph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
