import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cellular_ia.beamforming import design
from cellular_ia.channels import sample_channels
from cellular_ia.graph import build_graph
from cellular_ia.order import EdgeSelector, order_pi_star, orient_edges

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# filled by test_acceptance, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@functools.lru_cache(maxsize=None)
def graph(r: int, include_intra: bool = True):
    return build_graph(r, include_intra)


@functools.lru_cache(maxsize=None)
def raster_edges(r: int):
    g = graph(r)
    return orient_edges(g, order_pi_star(g), EdgeSelector.OUT)


@functools.lru_cache(maxsize=None)
def designed(r: int, M: int, seed: int):
    """(graph, channels, beamformers) for one seed, cached across tests."""
    g = graph(r)
    ch = sample_channels(g, M, seed)
    return g, ch, design(g, raster_edges(r), ch, seed=seed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
