from pathlib import Path

import numpy as np
import pytest

from epicascade.epistemics import Agent, CredibilityMatrix
from epicascade.network import build_graph

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def star():
    """Centre 0 with leaves 1 and 2; agent 1 seeds the cascade."""
    return build_graph(3, [(0, 1), (0, 2)])


@pytest.fixture
def star_thresholds():
    return np.array([0.5, 0.5, 0.4])


@pytest.fixture
def fair_star_matrix():
    return CredibilityMatrix.uniform(3, 1.0)


@pytest.fixture
def biased_star_matrix():
    g = np.ones((3, 3))
    g[1, 0], g[2, 0] = 0.4, 0.6
    return CredibilityMatrix(g)


@pytest.fixture
def star_agents():
    return [Agent(0, rho0=0.5), Agent(1, rho0=0.5, is_seed=True), Agent(2, rho0=0.4)]
