"""Reliability, relational credibility and epistemic fairness.

``gamma[x, y]`` is how much hearer ``y`` believes speaker ``x``. It is the
product of the speaker's reliability, a discrimination factor halving per
discriminated group the speaker belongs to, and a relational factor driven
by the groups speaker and hearer share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import OverrideOutOfRange

__all__ = [
    "EXCESS",
    "DEFICIT",
    "FAIRNESS_TOL",
    "Agent",
    "CredibilityMatrix",
    "discrimination_factor",
    "relational_factor",
    "relational_credibility",
    "build_credibility_matrix",
    "credibility_delta",
    "delta_matrix",
    "is_epistemically_fair",
]

# Shared groups restore credibility (eta = 2**shared). Default.
EXCESS = "excess"
# Shared groups compound the penalty (eta = 0.5**shared).
DEFICIT = "deficit"
MODES = (EXCESS, DEFICIT)

FAIRNESS_TOL = 1e-12


@dataclass(frozen=True)
class Agent:
    id: int
    groups: frozenset = frozenset()
    reliability: float = 1.0
    rho0: float = 0.5
    responsiveness: float = -1.0
    is_seed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "groups", frozenset(self.groups))
        if not 0.0 <= self.reliability <= 1.0:
            raise ValueError(f"agent {self.id}: reliability {self.reliability} outside [0, 1]")
        if not 0.0 <= self.rho0 <= 1.0:
            raise ValueError(f"agent {self.id}: resistivity {self.rho0} outside [0, 1]")
        if not -1.0 <= self.responsiveness <= 1.0:
            raise ValueError(f"agent {self.id}: responsiveness {self.responsiveness} outside [-1, 1]")
        if not self.is_seed and self.responsiveness == 0.0:
            raise ValueError(f"agent {self.id}: non-seed responsiveness must be nonzero")


@dataclass(frozen=True, eq=False)
class CredibilityMatrix:
    """Read-only ``n x n`` credibility grid; the diagonal is unused (zero)."""

    gamma: np.ndarray = field(repr=False)
    mode: str = EXCESS

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("credibility matrix must be square")
        np.fill_diagonal(g, 0.0)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    def __getitem__(self, pair):
        return float(self.gamma[pair])

    def __eq__(self, other):
        if not isinstance(other, CredibilityMatrix):
            return NotImplemented
        return self.mode == other.mode and np.array_equal(self.gamma, other.gamma)

    @classmethod
    def uniform(cls, n: int, value: float = 1.0) -> "CredibilityMatrix":
        return cls(np.full((n, n), float(value)))


def discrimination_factor(groups: Iterable) -> float:
    return 0.5 ** len(frozenset(groups))


def relational_factor(groups_x: Iterable, groups_y: Iterable, mode: str = EXCESS) -> float:
    shared = len(frozenset(groups_x) & frozenset(groups_y))
    if mode == EXCESS:
        return 2.0**shared
    if mode == DEFICIT:
        return 0.5**shared
    raise ValueError(f"unknown credibility mode {mode!r}")


def relational_credibility(agent_x: Agent, agent_y: Agent, mode: str = EXCESS) -> float:
    """Credibility hearer ``agent_y`` grants speaker ``agent_x``.

    Both factors are powers of two, so the product with the reliability is
    exact.
    """
    phi = discrimination_factor(agent_x.groups)
    eta = relational_factor(agent_x.groups, agent_y.groups, mode)
    return phi * eta * agent_x.reliability


def build_credibility_matrix(
    agents: Sequence[Agent],
    mode: str = EXCESS,
    overrides: Mapping | None = None,
    pair_modes: Mapping | None = None,
) -> CredibilityMatrix:
    """Fill gamma over all ordered pairs, then apply direct overrides.

    ``overrides`` maps ``(speaker, hearer)`` to a value in [0, 1].
    ``pair_modes`` optionally switches the relational mode for single pairs.
    """
    if not agents:
        raise ValueError("need at least one agent")
    if mode not in MODES:
        raise ValueError(f"unknown credibility mode {mode!r}")
    n = len(agents)
    pair_modes = pair_modes or {}
    g = np.zeros((n, n))
    for x, ax in enumerate(agents):
        for y, ay in enumerate(agents):
            if x != y:
                g[x, y] = relational_credibility(ax, ay, pair_modes.get((x, y), mode))
    for (x, y), v in (overrides or {}).items():
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise OverrideOutOfRange(f"override gamma[{x},{y}] = {v} outside [0, 1]")
        if x == y:
            raise OverrideOutOfRange(f"override on diagonal entry ({x},{x})")
        g[x, y] = v
    return CredibilityMatrix(g, mode)


def _reliability(agents: Sequence[Agent]) -> np.ndarray:
    return np.array([a.reliability for a in agents], dtype=float)


def delta_matrix(matrix: CredibilityMatrix, agents: Sequence[Agent]) -> np.ndarray:
    """All deficits/excesses ``r[x] - gamma[x, y]`` (diagonal set to zero)."""
    d = _reliability(agents)[:, None] - matrix.gamma
    np.fill_diagonal(d, 0.0)
    return d


def credibility_delta(matrix: CredibilityMatrix, agents: Sequence[Agent], x: int, y: int) -> float:
    """Positive is a deficit, negative an excess, zero a fair pair."""
    return agents[x].reliability - matrix[x, y]


def is_epistemically_fair(matrix: CredibilityMatrix, agents: Sequence[Agent], tol: float = FAIRNESS_TOL) -> bool:
    return bool(np.all(np.abs(delta_matrix(matrix, agents)) <= tol))
