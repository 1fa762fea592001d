"""Open-loop epistemic linear threshold cascade and steady-state analysis.

A non-adopter ``x`` switches when the credibility mass of its adopting
neighbours, as perceived by ``x``, reaches its resistivity. Adoption is
irreversible and updates are synchronous.

Steady states are characterised through cohesive sets: a set is cohesive
when every member perceives more than ``1 - rho`` of its neighbourhood
credibility inside the set. A set of adopters is a fixed point exactly when
its complement is cohesive, and the final adopter set of a run is the
complement of the largest cohesive subset of the non-seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .epistemics import Agent, CredibilityMatrix, delta_matrix
from .errors import EmptySeedSet
from .network import Graph

__all__ = [
    "THRESHOLD_TOL",
    "CascadeState",
    "Trajectory",
    "InfluenceRatio",
    "as_mask",
    "influence_ratio",
    "influence_ratios",
    "internal_fractions",
    "step",
    "initial_state",
    "simulate",
    "is_cohesive",
    "largest_cohesive_subset",
    "is_fixed_point",
    "final_adopters",
    "transient_condition",
]

# Adoption when ratio >= rho - tol; cohesion when fraction > 1 - rho + tol.
THRESHOLD_TOL = 1e-12


def as_mask(n: int, agents: Iterable[int] | np.ndarray) -> np.ndarray:
    if isinstance(agents, np.ndarray) and agents.dtype == bool:
        if agents.shape != (n,):
            raise ValueError(f"mask of shape {agents.shape}, expected ({n},)")
        return agents.copy()
    mask = np.zeros(n, dtype=bool)
    idx = list(agents)
    if idx:
        mask[idx] = True
    return mask


def _to_set(mask: np.ndarray) -> frozenset:
    return frozenset(np.flatnonzero(mask).tolist())


def _weights(net: Graph, matrix: CredibilityMatrix) -> np.ndarray:
    # w[y, x]: credibility hearer x grants neighbour y; zero off the edge set
    return np.where(net.matrix, matrix.gamma, 0.0)


@dataclass(frozen=True, eq=False)
class CascadeState:
    t: int
    adopted: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        a = np.array(self.adopted, dtype=bool)
        r = np.array(self.thresholds, dtype=float)
        a.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "adopted", a)
        object.__setattr__(self, "thresholds", r)

    @property
    def adopters(self) -> frozenset:
        return _to_set(self.adopted)

    def __eq__(self, other):
        if not isinstance(other, CascadeState):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.adopted, other.adopted)
            and np.array_equal(self.thresholds, other.thresholds)
        )


@dataclass(frozen=True)
class InfluenceRatio:
    x: int
    value: float
    numerator: float
    denominator: float


@dataclass
class Trajectory:
    """Open-loop run: one state per time step plus per-step diagnostics."""

    states: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    switching_sets: list = field(default_factory=list)
    t_fixed: int | None = None

    @property
    def s_star_star(self) -> frozenset:
        return self.states[-1].adopters

    def __len__(self):
        return len(self.states)


def influence_ratios(net: Graph, matrix: CredibilityMatrix, adopted) -> np.ndarray:
    """Vector of adopter-credibility ratios for every agent (0 on empty mass)."""
    w = _weights(net, matrix)
    a = as_mask(net.n, adopted).astype(float)
    num = a @ w
    den = w.sum(axis=0)
    out = np.zeros(net.n)
    np.divide(num, den, out=out, where=den > 0)
    return out


def influence_ratio(net: Graph, matrix: CredibilityMatrix, state, x: int) -> InfluenceRatio:
    adopted = state.adopted if isinstance(state, CascadeState) else as_mask(net.n, state)
    nbrs = sorted(net.neighbors(x))
    num = float(sum(matrix.gamma[y, x] for y in nbrs if adopted[y]))
    den = float(sum(matrix.gamma[y, x] for y in nbrs))
    return InfluenceRatio(x, num / den if den > 0 else 0.0, num, den)


def internal_fractions(net: Graph, matrix: CredibilityMatrix, members) -> np.ndarray:
    """Share of each agent's neighbourhood credibility lying inside ``members``.

    An agent with no credibility mass at all is epistemically isolated and
    gets fraction 1, the complement of its zero influence ratio.
    """
    w = _weights(net, matrix)
    m = as_mask(net.n, members).astype(float)
    num = m @ w
    den = w.sum(axis=0)
    out = np.ones(net.n)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _switches(net, matrix, adopted: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    ratios = influence_ratios(net, matrix, adopted)
    return ~adopted & (ratios >= thresholds - THRESHOLD_TOL)


def step(net: Graph, matrix: CredibilityMatrix, state: CascadeState) -> CascadeState:
    new = state.adopted | _switches(net, matrix, state.adopted, state.thresholds)
    return CascadeState(state.t + 1, new, state.thresholds)


def initial_state(n: int, seeds, thresholds) -> CascadeState:
    mask = as_mask(n, seeds)
    if not mask.any():
        raise EmptySeedSet("the seed set must be non-empty")
    return CascadeState(0, mask, np.broadcast_to(np.asarray(thresholds, dtype=float), (n,)))


def simulate(net: Graph, matrix: CredibilityMatrix, thresholds, seeds, max_t: int | None = None) -> Trajectory:
    """Iterate :func:`step` until no agent switches or ``max_t`` steps ran.

    ``t_fixed`` is the time of the last recorded state when it is a fixed
    point, ``None`` if the run was cut off first. Without a cutoff the run
    ends after at most ``n`` steps.
    """
    state = initial_state(net.n, seeds, thresholds)
    traj = Trajectory()
    limit = net.n if max_t is None else max_t
    while True:
        traj.states.append(state)
        traj.ratios.append(influence_ratios(net, matrix, state.adopted))
        nxt = step(net, matrix, state)
        switched = nxt.adopted & ~state.adopted
        if not switched.any():
            traj.t_fixed = state.t
            return traj
        if state.t >= limit:
            return traj
        traj.switching_sets.append(_to_set(switched))
        state = nxt


def is_cohesive(net: Graph, matrix: CredibilityMatrix, thresholds, members) -> bool:
    mask = as_mask(net.n, members)
    if not mask.any():
        return True
    rho = np.broadcast_to(np.asarray(thresholds, dtype=float), (net.n,))
    frac = internal_fractions(net, matrix, mask)
    return bool(np.all(frac[mask] > 1.0 - rho[mask] + THRESHOLD_TOL))


def largest_cohesive_subset(net: Graph, matrix: CredibilityMatrix, thresholds, base, order=None) -> frozenset:
    """Peel violators off ``base`` until the remainder is cohesive.

    By default all violators are removed each round. Passing ``order`` (a
    permutation of agent ids) instead removes one violator at a time, the
    first in that order; the result is the same either way.
    """
    rho = np.broadcast_to(np.asarray(thresholds, dtype=float), (net.n,))
    mask = as_mask(net.n, base)
    while mask.any():
        bad = mask & ~(internal_fractions(net, matrix, mask) > 1.0 - rho + THRESHOLD_TOL)
        if not bad.any():
            break
        if order is None:
            mask &= ~bad
        else:
            mask[next(x for x in order if bad[x])] = False
    return _to_set(mask)


def is_fixed_point(net: Graph, matrix: CredibilityMatrix, thresholds, adopters, check: bool = __debug__) -> bool:
    """True when one step from ``adopters`` switches nobody.

    With ``check`` the answer is compared against cohesiveness of the
    complement.
    """
    mask = as_mask(net.n, adopters)
    rho = np.broadcast_to(np.asarray(thresholds, dtype=float), (net.n,))
    fixed = not _switches(net, matrix, mask, rho).any()
    if check:
        cohesive = is_cohesive(net, matrix, rho, ~mask)
        if cohesive != fixed:
            raise AssertionError(
                f"fixed-point test ({fixed}) disagrees with complement cohesion ({cohesive})"
            )
    return fixed


def final_adopters(net: Graph, matrix: CredibilityMatrix, thresholds, seeds) -> frozenset:
    mask = as_mask(net.n, seeds)
    if not mask.any():
        raise EmptySeedSet("the seed set must be non-empty")
    core = largest_cohesive_subset(net, matrix, thresholds, ~mask)
    return frozenset(range(net.n)) - core


def transient_condition(
    net: Graph,
    matrix: CredibilityMatrix,
    agents: Sequence[Agent],
    fair_next_adopters,
    state,
) -> dict:
    """One-step check that bias does not slow the cascade, per agent.

    For each candidate ``x`` the neighbourhood is split into adopters
    (alpha) and non-adopters (beta) at the current state; the flag is
    ``r_alpha * delta_beta >= r_beta * delta_alpha``.
    """
    adopted = state.adopted if isinstance(state, CascadeState) else as_mask(net.n, state)
    r = np.array([a.reliability for a in agents])
    d = delta_matrix(matrix, agents)
    out = {}
    for x in sorted(fair_next_adopters):
        nb = as_mask(net.n, net.neighbors(x))
        alpha, beta = nb & adopted, nb & ~adopted
        r_a, r_b = r[alpha].sum(), r[beta].sum()
        d_a, d_b = d[alpha, x].sum(), d[beta, x].sum()
        out[x] = bool(r_a * d_b >= r_b * d_a)
    return out
