"""Receding-horizon LQR nudging of individual resistivity.

Each non-adopter's threshold follows ``rho(t+1) = rho(t) + b * u(t)`` and is
steered toward a target: the seed share of its neighbourhood credibility.
The per-agent problems are scalar and decoupled, so the optimal input is a
proportional law ``u = kappa * (rho - target)`` whose gain comes from a
backward Riccati recursion over the horizon. Only the first input is
applied before the problem is re-solved at the next step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cascade import THRESHOLD_TOL, as_mask, influence_ratios
from .epistemics import Agent, CredibilityMatrix, delta_matrix
from .errors import EmptySeedSet, IsSeed, NonPositiveWeights
from .network import Graph

__all__ = [
    "PolicyParams",
    "ControlledTrajectory",
    "individual_target",
    "individual_targets",
    "riccati_schedule",
    "riccati_gain",
    "control_input",
    "input_decomposition",
    "neighbour_split",
    "lemma2_condition",
    "receding_horizon_run",
]


@dataclass(frozen=True)
class PolicyParams:
    omega_rho: float = 1.0
    omega_u: float = 1.0
    horizon: int = 10
    t_max: int = 200
    track_adopters: bool = False

    def validate(self):
        if not (self.omega_rho > 0 and self.omega_u > 0):
            raise NonPositiveWeights(
                f"weights must be strictly positive (omega_rho={self.omega_rho}, omega_u={self.omega_u})"
            )
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        if int(self.t_max) != self.t_max or self.t_max < 0:
            raise ValueError(f"t_max must be a non-negative integer, got {self.t_max}")


@dataclass
class ControlledTrajectory:
    """Closed-loop record.

    Row ``t`` of ``adopted`` and ``rho_u`` is the state at time ``t``; row
    ``t`` of ``inputs`` and ``gains`` is what was applied from that state.
    The last row of ``inputs`` is all zeros (no input leaves the terminal
    state). ``targets`` is NaN for seeds.
    """

    adopted: np.ndarray
    rho_u: np.ndarray
    inputs: np.ndarray
    gains: np.ndarray
    targets: np.ndarray
    seeds: frozenset
    switching_sets: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.adopted.shape[1]

    @property
    def final_time(self) -> int:
        return self.adopted.shape[0] - 1

    @property
    def t_star_star(self) -> int | None:
        full = np.flatnonzero(self.adopted.all(axis=1))
        return int(full[0]) if full.size else None

    def __len__(self):
        return self.adopted.shape[0]


def _seed_mask(n, seeds) -> np.ndarray:
    mask = as_mask(n, seeds)
    if not mask.any():
        raise EmptySeedSet("the seed set must be non-empty")
    return mask


def individual_targets(net: Graph, matrix: CredibilityMatrix, seeds) -> np.ndarray:
    """Targets for every agent; NaN for seeds."""
    mask = _seed_mask(net.n, seeds)
    t = influence_ratios(net, matrix, mask)
    t[mask] = np.nan
    return t


def individual_target(net: Graph, matrix: CredibilityMatrix, seeds, x: int) -> float:
    mask = _seed_mask(net.n, seeds)
    if mask[x]:
        raise IsSeed(f"agent {x} is a seed and has no target")
    return float(influence_ratios(net, matrix, mask)[x])


def riccati_schedule(b: float, omega_rho: float, omega_u: float, horizon: int):
    """Backward recursion over the horizon with a frozen tracking weight.

    Returns ``(gains, cost_to_go)`` with ``gains[tau]`` for ``tau < T`` and
    ``cost_to_go[tau]`` for ``tau <= T``; the terminal cost equals the
    tracking weight.
    """
    if omega_u <= 0:
        raise NonPositiveWeights(f"omega_u must be positive, got {omega_u}")
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    p = np.empty(horizon + 1)
    k = np.empty(horizon)
    p[horizon] = omega_rho
    for tau in range(horizon - 1, -1, -1):
        nxt = p[tau + 1]
        den = omega_u + nxt * b * b
        k[tau] = -b * nxt / den
        p[tau] = omega_rho + nxt - (b * nxt) ** 2 / den
    return k, p


@lru_cache(maxsize=1024)
def _cached_gain(b, omega_rho, omega_u, horizon):
    k, p = riccati_schedule(b, omega_rho, omega_u, horizon)
    return float(k[0]), tuple(p.tolist())


def riccati_gain(b: float, omega_rho: float, omega_u: float, horizon: int):
    """First gain of the schedule and the cost-to-go sequence."""
    gain, p = _cached_gain(float(b), float(omega_rho), float(omega_u), int(horizon))
    return gain, np.array(p)


def control_input(gain: float, rho_u: float, rho_bar: float) -> float:
    return gain * (rho_u - rho_bar)


def input_decomposition(net: Graph, matrix: CredibilityMatrix, seeds, gain: float, rho_u: float, x: int):
    """Split the input into a predisposition part and an epistemic part.

    ``c1 = gain * (rho_u - 1)``; the epistemic part is ``gain`` times the
    non-seed share of the neighbourhood credibility. They sum to the input.
    """
    target = individual_target(net, matrix, seeds, x)
    mask = as_mask(net.n, seeds)
    nbrs = sorted(net.neighbors(x))
    den = sum(matrix.gamma[y, x] for y in nbrs)
    rest = sum(matrix.gamma[y, x] for y in nbrs if not mask[y])
    share = rest / den if den > 0 else 1.0 - target
    return gain * (rho_u - 1.0), gain * share


def neighbour_split(net: Graph, matrix: CredibilityMatrix, agents: Sequence[Agent], reference, x: int):
    """``(r_alpha, r_beta, delta_alpha, delta_beta)`` for agent ``x``.

    Alpha are the neighbours inside ``reference``, beta the rest.
    """
    ref = as_mask(net.n, reference)
    nb = as_mask(net.n, net.neighbors(x))
    r = np.array([a.reliability for a in agents])
    d = delta_matrix(matrix, agents)[:, x]
    alpha, beta = nb & ref, nb & ~ref
    return float(r[alpha].sum()), float(r[beta].sum()), float(d[alpha].sum()), float(d[beta].sum())


def lemma2_condition(net: Graph, matrix: CredibilityMatrix, agents: Sequence[Agent], seeds, x: int) -> bool:
    """True when bias shrinks ``x``'s input relative to the fair network.

    Strict: ``delta_beta * r_alpha > delta_alpha * r_beta`` with the split
    taken against the seed set.
    """
    r_a, r_b, d_a, d_b = neighbour_split(net, matrix, agents, seeds, x)
    return bool(d_b * r_a > d_a * r_b)


def receding_horizon_run(
    net: Graph,
    matrix: CredibilityMatrix,
    agents: Sequence[Agent],
    seeds,
    params: PolicyParams,
) -> ControlledTrajectory:
    """Closed-loop cascade under the receding-horizon LQR policy.

    Each step: weights from the current adoption state, gains per
    non-adopter, input applied to the threshold (clamped to [0, 1]), and
    the cascade advanced using the thresholds of the current step. Stops at
    full adoption or after ``params.t_max`` steps.
    """
    params.validate()
    n = net.n
    seed_mask = _seed_mask(n, seeds)
    b = np.array([a.responsiveness for a in agents], dtype=float)
    rho = np.array([a.rho0 for a in agents], dtype=float)
    targets = individual_targets(net, matrix, seed_mask)
    adopted = seed_mask.copy()

    hist_a, hist_rho, hist_u, hist_k, switching = [], [], [], [], []
    t = 0
    while True:
        if params.track_adopters:
            live = influence_ratios(net, matrix, adopted)
            tgt = np.where(seed_mask, np.nan, live)
        else:
            tgt = targets
        kappa = np.zeros(n)
        for x in np.flatnonzero(~adopted):
            kappa[x], _ = riccati_gain(b[x], params.omega_rho, params.omega_u, params.horizon)
        u = np.zeros(n)
        active = ~adopted
        u[active] = kappa[active] * (rho[active] - tgt[active])

        hist_a.append(adopted.copy())
        hist_rho.append(rho.copy())
        if adopted.all() or t >= params.t_max:
            hist_u.append(np.zeros(n))
            hist_k.append(np.zeros(n))
            break
        hist_u.append(u)
        hist_k.append(kappa)

        ratios = influence_ratios(net, matrix, adopted)
        switched = ~adopted & (ratios >= rho - THRESHOLD_TOL)
        rho = np.clip(rho + b * u, 0.0, 1.0)
        adopted = adopted | switched
        switching.append(frozenset(np.flatnonzero(switched).tolist()))
        t += 1

    return ControlledTrajectory(
        adopted=np.array(hist_a),
        rho_u=np.array(hist_rho),
        inputs=np.array(hist_u),
        gains=np.array(hist_k),
        targets=targets,
        seeds=frozenset(np.flatnonzero(seed_mask).tolist()),
        switching_sets=switching,
    )
