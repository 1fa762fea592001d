"""Randomised property suites for the cascade and control results.

Every suite runs ``trials`` independent trials. A trial returns ``None``
or a short tag on success and a :class:`Failure` otherwise; trial ``i`` draws from
``numpy.random.default_rng([rng_seed, i])`` so outcomes do not depend on
how trials are spread across worker processes. A failing trial carries a
replayable counterexample (a scenario file, or a JSON parameter set for
the Riccati suite).
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .cascade import (
    CascadeState,
    final_adopters,
    is_cohesive,
    is_fixed_point,
    largest_cohesive_subset,
    simulate,
    step,
    transient_condition,
)
from .control import (
    control_input,
    individual_target,
    lemma2_condition,
    neighbour_split,
    riccati_gain,
    riccati_schedule,
)
from .epistemics import Agent, CredibilityMatrix
from .network import generate_er_graph
from .scenario import OPEN_LOOP, Scenario, dump_scenario, default_workers

__all__ = [
    "SUITES",
    "Failure",
    "Report",
    "run_suite",
    "random_instance",
    "lqr_oracle_inputs",
    "gain_schedule_inputs",
]

TIE_MARGIN = 1e-9


@dataclass
class Failure:
    trial: int
    message: str
    counterexample: str
    suffix: str = ".json"


@dataclass
class Report:
    suite: str
    trials: int
    rng_seed: int
    failures: list = field(default_factory=list)
    tags: Counter = field(default_factory=Counter)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.suite}: {status} ({self.trials - len(self.failures)}/{self.trials} trials)"


def random_instance(rng, n_min=2, n_max=8, p_range=(0.25, 0.8)):
    """Random connected graph with random credibility, reliability and thresholds.

    Returns ``(scenario, seeds)``. Every off-diagonal credibility entry is an
    explicit override, so the scenario file reproduces the instance exactly.
    """
    n = int(rng.integers(n_min, n_max + 1))
    p = float(rng.uniform(*p_range))
    g = generate_er_graph(n, p, seed=int(rng.integers(2**32)), max_attempts=10_000)
    gamma = rng.uniform(0.0, 1.0, size=(n, n))
    rho = rng.uniform(0.0, 1.0, size=n)
    r = rng.uniform(0.0, 1.0, size=n)
    k = int(rng.integers(1, n + 1)) if n > 1 else 1
    seeds = frozenset(rng.choice(n, size=k, replace=False).tolist())
    sc = _scenario(g, gamma, rho, r, seeds)
    return sc, seeds


def _scenario(g, gamma, rho, r, seeds, label="counterexample", b=None):
    n = g.n
    b = np.full(n, -1.0) if b is None else b
    agents = tuple(Agent(i, frozenset(), float(r[i]), float(rho[i]), float(b[i]), i in seeds) for i in range(n))
    overrides = tuple((x, y, float(gamma[x, y])) for x in range(n) for y in range(n) if x != y)
    return Scenario(agents=agents, edges=tuple(g.edge_list()), overrides=overrides, mode=OPEN_LOOP, label=label)


# ------------------------------------------------- fixed point vs cohesion


def _trial_lemma1(rng_seed, i):
    rng = np.random.default_rng([rng_seed, i])
    sc, _ = random_instance(rng, 2, 8)
    g, m, rho = sc.network, sc.credibility, sc.thresholds
    for bits in itertools.product((False, True), repeat=g.n):
        s = np.array(bits)
        fixed = is_fixed_point(g, m, rho, s, check=False)
        cohesive = is_cohesive(g, m, rho, ~s)
        if fixed != cohesive:
            members = sorted(np.flatnonzero(s).tolist())
            return Failure(i, f"adopters {members}: fixed={fixed} cohesive(complement)={cohesive}", dump_scenario(sc))
    return None


# ------------------------------------------------- steady-state prediction


def _max_cohesive_exhaustive(g, m, rho, base):
    base = sorted(base)
    best = frozenset()
    for k in range(len(base), 0, -1):
        for combo in itertools.combinations(base, k):
            if is_cohesive(g, m, rho, combo):
                return frozenset(combo)
    return best


def _trial_theorem1(rng_seed, i):
    rng = np.random.default_rng([rng_seed, i])
    sc, seeds = random_instance(rng, 3, 40, p_range=(0.1, 0.6))
    g, m, rho = sc.network, sc.credibility, sc.thresholds
    dynamic = simulate(g, m, rho, seeds).s_star_star
    static = final_adopters(g, m, rho, seeds)
    if dynamic != static:
        return Failure(i, f"simulated {sorted(dynamic)} != cohesive-set prediction {sorted(static)}", dump_scenario(sc))
    base = frozenset(range(g.n)) - seeds
    peeled = largest_cohesive_subset(g, m, rho, base)
    order = rng.permutation(g.n).tolist()
    if largest_cohesive_subset(g, m, rho, base, order=order) != peeled:
        return Failure(i, "peeling result depends on removal order", dump_scenario(sc))
    if g.n - len(seeds) <= 12:
        exact = _max_cohesive_exhaustive(g, m, rho, base)
        if exact != peeled:
            return Failure(i, f"peeling {sorted(peeled)} != exhaustive maximum {sorted(exact)}", dump_scenario(sc))
    return None


# ------------------------------------------ one-step containment under bias


def _biased_pair(rng, n_min=3, n_max=14):
    """Fair/biased credibility pair over one graph and one set of agents."""
    n = int(rng.integers(n_min, n_max + 1))
    g = generate_er_graph(n, float(rng.uniform(0.2, 0.7)), seed=int(rng.integers(2**32)), max_attempts=10_000)
    r = rng.uniform(0.05, 1.0, size=n)
    fair = np.tile(r[:, None], (1, n))
    scale = rng.uniform(0.0, 1.0, size=(n, n))
    return g, r, fair, fair * scale


def _trial_prop3(rng_seed, i, max_draws=5000):
    rng = np.random.default_rng([rng_seed, i])
    for _ in range(max_draws):
        g, r, fair, biased = _biased_pair(rng)
        n = g.n
        adopted = rng.random(n) < rng.uniform(0.1, 0.6)
        if not adopted.any() or adopted.all():
            continue
        if rng.random() < 0.5:
            # deficits confined to non-adopting speakers
            biased[adopted, :] = fair[adopted, :]
        rho = rng.uniform(0.0, 1.0, size=n)
        agents = [Agent(x, frozenset(), float(r[x]), float(rho[x]), -1.0, bool(adopted[x])) for x in range(n)]
        mf, mb = CredibilityMatrix(fair), CredibilityMatrix(biased)
        state = CascadeState(0, adopted, rho)
        fair_next = step(g, mf, state).adopted
        newly = frozenset(np.flatnonzero(fair_next & ~adopted).tolist())
        if not newly:
            continue
        flags = transient_condition(g, mb, agents, newly, state)
        if not all(flags.values()):
            continue
        biased_next = step(g, mb, state).adopted
        if np.any(fair_next & ~biased_next):
            sc = _scenario(g, biased, rho, r, frozenset(np.flatnonzero(adopted).tolist()), "containment-counterexample")
            missing = sorted(np.flatnonzero(fair_next & ~biased_next).tolist())
            return Failure(i, f"biased step misses fair adopters {missing}", dump_scenario(sc))
        return "qualifying"
    return Failure(i, f"no qualifying instance in {max_draws} draws", "{}")


# ----------------------------------------------------- bias and input size


def _trial_lemma2(rng_seed, i, max_draws=5000):
    rng = np.random.default_rng([rng_seed, i])
    for _ in range(max_draws):
        g, r, fair, biased = _biased_pair(rng, 3, 12)
        n = g.n
        k = int(rng.integers(1, n))
        seeds = frozenset(rng.choice(n, size=k, replace=False).tolist())
        x = int(rng.choice([v for v in range(n) if v not in seeds]))
        b = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0))
        rho_u = float(rng.uniform(0.0, 1.0))
        w_rho, w_u = float(rng.uniform(0.1, 10.0)), float(rng.uniform(0.1, 10.0))
        horizon = int(rng.integers(1, 11))
        agents = [Agent(v, frozenset(), float(r[v]), rho_u, b, v in seeds) for v in range(n)]
        mf, mb = CredibilityMatrix(fair), CredibilityMatrix(biased)
        r_a, r_b, d_a, d_b = neighbour_split(g, mb, agents, seeds, x)
        margin = d_b * r_a - d_a * r_b
        if abs(margin) < TIE_MARGIN or r_a + r_b - d_a - d_b <= 0:
            continue
        cond = lemma2_condition(g, mb, agents, seeds, x)
        gain, _ = riccati_gain(b, w_rho, w_u, horizon)
        t_f, t_b = individual_target(g, mf, seeds, x), individual_target(g, mb, seeds, x)
        if abs(gain * b * (t_b - t_f)) < 1e-12:
            # separation below float resolution of the threshold update
            continue
        u_f, u_b = control_input(gain, rho_u, t_f), control_input(gain, rho_u, t_b)
        next_f, next_b = rho_u + b * u_f, rho_u + b * u_b
        # b < 0: bias shrinks the input; b > 0 mirrors the sign
        input_shrinks = u_b < u_f if b < 0 else u_b > u_f
        input_grows = u_b > u_f if b < 0 else u_b < u_f
        ok = (input_shrinks and next_b > next_f) if cond else (input_grows and next_b < next_f)
        if not ok:
            sc = _scenario(g, biased, np.full(n, rho_u), r, seeds, "bias-input-counterexample", np.full(n, b))
            msg = f"agent {x}: condition={cond} u_fair={u_f!r} u_biased={u_b!r} b={b!r}"
            return Failure(i, msg, dump_scenario(sc))
        return "condition-true" if cond else "condition-false"
    return Failure(i, f"no non-degenerate instance in {max_draws} draws", "{}")


# ----------------------------------------------------------------- riccati


def lqr_oracle_inputs(b, omega_rho, omega_u, horizon, e0):
    """Minimise the horizon cost directly as a dense quadratic in the inputs.

    With ``e(tau) = e0 + b * sum_{s < tau} u(s)`` the tracked errors are
    affine in the input vector, so the minimiser solves one linear system.
    """
    lower = np.tril(np.ones((horizon, horizon)))  # row tau-1 sums u(0..tau-1)
    hess = omega_u * np.eye(horizon) + omega_rho * b * b * lower.T @ lower
    grad = omega_rho * b * e0 * lower.T @ np.ones(horizon)
    return np.linalg.solve(hess, -grad)


def gain_schedule_inputs(b, omega_rho, omega_u, horizon, e0):
    gains, _ = riccati_schedule(b, omega_rho, omega_u, horizon)
    e, out = e0, np.empty(horizon)
    for tau in range(horizon):
        out[tau] = gains[tau] * e
        e = e + b * out[tau]
    return out


def _trial_riccati(rng_seed, i, tol=1e-8):
    rng = np.random.default_rng([rng_seed, i])
    b = float(rng.choice([-1.0, 1.0]) * rng.uniform(1e-3, 1.0))
    w_rho = float(rng.uniform(1e-2, 10.0))
    w_u = float(rng.uniform(1e-2, 10.0))
    horizon = int(rng.integers(1, 7))
    e0 = float(rng.uniform(-1.0, 1.0))
    got = gain_schedule_inputs(b, w_rho, w_u, horizon, e0)
    want = lqr_oracle_inputs(b, w_rho, w_u, horizon, e0)
    err = float(np.max(np.abs(got - want)))
    if err > tol:
        params = {"b": b, "omega_rho": w_rho, "omega_u": w_u, "horizon": horizon, "e0": e0, "max_abs_error": err}
        return Failure(i, f"gain schedule deviates from oracle by {err:.3e}", json.dumps(params, indent=2) + "\n")
    return None


SUITES = {
    "lemma1": _trial_lemma1,
    "theorem1": _trial_theorem1,
    "prop3": _trial_prop3,
    "lemma2": _trial_lemma2,
    "riccati": _trial_riccati,
}


def _run_one(args):
    name, rng_seed, i = args
    return SUITES[name](rng_seed, i)


def run_suite(name: str, trials: int = 100, rng_seed: int = 0, workers: int | None = None) -> Report:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    workers = default_workers() if workers is None else workers
    jobs = [(name, rng_seed, i) for i in range(trials)]
    if workers <= 1 or trials <= 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, trials // (4 * workers))))
    report = Report(name, trials, rng_seed)
    for res in results:
        if isinstance(res, Failure):
            report.failures.append(res)
        elif res is not None:
            report.tags[res] += 1
    return report
