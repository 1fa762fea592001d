import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epicascade.cascade import (
    CascadeState,
    final_adopters,
    influence_ratio,
    influence_ratios,
    initial_state,
    is_cohesive,
    is_fixed_point,
    largest_cohesive_subset,
    simulate,
    step,
    transient_condition,
)
from epicascade.epistemics import Agent, CredibilityMatrix, build_credibility_matrix, is_epistemically_fair
from epicascade.errors import EmptySeedSet
from epicascade.network import generate_er_graph


def random_case(seed, n_min=2, n_max=8):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    g = generate_er_graph(n, float(rng.uniform(0.25, 0.8)), seed=seed, max_attempts=10_000)
    m = CredibilityMatrix(rng.uniform(0, 1, (n, n)))
    rho = rng.uniform(0, 1, n)
    seeds = frozenset(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
    return rng, g, m, rho, seeds


def exhaustive_cohesive_subsets(g, m, rho, base):
    base = sorted(base)
    return [
        frozenset(c)
        for k in range(len(base) + 1)
        for c in itertools.combinations(base, k)
        if is_cohesive(g, m, rho, c)
    ]


# ---- influence ratio


def test_ratio_fair_star(star, fair_star_matrix):
    r = influence_ratio(star, fair_star_matrix, {1}, 0)
    assert r.value == 0.5
    assert (r.numerator, r.denominator) == (1.0, 2.0)


def test_ratio_biased_star(star, biased_star_matrix):
    assert influence_ratio(star, biased_star_matrix, {1}, 0).value == 0.4


def test_ratio_without_adopter_neighbours(star, fair_star_matrix):
    assert influence_ratio(star, fair_star_matrix, {1}, 2).value == 0.0


def test_ratio_zero_credibility_is_zero(star):
    m = CredibilityMatrix(np.zeros((3, 3)))
    r = influence_ratio(star, m, {1}, 0)
    assert r.value == 0.0 and r.denominator == 0.0
    assert influence_ratios(star, m, {1})[0] == 0.0


def test_ratio_vector_matches_scalar():
    _, g, m, _, seeds = random_case(11, 8, 15)
    vec = influence_ratios(g, m, seeds)
    for x in range(g.n):
        assert vec[x] == pytest.approx(influence_ratio(g, m, seeds, x).value, abs=1e-15)


# ---- step and simulate


def test_step_fair_star(star, fair_star_matrix, star_thresholds):
    s0 = initial_state(3, {1}, star_thresholds)
    s1 = step(star, fair_star_matrix, s0)
    assert s1.adopters == {0, 1}
    assert step(star, fair_star_matrix, s1).adopters == {0, 1, 2}


def test_step_all_adopted_is_absorbing(star, fair_star_matrix, star_thresholds):
    s = CascadeState(4, np.ones(3, bool), star_thresholds)
    assert step(star, fair_star_matrix, s).adopters == {0, 1, 2}


def test_step_biased_star_blocks(star, biased_star_matrix, star_thresholds):
    s = initial_state(3, {1}, star_thresholds)
    for _ in range(5):
        s = step(star, biased_star_matrix, s)
    assert s.adopters == {1}


def test_step_threshold_boundary_adopts(star, fair_star_matrix):
    # ratio 0.5 equals the threshold exactly
    s = initial_state(3, {1}, [0.5, 0.5, 0.5])
    assert 0 in step(star, fair_star_matrix, s).adopters


def test_simulate_fair_star(star, fair_star_matrix, star_thresholds):
    traj = simulate(star, fair_star_matrix, star_thresholds, {1})
    assert traj.s_star_star == {0, 1, 2}
    assert traj.t_fixed == 2
    assert traj.switching_sets == [{0}, {2}]


def test_simulate_all_seeds(star, fair_star_matrix, star_thresholds):
    traj = simulate(star, fair_star_matrix, star_thresholds, {0, 1, 2})
    assert len(traj) == 1 and traj.t_fixed == 0


def test_simulate_biased_star(star, biased_star_matrix, star_thresholds):
    traj = simulate(star, biased_star_matrix, star_thresholds, {1})
    assert traj.s_star_star == {1}
    assert traj.t_fixed == 0


def test_simulate_cutoff(star, fair_star_matrix, star_thresholds):
    traj = simulate(star, fair_star_matrix, star_thresholds, {1}, max_t=1)
    assert traj.t_fixed is None
    assert traj.s_star_star == {0, 1}


def test_empty_seed_set(star, fair_star_matrix, star_thresholds):
    with pytest.raises(EmptySeedSet):
        simulate(star, fair_star_matrix, star_thresholds, set())
    with pytest.raises(EmptySeedSet):
        final_adopters(star, fair_star_matrix, star_thresholds, set())


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_monotone_and_terminates(seed):
    _, g, m, rho, seeds = random_case(seed, 2, 25)
    traj = simulate(g, m, rho, seeds)
    assert traj.t_fixed is not None and traj.t_fixed <= g.n
    for a, b in zip(traj.states, traj.states[1:]):
        assert np.all(b.adopted >= a.adopted)
        assert b.adopters - a.adopters
    for t, sw in enumerate(traj.switching_sets, start=1):
        assert sw == traj.states[t].adopters - traj.states[t - 1].adopters
    assert is_fixed_point(g, m, rho, traj.s_star_star)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), c=st.floats(0.05, 1.0))
def test_fair_equal_reliability_reduces_to_counting(seed, c):
    rng, g, _, rho, _ = random_case(seed, 2, 20)
    agents = [Agent(i, reliability=c) for i in range(g.n)]
    m = build_credibility_matrix(agents)
    assert is_epistemically_fair(m, agents)
    for _ in range(5):
        adopted = rng.random(g.n) < 0.5
        deg = g.matrix.sum(axis=0)
        counted = (g.matrix[adopted].sum(axis=0)) / deg
        unweighted = adopted | (counted >= rho - 1e-12)
        assert np.array_equal(step(g, m, CascadeState(0, adopted, rho)).adopted, unweighted)


# ---- cohesive sets


def test_empty_set_is_cohesive(star, fair_star_matrix, star_thresholds):
    assert is_cohesive(star, fair_star_matrix, star_thresholds, set())


def test_cohesive_biased_star(star, biased_star_matrix, star_thresholds):
    assert is_cohesive(star, biased_star_matrix, star_thresholds, {0, 2})


def test_cohesive_strict_inequality(star, fair_star_matrix, star_thresholds):
    assert not is_cohesive(star, fair_star_matrix, star_thresholds, {0, 2})


def test_largest_cohesive(star, fair_star_matrix, biased_star_matrix, star_thresholds):
    assert largest_cohesive_subset(star, fair_star_matrix, star_thresholds, set()) == set()
    assert largest_cohesive_subset(star, biased_star_matrix, star_thresholds, {0, 2}) == {0, 2}
    assert largest_cohesive_subset(star, fair_star_matrix, star_thresholds, {0, 2}) == set()
    # exhaustive confirmation of the last case
    assert exhaustive_cohesive_subsets(star, fair_star_matrix, star_thresholds, {0, 2}) == [frozenset()]


def test_fixed_points(star, fair_star_matrix, biased_star_matrix, star_thresholds):
    assert is_fixed_point(star, fair_star_matrix, star_thresholds, {0, 1, 2})
    assert is_fixed_point(star, biased_star_matrix, star_thresholds, {1})
    assert not is_fixed_point(star, fair_star_matrix, star_thresholds, {1})


def test_final_adopters(star, fair_star_matrix, biased_star_matrix, star_thresholds):
    assert final_adopters(star, fair_star_matrix, star_thresholds, {0, 1, 2}) == {0, 1, 2}
    assert final_adopters(star, fair_star_matrix, star_thresholds, {1}) == {0, 1, 2}
    assert final_adopters(star, biased_star_matrix, star_thresholds, {1}) == {1}


def test_isolated_agent_consistency(star):
    # agent 0 grants no credibility to anyone: unreachable, and cohesive alone
    g = np.ones((3, 3))
    g[1, 0] = g[2, 0] = 0.0
    m = CredibilityMatrix(g)
    rho = np.array([0.5, 0.5, 0.5])
    assert is_cohesive(star, m, rho, {0})
    assert is_fixed_point(star, m, rho, {1, 2})
    assert not is_fixed_point(star, m, np.array([0.0, 0.5, 0.5]), {1, 2})


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_fixed_point_iff_cohesive_exhaustive(seed):
    _, g, m, rho, _ = random_case(seed, 2, 7)
    for bits in itertools.product((False, True), repeat=g.n):
        s = np.array(bits)
        # check=True raises on disagreement
        is_fixed_point(g, m, rho, s, check=True)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_union_closure(seed):
    rng, g, m, rho, _ = random_case(seed, 3, 9)
    cohesive = exhaustive_cohesive_subsets(g, m, rho, range(g.n))
    for _ in range(20):
        a, b = (cohesive[i] for i in rng.integers(len(cohesive), size=2))
        assert is_cohesive(g, m, rho, a | b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_peeling_matches_exhaustive_and_order(seed):
    rng, g, m, rho, seeds = random_case(seed, 3, 10)
    base = frozenset(range(g.n)) - seeds
    peeled = largest_cohesive_subset(g, m, rho, base)
    subsets = exhaustive_cohesive_subsets(g, m, rho, base)
    union = frozenset().union(*subsets)
    assert peeled == union == max(subsets, key=len)
    for _ in range(3):
        assert largest_cohesive_subset(g, m, rho, base, order=rng.permutation(g.n).tolist()) == peeled


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_cohesive_sets_shield_against_seeds(seed):
    _, g, m, rho, seeds = random_case(seed, 3, 10)
    base = frozenset(range(g.n)) - seeds
    ratios = influence_ratios(g, m, seeds)
    for x_set in exhaustive_cohesive_subsets(g, m, rho, base):
        for x in x_set:
            assert ratios[x] < rho[x]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_simulation_matches_cohesive_prediction(seed):
    _, g, m, rho, seeds = random_case(seed, 2, 30)
    assert simulate(g, m, rho, seeds).s_star_star == final_adopters(g, m, rho, seeds)


# ---- transient condition


def test_transient_fair_network_holds(star, fair_star_matrix, star_agents):
    flags = transient_condition(star, fair_star_matrix, star_agents, {0}, {1})
    assert flags == {0: True}


def test_transient_deficit_on_non_adopters_holds(star, star_agents):
    g = np.ones((3, 3))
    g[2, 0] = 0.3
    assert transient_condition(star, CredibilityMatrix(g), star_agents, {0}, {1}) == {0: True}


def test_transient_deficit_on_adopter_fails(star, star_agents):
    g = np.ones((3, 3))
    g[1, 0] = 0.4
    assert transient_condition(star, CredibilityMatrix(g), star_agents, {0}, {1}) == {0: False}


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_transient_condition_implies_containment(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 12))
    g = generate_er_graph(n, 0.5, seed=seed, max_attempts=10_000)
    r = rng.uniform(0.05, 1, n)
    fair = CredibilityMatrix(np.tile(r[:, None], (1, n)))
    biased = CredibilityMatrix(fair.gamma * rng.uniform(0, 1, (n, n)))
    adopted = rng.random(n) < 0.4
    adopted[0] = True
    rho = rng.uniform(0, 1, n)
    agents = [Agent(i, reliability=float(r[i])) for i in range(n)]
    state = CascadeState(0, adopted, rho)
    f = step(g, fair, state).adopted
    newly = set(np.flatnonzero(f & ~adopted).tolist())
    flags = transient_condition(g, biased, agents, newly, state)
    if all(flags.values()):
        assert np.all(step(g, biased, state).adopted >= f)
