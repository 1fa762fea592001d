import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epicascade.cascade import influence_ratios, step, CascadeState
from epicascade.epistemics import (
    DEFICIT,
    EXCESS,
    Agent,
    build_credibility_matrix,
    credibility_delta,
    discrimination_factor,
    is_epistemically_fair,
    relational_credibility,
    relational_factor,
)
from epicascade.errors import OverrideOutOfRange
from epicascade.network import generate_er_graph

LABELS = ["gender", "income", "age", "ethnicity", "disability"]
group_sets = st.frozensets(st.sampled_from(LABELS))


@pytest.fixture
def reference3_agents():
    # reference rows 1, 2, 3 are ids 0, 1, 2
    return [
        Agent(0, {"gender", "income"}, 0.8),
        Agent(1, {"gender", "income", "age"}, 0.3),
        Agent(2, {"age"}, 0.6),
    ]


@pytest.mark.parametrize(
    "groups, expected",
    [(set(), 1.0), ({"gender", "income"}, 0.25), ({"gender", "income", "age"}, 0.125)],
)
def test_discrimination_factor(groups, expected):
    assert discrimination_factor(groups) == expected


@pytest.mark.parametrize(
    "gx, gy, mode, expected",
    [
        (set(), set(), EXCESS, 1.0),
        (set(), set(), DEFICIT, 1.0),
        ({"gender", "income"}, {"gender", "income", "age"}, EXCESS, 4.0),
        ({"age"}, {"gender", "income", "age"}, EXCESS, 2.0),
        ({"age"}, {"age"}, DEFICIT, 0.5),
    ],
)
def test_relational_factor(gx, gy, mode, expected):
    assert relational_factor(gx, gy, mode) == expected


def test_relational_credibility_reference3(reference3_agents):
    a0, a1, a2 = reference3_agents
    assert relational_credibility(a0, a1) == 0.8
    assert relational_credibility(a1, a2) == 0.075
    assert relational_credibility(a2, a0) == 0.3


def test_reference3_matrix(reference3_agents):
    m = build_credibility_matrix(reference3_agents)
    expected = {(0, 1): 0.8, (0, 2): 0.2, (1, 0): 0.15, (1, 2): 0.075, (2, 0): 0.3, (2, 1): 0.6}
    for pair, value in expected.items():
        assert m[pair] == value
    assert not is_epistemically_fair(m, reference3_agents)


def test_reference3_deltas(reference3_agents):
    m = build_credibility_matrix(reference3_agents)
    assert credibility_delta(m, reference3_agents, 0, 2) == pytest.approx(0.6, abs=1e-15)
    assert credibility_delta(m, reference3_agents, 2, 1) == 0.0


def test_fair_delta_zero():
    agents = [Agent(0, reliability=0.3), Agent(1, reliability=0.3)]
    m = build_credibility_matrix(agents)
    assert credibility_delta(m, agents, 0, 1) == 0.0


def test_empty_groups_give_reliability():
    agents = [Agent(i, reliability=r) for i, r in enumerate([0.2, 0.9, 0.5])]
    m = build_credibility_matrix(agents)
    for x in range(3):
        for y in range(3):
            if x != y:
                assert m[x, y] == agents[x].reliability
    assert is_epistemically_fair(m, agents)


def test_override():
    agents = [Agent(i, reliability=0.7) for i in range(3)]
    m = build_credibility_matrix(agents, overrides={(0, 1): 0.5})
    assert m[0, 1] == 0.5
    assert all(m[x, y] == 0.7 for x in range(3) for y in range(3) if x != y and (x, y) != (0, 1))


def test_override_breaks_fairness():
    agents = [Agent(0, reliability=0.8), Agent(1, reliability=0.4)]
    m = build_credibility_matrix(agents, overrides={(0, 1): 0.4})
    assert not is_epistemically_fair(m, agents)


@pytest.mark.parametrize("value", [-0.1, 1.5])
def test_override_out_of_range(value):
    with pytest.raises(OverrideOutOfRange):
        build_credibility_matrix([Agent(0), Agent(1)], overrides={(0, 1): value})


def test_pair_mode_switch(reference3_agents):
    m = build_credibility_matrix(reference3_agents, pair_modes={(0, 1): DEFICIT})
    assert m[0, 1] == 0.25 * 0.25 * 0.8
    assert m[0, 2] == 0.2


@settings(max_examples=200)
@given(a=group_sets, b=group_sets, mode=st.sampled_from([EXCESS, DEFICIT]))
def test_relational_factor_symmetric(a, b, mode):
    assert relational_factor(a, b, mode) == relational_factor(b, a, mode)


@settings(max_examples=200)
@given(gx=group_sets, gy=group_sets, r=st.floats(0, 1), ry=st.floats(0, 1))
def test_excess_mode_never_exceeds_reliability(gx, gy, r, ry):
    ax, ay = Agent(0, gx, r), Agent(1, gy, ry)
    g = relational_credibility(ax, ay)
    assert g <= r
    assert (g == r) == (gx <= gy or r == 0)


@settings(max_examples=100)
@given(groups=st.lists(group_sets, min_size=2, max_size=6), data=st.data())
def test_delta_plus_gamma_is_reliability(groups, data):
    rs = data.draw(st.lists(st.floats(0, 1), min_size=len(groups), max_size=len(groups)))
    agents = [Agent(i, g, r) for i, (g, r) in enumerate(zip(groups, rs))]
    m = build_credibility_matrix(agents)
    for x in range(len(agents)):
        for y in range(len(agents)):
            if x != y:
                d = credibility_delta(m, agents, x, y)
                assert d + m[x, y] == agents[x].reliability
                assert agents[x].reliability - 1 <= d <= agents[x].reliability


def test_fair_heterogeneous_reliability_cascade_matches_reliability_weighting():
    rng = np.random.default_rng(3)
    g = generate_er_graph(12, 0.4, seed=3)
    r = rng.uniform(0.1, 1.0, 12)
    agents = [Agent(i, reliability=float(r[i])) for i in range(12)]
    m = build_credibility_matrix(agents)
    assert is_epistemically_fair(m, agents)
    rho = rng.uniform(0, 1, 12)
    for _ in range(20):
        adopted = rng.random(12) < 0.4
        w = g.matrix * r[:, None]
        by_reliability = (adopted @ w) / w.sum(axis=0)
        np.testing.assert_allclose(influence_ratios(g, m, adopted), by_reliability, rtol=0, atol=1e-15)
        nxt = step(g, m, CascadeState(0, adopted, rho)).adopted
        assert np.array_equal(nxt, adopted | (by_reliability >= rho - 1e-12))
