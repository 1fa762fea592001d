# Predicting where an unmanaged cascade stops
#
# Without a policy, a cascade halts once the remaining agents form a set
# that listens mostly to itself. Peeling the non-adopters down to the
# largest such set predicts the final adopters without simulating.

import numpy as np

from epicascade import (
    Agent,
    CredibilityMatrix,
    build_graph,
    final_adopters,
    generate_er_graph,
    is_cohesive,
    largest_cohesive_subset,
    simulate,
)

# A star: agent 0 in the middle, agent 1 adopts first.

g = build_graph(3, [(0, 1), (0, 2)])
rho = np.array([0.5, 0.5, 0.4])
fair = CredibilityMatrix.uniform(3)
traj = simulate(g, fair, rho, {1})
print("fair:", sorted(traj.s_star_star), "after", traj.t_fixed, "steps")

# Lower the early adopter's credibility in agent 0's eyes and the cascade
# never starts: {0, 2} now shields itself.

gamma = np.ones((3, 3))
gamma[1, 0], gamma[2, 0] = 0.4, 0.6
biased = CredibilityMatrix(gamma)
print("cohesive {0, 2}:", is_cohesive(g, biased, rho, {0, 2}))
print("biased:", sorted(simulate(g, biased, rho, {1}).s_star_star))

# The same check on a larger random instance.

rng = np.random.default_rng(7)
n = 30
g = generate_er_graph(n, 0.15, seed=7)
m = CredibilityMatrix(rng.uniform(0, 1, (n, n)))
rho = rng.uniform(0.2, 0.8, n)
seeds = {0, 1, 2}
core = largest_cohesive_subset(g, m, rho, set(range(n)) - seeds)
print("never adopt:", sorted(core))
print("prediction matches simulation:", final_adopters(g, m, rho, seeds) == simulate(g, m, rho, seeds).s_star_star)
