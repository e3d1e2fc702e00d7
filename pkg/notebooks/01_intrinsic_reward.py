"""
Intrinsic reward from a soft rule
=================================

An agent's Q values are squashed onto the probability simplex with a
masked softmax. A rule's preference lives on the same simplex, and the
intrinsic reward is minus the Euclidean distance between the two.
"""
import numpy as np

from light_marl import intrinsic_reward, phi, shaped_team_reward

# five actions, the last one unavailable
q = np.array([1.2, 0.3, -0.5, 2.0, 9.0])
avail = np.array([True, True, True, True, False])
agent = phi(q, avail)
print("agent distribution", np.round(agent, 3))

# a rule that says "go north or east, evenly"
rule = np.array([0.5, 0.0, 0.0, 0.5, 0.0])
print("r =", round(intrinsic_reward(rule, agent), 4))

# agreement gives 0, total disagreement between one-hots gives -sqrt(2)
print(intrinsic_reward([1, 0], [1, 0]), intrinsic_reward([1, 0], [0, 1]))

# no rule fired: nothing to compare against, so the reward is 0
print(intrinsic_reward(None, agent))

# the team reward the learner trains on adds lambda times the mean
# of the agents' intrinsic rewards
print(shaped_team_reward(1.0, [-0.3, -0.1], lam=0.5))
