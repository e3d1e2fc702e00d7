"""
Mixing per-agent values
=======================

VDN sums the agents' chosen Q values. QMIX mixes them through a small
network whose weights come from the global state; absolute values keep
every weight non-negative, so raising any agent's Q never lowers the team
value. Either way the joint greedy action is the tuple of per-agent
greedy actions, which we check here by brute force.
"""
import itertools

import numpy as np

from light_marl.mixer import init_qmix_params, qmix_mix, vdn_mix
from light_marl.tensor import ParamStore

rng = np.random.default_rng(0)
n_agents, n_actions, state_size = 3, 4, 6
params = ParamStore()
init_qmix_params(params, n_agents, state_size, embed=8, rng=rng, prefix="")

q = rng.normal(size=(n_agents, n_actions))
state = rng.normal(size=state_size)
print("per-agent greedy", q.argmax(axis=1))

joints = list(itertools.product(range(n_actions), repeat=n_agents))
for name, mix in (("vdn", lambda v: vdn_mix(v)), ("qmix", lambda v: qmix_mix(v, state, params))):
    totals = [float(mix(np.array([q[i, a[i]] for i in range(n_agents)]))) for a in joints]
    print(name, "joint greedy", joints[int(np.argmax(totals))])

# monotonic: bump one agent's value, the mix can only go up
chosen = q.max(axis=1)
bumped = chosen.copy()
bumped[1] += 0.5
print("qmix before/after", float(qmix_mix(chosen, state, params)), float(qmix_mix(bumped, state, params)))
