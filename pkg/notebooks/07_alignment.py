"""
How often does a policy follow the rules?
=========================================

Alignment counts, over greedy test episodes, the share of rule-firing
steps at which the chosen action carries weight in the rule's
preference. The intrinsic curve shows each agent's reward along one
episode; it is only measured, never fed back.
"""
import numpy as np

from light_marl import TrainConfig, train
from light_marl.envs import SkirmishEnv
from light_marl.trainer import alignment_stats, intrinsic_curve, load_rules

env = SkirmishEnv()
rules = load_rules("skirmish_3m.rules", env)
cfg = TrainConfig(env="skirmish", mixer="qmix", rules="skirmish_3m.rules", total_steps=2000,
                  test_episodes=4, hidden=16, seed=2)
learner = train(cfg).learner

print(alignment_stats(learner, rules, env, n_episodes=20))
records = intrinsic_curve(learner, rules, env, seed=5)
for agent in range(env.n_agents):
    curve = [r.reward for r in records if r.agent == agent]
    print(f"agent {agent}: {len(curve)} steps, mean r {np.mean(curve):.3f}, min {np.min(curve):.3f}")
