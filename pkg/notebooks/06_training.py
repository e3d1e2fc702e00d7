"""
A short training run
====================

Train VDN with and without rule-shaped rewards on foraging. The budget
here is tiny so the script finishes in seconds; the real comparison uses
200k steps per seed (see tests/acceptance_runs.py).
"""
from light_marl import TrainConfig, train

common = dict(env="lbf", rules="lbf_forage.rules", total_steps=3000, test_interval=1000,
              test_episodes=8, hidden=32, seed=1)
for label, extra in (("plain", dict(lam=0.0, lambda_k=0.0)), ("with rules", {})):
    result = train(TrainConfig(**common, **extra))
    print(label, result.updates, "updates")
    for m in result.metrics:
        cons = m["consistency"]
        print(f"  step {m['env_step']:>5}  return {m['mean_return']:.2f}  "
              f"eps {m['epsilon']:.3f}  consistency {cons if cons is None else round(cons, 3)}")
