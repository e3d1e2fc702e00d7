"""
Extracting rules from behaviour
===============================

Given (features, action) records we fit a Gini tree with midpoint
thresholds and read each confident leaf back as a soft rule. Here the
records come from two threshold rules with 5% label noise, and the tree
finds both thresholds.
"""
import numpy as np

from light_marl.knowledge import TreeConfig, extract_rules, format_rules

rng = np.random.default_rng(0)
actions = ("retreat", "attack", "advance")
health = rng.integers(0, 46, size=10_000)
dist = rng.integers(0, 10, size=10_000)
label = np.where(health < 15, 0, np.where(dist <= 3, 1, 2))
noisy = rng.random(label.size) < 0.05
label = np.where(noisy, (label + rng.integers(1, 3, size=label.size)) % 3, label)

records = [({"health": float(h), "enemy_dist": float(d)}, actions[a]) for h, d, a in zip(health, dist, label)]
rules, report, _ = extract_rules(records, TreeConfig(), action_names=actions, return_report=True)
for leaf in report:
    print(leaf)
print(format_rules(rules))

# without collapsing redundant splits the noise shows up as extra small leaves
raw = extract_rules(records, TreeConfig(merge_redundant=False), action_names=actions)
print(len(rules), "rules merged,", len(raw), "rules raw")
