"""
Writing and matching soft rules
===============================

A rule file lists named rules with a priority, a condition over the
agent's observation features and a preference over actions. The highest
priority rule whose condition holds decides the preference; weights on
unavailable actions are dropped and the rest renormalised.
"""
import numpy as np

from light_marl.envs import SkirmishEnv
from light_marl.knowledge import format_rules, match, parse_rules

env = SkirmishEnv()
text = """
rule "low_hp_retreat" priority 10
when health < 15 or not available(attack)
prefer north:0.25 south:0.25 east:0.25 west:0.25

rule "focus" priority 5
when health >= 15
prefer attack:1.0
"""
rules = parse_rules(text, env.action_names, env.feature_names, env.action_groups)
print(format_rules(rules))

env.reset(0)
features = env.get_features()[0]
avail = env.get_avail()[0]
# at reset nothing is in range, so the first rule fires through its second clause
rule, dist = match(rules, features, avail)
print("fired:", rule.name if rule else None)
print({a: round(float(w), 3) for a, w in zip(env.action_names, dist) if w > 0})

# the same agent at low health
rule, dist = match(rules, dict(features, health=10.0), avail)
print("fired at health 10:", rule.name)

# errors name the line
try:
    parse_rules('rule "x"\nwhen health < 2\nprefer dance:1.0\n', env.action_names, env.feature_names)
except Exception as err:
    print(type(err).__name__, err)
