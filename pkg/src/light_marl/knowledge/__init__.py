from .rules import (Always, And, Available, Compare, Not, Or, RuleSet, SoftRule, evaluate,
                    format_rules, match, parse_rules)
from .tree import TreeConfig, best_split, extract_rules, fit_tree, gini, leaves, route
