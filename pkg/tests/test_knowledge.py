import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from light_marl.envs import LbfEnv, SkirmishEnv
from light_marl.errors import ConfigurationError, InvalidInputError, RuleSyntaxError
from light_marl.knowledge import (Compare, RuleSet, SoftRule, TreeConfig, best_split, evaluate,
                                  extract_rules, fit_tree, format_rules, gini, leaves, match,
                                  parse_rules, route)
from light_marl.trainer import load_rules

SK = SkirmishEnv()
RETREAT_RULE = """
rule "low_hp_retreat" priority 10
when health < 15 or not available(attack)
prefer north:0.25 south:0.25 east:0.25 west:0.25
"""


def sk_rules(text=RETREAT_RULE):
    return parse_rules(text, SK.action_names, SK.feature_names, SK.action_groups)


def all_avail(n=8):
    return np.ones(n, dtype=bool)


# --- parsing --------------------------------------------------------------------------------

def test_parse_retreat_rule():
    rules = sk_rules()
    assert len(rules) == 1
    rule = rules.rules[0]
    assert rule.name == "low_hp_retreat" and rule.priority == 10
    assert sorted(rule.preference) == ["east", "north", "south", "west"]


def test_parse_empty_file():
    rules = sk_rules("")
    assert len(rules) == 0
    assert evaluate(rules, {"health": 1.0}, all_avail()) is None


def test_parse_rejects_weight_above_one():
    with pytest.raises(RuleSyntaxError) as err:
        sk_rules('rule "x"\nwhen health < 3\nprefer north:1.3\n')
    assert err.value.line == 3


@pytest.mark.parametrize("text, line", [
    ('rule "x"\nwhen hp < 3\nprefer north:1\n', 2),
    ('rule "x"\nwhen health < 3\nprefer fly:1\n', 3),
    ('rule "x"\nwhen available(fly)\nprefer north:1\n', 2),
    ('rule "x"\nwhen health <\nprefer north:1\n', 2),
    ('\n\nwhen health < 3\n', 3),
    ('rule "x"\nwhen health < 3\n', 1),
    ('rule x\n', 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(RuleSyntaxError) as err:
        sk_rules(text)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


def test_shipped_rule_files_parse():
    assert len(load_rules("skirmish_3m.rules", SK)) == 1
    assert len(load_rules("lbf_forage.rules", LbfEnv())) == 9


def test_format_round_trip():
    text = """
    rule "a" priority 3 support 7
    when (health <= 2.5 and not enemy_dist >= 3) or available(attack_1)
    prefer attack_1:0.7 move:0.3
    rule "b"
    when true
    prefer noop:1
    """
    rules = sk_rules(text)
    again = sk_rules(format_rules(rules))
    assert format_rules(again) == format_rules(rules)
    assert [r.priority for r in again] == [3, 0] and again.rules[0].support == 7


# --- evaluate -----------------------------------------------------------------------------

def test_evaluate_low_health_uniform_moves():
    avail = np.array([True, True, True, True, True, True, False, False])
    dist = evaluate(sk_rules(), {"health": 10.0}, avail)
    np.testing.assert_allclose(dist, [0, .25, .25, .25, .25, 0, 0, 0], atol=1e-15)


def test_evaluate_no_rule_fires():
    avail = np.array([True] * 6 + [False, False])
    assert evaluate(sk_rules(), {"health": 40.0}, avail) is None


def test_evaluate_renormalizes_over_available():
    rules = sk_rules('rule "r"\nwhen true\nprefer north:0.5 south:0.5\n')
    avail = all_avail()
    avail[1] = False
    dist = evaluate(rules, {}, avail)
    assert dist[2] == 1.0 and dist.sum() == 1.0


def test_evaluate_all_preferred_unavailable():
    rules = sk_rules('rule "r"\nwhen true\nprefer north:1\n')
    avail = all_avail()
    avail[1] = False
    rule, dist = match(rules, {}, avail)
    assert rule.name == "r" and dist is None


def test_evaluate_missing_feature():
    with pytest.raises(ConfigurationError):
        evaluate(sk_rules(), {"alive": 1.0}, all_avail())


def test_priority_order_first_match():
    rules = sk_rules('rule "low"\nwhen true\nprefer noop:1\n'
                     'rule "high" priority 5\nwhen true\nprefer north:1\n'
                     'rule "high2" priority 5\nwhen true\nprefer south:1\n')
    assert match(rules, {}, all_avail())[0].name == "high"


def test_group_weight_spread_over_members():
    rules = sk_rules('rule "r"\nwhen true\nprefer attack:1\n')
    dist = evaluate(rules, {}, all_avail())
    np.testing.assert_allclose(dist[5:], [1 / 3] * 3)


def test_soft_rule_rejects_bad_weight():
    with pytest.raises(InvalidInputError):
        SoftRule("x", Compare("health", "<", 1), {"north": -0.1})


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 45), st.lists(st.booleans(), min_size=8, max_size=8))
def test_evaluate_output_is_distribution_and_pure(health, mask):
    mask = np.array(mask)
    mask[0] = True
    rules = sk_rules()
    a = evaluate(rules, {"health": health}, mask)
    b = evaluate(rules, {"health": health}, mask)
    if a is None:
        assert b is None
        return
    assert np.array_equal(a, b)
    assert np.all(a >= 0) and abs(a.sum() - 1) <= 1e-9 and np.all(a[~mask] == 0)


# --- trees --------------------------------------------------------------------------------

def brute_force_split(X, y, n_classes, min_leaf=1):
    best = None
    for f in range(X.shape[1]):
        values = sorted(set(X[:, f].tolist()))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2
            left = y[X[:, f] < thr]
            right = y[X[:, f] >= thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            g = (len(left) * gini(np.bincount(left, minlength=n_classes).astype(float))
                 + len(right) * gini(np.bincount(right, minlength=n_classes).astype(float))) / len(y)
            if best is None or g < best[2] - 1e-12:
                best = (f, thr, g)
    return best


def test_gini_values():
    assert gini(np.array([5.0, 5.0])) == 0.5
    assert gini(np.array([4.0, 0.0])) == 0.0
    assert gini(np.array([0.0, 0.0])) == 0.0


@pytest.mark.parametrize("seed", range(30))
def test_best_split_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 200))
    X = rng.integers(0, 6, size=(n, 3)).astype(float)
    y = rng.integers(0, 3, size=n)
    ours = best_split(X, y, 3, min_leaf=2)
    ref = brute_force_split(X, y, 3, min_leaf=2)
    if ref is None:
        assert ours is None
        return
    assert ours[0] == ref[0] and ours[1] == ref[1]
    assert ours[2] == pytest.approx(ref[2], abs=1e-12)
    assert ours[2] <= gini(np.bincount(y, minlength=3).astype(float)) + 1e-12


def test_leaves_partition_feature_space():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 3))
    y = (X[:, 0] > 0).astype(int) + (X[:, 1] > 0.5).astype(int)
    tree = fit_tree(X, y, 3, max_depth=4, min_leaf=5)
    paths = list(leaves(tree))
    for x in rng.normal(size=(500, 3)) * 2:
        holding = [leaf for path, leaf in paths
                   if all((x[f] < t) if op == "<" else (x[f] >= t) for f, op, t in path)]
        assert len(holding) == 1 and holding[0] is route(tree, x)


def test_extract_pure_depth_one():
    rng = np.random.default_rng(1)
    data = []
    for h in rng.uniform(0, 45, size=400):
        data.append(({"health": float(h)}, "move" if h < 15 else "attack"))
    rules, report, tree = extract_rules(data, TreeConfig(), return_report=True)
    assert tree.left.is_leaf and tree.right.is_leaf
    low = [r for r in rules if r.preference.get("move") == 1.0]
    assert len(low) == 1
    cond = low[0].condition
    assert cond.feature == "health" and cond.op == "<"
    assert 13 < cond.value < 17  # midpoint between the neighbouring samples


def test_extract_soft_preference_and_purity_filter():
    data = [({"x": 0.0}, "attack")] * 70 + [({"x": 0.0}, "move")] * 30 + [({"x": 1.0}, "noop")] * 100
    rules = extract_rules(data, TreeConfig(min_leaf=10, min_support=50))
    soft = [r for r in rules if "attack" in r.preference]
    assert soft[0].preference == {"attack": 0.7, "move": 0.3}
    strict = extract_rules(data, TreeConfig(min_leaf=10, min_support=50, min_purity=0.9))
    assert all("attack" not in r.preference for r in strict)
    assert len(strict) == 1


def test_extract_low_support_gives_empty():
    data = [({"x": float(i)}, "a" if i % 2 else "b") for i in range(20)]
    assert len(extract_rules(data, TreeConfig(min_support=50))) == 0


def test_extract_empty_dataset():
    with pytest.raises(InvalidInputError):
        extract_rules([])


def test_extracted_rules_replay_leaf_distribution():
    rng = np.random.default_rng(2)
    data = []
    for _ in range(2000):
        f = {"a": float(rng.integers(0, 5)), "b": float(rng.integers(0, 5))}
        p = 0.8 if f["a"] < 2 else 0.3
        data.append((f, "north" if rng.random() < p else "south"))
    names = ("north", "south")
    rules = extract_rules(data, TreeConfig(min_purity=0.0, min_support=1), action_names=names)
    # the parsed form behaves identically
    rules = parse_rules(format_rules(rules), names, ("a", "b"))
    by_rule = {}
    for f, a in data:
        rule, dist = match(rules, f, np.ones(2, dtype=bool))
        by_rule.setdefault(rule.name, [dist, []])[1].append(a)
    for dist, acts in by_rule.values():
        freq = np.array([acts.count(n) / len(acts) for n in names])
        np.testing.assert_allclose(dist, freq, atol=1e-12)


def test_ruleset_is_hashable_value():
    rs = RuleSet((), ("a",), {})
    assert len(rs) == 0 and list(itertools.chain(rs)) == []
