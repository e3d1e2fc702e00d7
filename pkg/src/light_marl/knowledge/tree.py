"""CART classification trees (Gini impurity) and rule extraction from their leaves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .rules import Always, And, Compare, RuleSet, SoftRule


@dataclass
class TreeConfig:
    max_depth: int = 4
    min_leaf: int = 20
    min_purity: float = 0.6
    min_support: int = 50
    merge_redundant: bool = True  # collapse sibling leaves that predict the same action


@dataclass
class Node:
    counts: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: "Node | None" = None  # x < threshold
    right: "Node | None" = None  # x >= threshold

    @property
    def is_leaf(self):
        return self.left is None


def gini(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def best_split(X, y, n_classes, min_leaf=1):
    """Best (feature, threshold, weighted child gini) or None.

    Thresholds are midpoints between consecutive distinct values. Ties go to
    the lowest feature index, then the lowest threshold.
    """
    n, n_feat = X.shape
    best = None
    onehot = np.eye(n_classes)[y]
    for f in range(n_feat):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        total = onehot.sum(axis=0)
        n_left = np.arange(1, n)
        valid = (xs[1:] != xs[:-1]) & (n_left >= max(1, min_leaf)) & (n - n_left >= max(1, min_leaf))
        if not valid.any():
            continue
        right = total - left
        gl = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
        gr = 1.0 - np.sum((right / (n - n_left)[:, None]) ** 2, axis=1)
        weighted = (n_left * gl + (n - n_left) * gr) / n
        weighted = np.where(valid, weighted, np.inf)
        k = int(np.argmin(weighted))
        score = float(weighted[k])
        if best is None or score < best[2] - 1e-12:
            best = (f, 0.5 * (xs[k] + xs[k + 1]), score)
    return best


def fit_tree(X, y, n_classes, max_depth=4, min_leaf=20, merge_redundant=False):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise InvalidInputError("cannot fit a tree on an empty dataset")

    def grow(idx, depth):
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        node = Node(counts)
        if depth >= max_depth or counts.max() == counts.sum():
            return node
        split = best_split(X[idx], y[idx], n_classes, min_leaf)
        if split is None or split[2] >= gini(counts) - 1e-12:
            return node
        f, thr, _ = split
        go_left = X[idx, f] < thr
        node.feature, node.threshold = f, thr
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        if (merge_redundant and node.left.is_leaf and node.right.is_leaf
                and np.argmax(node.left.counts) == np.argmax(node.right.counts)):
            # the split changes no decision, so it carries no rule
            node.left = node.right = None
            node.feature, node.threshold = -1, 0.0
        return node

    return grow(np.arange(len(y)), 0)


def leaves(node, path=()):
    """Yield (path, leaf) with path a tuple of (feature, op, threshold)."""
    if node.is_leaf:
        yield path, node
        return
    yield from leaves(node.left, path + ((node.feature, "<", node.threshold),))
    yield from leaves(node.right, path + ((node.feature, ">=", node.threshold),))


def route(node, x):
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.threshold else node.right
    return node


@dataclass
class LeafReport:
    name: str
    support: int
    purity: float
    emitted: bool


def dataset_to_arrays(dataset, feature_names=None, action_names=None):
    if not dataset:
        raise InvalidInputError("empty dataset")
    if feature_names is None:
        feature_names = tuple(dataset[0][0].keys())
    if action_names is None:
        action_names = tuple(sorted({a for _, a in dataset}))
    index = {a: i for i, a in enumerate(action_names)}
    try:
        X = np.array([[float(feats[f]) for f in feature_names] for feats, _ in dataset])
        y = np.array([index[a] for _, a in dataset], dtype=np.int64)
    except KeyError as exc:
        raise InvalidInputError(f"record lacks {exc.args[0]!r}") from None
    return X, y, tuple(feature_names), tuple(action_names)


def extract_rules(dataset, config=None, feature_names=None, action_names=None,
                  action_groups=None, return_report=False):
    """Fit a tree on (features, action) records and turn confident leaves into rules.

    A leaf becomes a rule when it holds at least ``min_support`` records and its
    majority action has frequency at least ``min_purity``. The rule condition is
    the conjunction of the split tests on the path; the preference is the
    leaf's action frequencies.
    """
    config = config or TreeConfig()
    X, y, feature_names, action_names = dataset_to_arrays(dataset, feature_names, action_names)
    tree = fit_tree(X, y, len(action_names), config.max_depth, config.min_leaf, config.merge_redundant)
    rules, report = [], []
    for k, (path, leaf) in enumerate(leaves(tree)):
        support = int(leaf.counts.sum())
        freq = leaf.counts / support
        purity = float(freq.max())
        name = f"leaf_{k}"
        keep = support >= config.min_support and purity >= config.min_purity
        report.append(LeafReport(name, support, purity, keep))
        if not keep:
            continue
        tests = tuple(Compare(feature_names[f], op, float(t)) for f, op, t in path)
        cond = Always() if not tests else tests[0] if len(tests) == 1 else And(tests)
        pref = {action_names[a]: float(freq[a]) for a in range(len(action_names)) if leaf.counts[a] > 0}
        rules.append(SoftRule(name, cond, pref, support=support, priority=0))
    ruleset = RuleSet(tuple(rules), tuple(action_names), dict(action_groups or {}))
    if return_report:
        return ruleset, report, tree
    return ruleset
