"""Soft logic rules: parsing, evaluation and printing.

A rule file is a sequence of blocks::

    rule "low_hp_retreat" priority 10
    when health < 15 or not available(attack)
    prefer north:0.25 south:0.25 east:0.25 west:0.25

``#`` starts a comment. Higher priority is tried first; ties keep file order.
"""
from __future__ import annotations

import operator
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import ConfigurationError, InvalidInputError, RuleSyntaxError

_PY_OPS = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "=": operator.eq,
}
_OP_ALIASES = {"≤": "<=", "≥": ">=", "==": "="}

_TOKEN = re.compile(r"""
    (?P<num>[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<op><=|>=|==|=|<|>|≤|≥)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ws>\s+)
""", re.VERBOSE)


# --- condition tree -----------------------------------------------------------

class Condition:
    def holds(self, features, available):
        raise NotImplementedError

    def compile(self):
        """Plain closure equivalent to :meth:`holds`."""
        return self.holds

    def features_used(self):
        return set()

    def actions_used(self):
        return set()


@dataclass(frozen=True)
class Always(Condition):
    def holds(self, features, available):
        return True

    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Compare(Condition):
    feature: str
    op: str
    value: float

    def holds(self, features, available):
        return self.compile()(features, available)

    def compile(self):
        name, value = self.feature, self.value
        test = _PY_OPS[self.op]

        def fn(features, available):
            try:
                x = features[name]
            except KeyError:
                raise ConfigurationError(f"feature {name!r} missing from observation") from None
            return test(float(x), value)
        return fn

    def features_used(self):
        return {self.feature}

    def __str__(self):
        return f"{self.feature} {self.op} {self.value!r}"


@dataclass(frozen=True)
class Available(Condition):
    action: str

    def holds(self, features, available):
        return bool(available(self.action))

    def actions_used(self):
        return {self.action}

    def __str__(self):
        return f"available({self.action})"


@dataclass(frozen=True)
class Not(Condition):
    child: Condition

    def holds(self, features, available):
        return not self.child.holds(features, available)

    def compile(self):
        inner = self.child.compile()
        return lambda features, available: not inner(features, available)

    def features_used(self):
        return self.child.features_used()

    def actions_used(self):
        return self.child.actions_used()

    def __str__(self):
        return f"not {_wrap(self.child)}"


@dataclass(frozen=True)
class And(Condition):
    children: tuple

    def holds(self, features, available):
        return all(c.holds(features, available) for c in self.children)

    def compile(self):
        parts = [c.compile() for c in self.children]

        def fn(features, available):
            for part in parts:
                if not part(features, available):
                    return False
            return True
        return fn

    def features_used(self):
        return set().union(*(c.features_used() for c in self.children))

    def actions_used(self):
        return set().union(*(c.actions_used() for c in self.children))

    def __str__(self):
        return " and ".join(_wrap(c) for c in self.children)


@dataclass(frozen=True)
class Or(Condition):
    children: tuple

    def holds(self, features, available):
        return any(c.holds(features, available) for c in self.children)

    def compile(self):
        parts = [c.compile() for c in self.children]

        def fn(features, available):
            for part in parts:
                if part(features, available):
                    return True
            return False
        return fn

    def features_used(self):
        return set().union(*(c.features_used() for c in self.children))

    def actions_used(self):
        return set().union(*(c.actions_used() for c in self.children))

    def __str__(self):
        return " or ".join(_wrap(c) for c in self.children)


def _wrap(cond):
    return f"({cond})" if isinstance(cond, (And, Or)) else str(cond)


# --- rules ------------------------------------------------------------------------

@dataclass(frozen=True)
class SoftRule:
    name: str
    condition: Condition
    preference: dict  # action or group name -> weight in [0, 1]
    support: int = 0
    priority: int = 0

    def __post_init__(self):
        for action, w in self.preference.items():
            if not 0.0 <= w <= 1.0:
                raise InvalidInputError(f"rule {self.name!r}: weight {w} for {action!r} outside [0, 1]")


@dataclass(frozen=True)
class RuleSet:
    rules: tuple = ()
    action_names: tuple = ()
    action_groups: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def ordered(self):
        # stable sort keeps file order among equal priorities
        return sorted(self.rules, key=lambda r: -r.priority)

    def expand(self, name):
        """Action indices named by an action or a group."""
        if name in self.action_groups:
            return [self.action_names.index(a) for a in self.action_groups[name]]
        return [self.action_names.index(name)]

    @cached_property
    def compiled(self):
        """Priority-ordered (rule, condition closure, preference vector) triples."""
        return [(r, r.condition.compile(), self.preference_vector(r)) for r in self.ordered()]

    def preference_vector(self, rule):
        vec = np.zeros(len(self.action_names))
        for name, w in rule.preference.items():
            idx = self.expand(name)
            vec[idx] += w / len(idx)
        return vec


def _tokenize(text, line_no):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line_no)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group()))
        pos = m.end()
    return out


class _ExprParser:
    def __init__(self, tokens, line_no):
        self.toks = tokens
        self.i = 0
        self.line = line_no

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind or "token"
            raise RuleSyntaxError(f"expected {want}, found {tok[1]!r}", self.line)
        self.i += 1
        return tok

    def parse(self):
        cond = self.parse_or()
        if self.i != len(self.toks):
            raise RuleSyntaxError(f"unexpected {self.peek()[1]!r}", self.line)
        return cond

    def parse_or(self):
        items = [self.parse_and()]
        while self.peek() == ("name", "or"):
            self.i += 1
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self):
        items = [self.parse_not()]
        while self.peek() == ("name", "and"):
            self.i += 1
            items.append(self.parse_not())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_not(self):
        if self.peek() == ("name", "not"):
            self.i += 1
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self):
        kind, val = self.peek()
        if kind == "lpar":
            self.i += 1
            cond = self.parse_or()
            self.take("rpar")
            return cond
        if kind == "name" and val == "true":
            self.i += 1
            return Always()
        if kind == "name" and val == "available":
            self.i += 1
            self.take("lpar")
            action = self.take("name")[1]
            self.take("rpar")
            return Available(action)
        if kind == "name" and val not in ("and", "or", "not"):
            self.i += 1
            op = self.take("op")[1]
            op = _OP_ALIASES.get(op, op)
            num = float(self.take("num")[1])
            return Compare(val, op, num)
        raise RuleSyntaxError(f"expected a condition, found {val!r}", self.line)


_HEADER = re.compile(r'^rule\s+"([^"]+)"(?:\s+priority\s+([-+]?\d+))?(?:\s+support\s+(\d+))?\s*$')
_PREF = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*):(\S+)$")


def parse_rules(text, action_names=None, feature_names=None, action_groups=None):
    """Parse a rule file into a :class:`RuleSet`.

    When ``action_names``/``feature_names`` are given, every identifier is
    checked against them and errors carry the offending line number.
    """
    action_groups = dict(action_groups or {})
    known_actions = None
    if action_names is not None:
        known_actions = set(action_names) | set(action_groups)
    known_features = set(feature_names) if feature_names is not None else None

    rules = []
    current = None

    def finish():
        if current is None:
            return
        if current.get("when") is None or current.get("prefer") is None:
            raise RuleSyntaxError(f"rule {current['name']!r} needs both 'when' and 'prefer'",
                                  current["line"])
        try:
            rules.append(SoftRule(current["name"], current["when"], current["prefer"],
                                  support=current["support"], priority=current["priority"]))
        except InvalidInputError as exc:
            raise RuleSyntaxError(str(exc), current["prefer_line"]) from None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword = line.split(None, 1)[0]
        if keyword == "rule":
            finish()
            m = _HEADER.match(line)
            if m is None:
                raise RuleSyntaxError('expected: rule "name" [priority N] [support N]', line_no)
            current = {"name": m.group(1), "priority": int(m.group(2) or 0),
                       "support": int(m.group(3) or 0), "line": line_no,
                       "when": None, "prefer": None}
        elif current is None:
            raise RuleSyntaxError(f"{keyword!r} outside a rule block", line_no)
        elif keyword == "when":
            if current["when"] is not None:
                raise RuleSyntaxError("duplicate 'when'", line_no)
            cond = _ExprParser(_tokenize(line[4:], line_no), line_no).parse()
            if known_features is not None:
                unknown = cond.features_used() - known_features
                if unknown:
                    raise RuleSyntaxError(f"unknown feature {sorted(unknown)[0]!r}", line_no)
            if known_actions is not None:
                unknown = cond.actions_used() - known_actions
                if unknown:
                    raise RuleSyntaxError(f"unknown action {sorted(unknown)[0]!r}", line_no)
            current["when"] = cond
        elif keyword == "prefer":
            if current["prefer"] is not None:
                raise RuleSyntaxError("duplicate 'prefer'", line_no)
            pref = {}
            for item in line.split()[1:]:
                m = _PREF.match(item)
                if m is None:
                    raise RuleSyntaxError(f"bad preference item {item!r} (want action:weight)", line_no)
                action = m.group(1)
                try:
                    w = float(m.group(2))
                except ValueError:
                    raise RuleSyntaxError(f"bad weight {m.group(2)!r}", line_no) from None
                if known_actions is not None and action not in known_actions:
                    raise RuleSyntaxError(f"unknown action {action!r}", line_no)
                if not 0.0 <= w <= 1.0:
                    raise RuleSyntaxError(f"weight {w} for {action!r} outside [0, 1]", line_no)
                pref[action] = pref.get(action, 0.0) + w
            if not pref:
                raise RuleSyntaxError("'prefer' needs at least one action:weight", line_no)
            current["prefer"] = pref
            current["prefer_line"] = line_no
        else:
            raise RuleSyntaxError(f"unknown keyword {keyword!r}", line_no)
    finish()
    return RuleSet(tuple(rules), tuple(action_names or ()), action_groups)


def format_rules(rules):
    """Inverse of :func:`parse_rules` (up to comments and whitespace)."""
    blocks = []
    for rule in rules:
        head = f'rule "{rule.name}" priority {rule.priority}'
        if rule.support:
            head += f" support {rule.support}"
        pref = " ".join(f"{a}:{w!r}" for a, w in rule.preference.items())
        blocks.append(f"{head}\nwhen {rule.condition}\nprefer {pref}\n")
    return "\n".join(blocks)


def match(rules, features, available):
    """First rule (by priority) whose condition holds, with its masked preference.

    Returns ``(rule, distribution)``; ``(None, None)`` when nothing fires and
    ``(rule, None)`` when the firing rule prefers only unavailable actions.
    """
    available = np.asarray(available, dtype=bool)
    if len(rules) and available.shape != (len(rules.action_names),):
        raise ConfigurationError(
            f"availability mask has {available.shape[0]} entries, rules know {len(rules.action_names)} actions")

    def is_available(name):
        return bool(available[rules.expand(name)].any())

    for rule, holds, vec in rules.compiled:
        if holds(features, is_available):
            pref = vec * available
            total = pref.sum()
            if total <= 0:
                return rule, None
            return rule, pref / total
    return None, None


def evaluate(rules, features, available):
    """Preference distribution of the first firing rule, or ``None``."""
    return match(rules, features, available)[1]
