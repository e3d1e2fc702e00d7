"""Knowledge-guided intrinsic reward and the shaped team reward."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidInputError

MAX_DISTANCE = np.sqrt(2.0)


def intrinsic_reward(preference, agent_dist):
    """Minus the Euclidean distance between the rule preference and the agent's
    action distribution; 0 when no rule produced a preference."""
    if preference is None:
        return 0.0
    p = np.asarray(preference, dtype=np.float64)
    q = np.asarray(agent_dist, dtype=np.float64)
    if p.shape != q.shape:
        raise ConfigurationError(f"preference over {p.shape} actions vs agent over {q.shape}")
    return -float(np.sqrt(np.sum((p - q) ** 2)))


def shaped_team_reward(r_ex, intrinsics, lam):
    """r_ex + lam * mean(intrinsics)."""
    intrinsics = np.asarray(intrinsics, dtype=np.float64)
    if intrinsics.size == 0:
        raise InvalidInputError("need at least one agent's intrinsic reward")
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    return float(r_ex + lam * intrinsics.mean())


@dataclass
class IntrinsicRecord:
    agent: int
    step: int
    rule: str | None
    preference: np.ndarray | None
    agent_dist: np.ndarray
    reward: float

    def as_dict(self):
        return {
            "agent": self.agent, "step": self.step, "rule": self.rule,
            "preference": None if self.preference is None else [float(x) for x in self.preference],
            "agent_dist": [float(x) for x in self.agent_dist],
            "intrinsic": self.reward,
        }
