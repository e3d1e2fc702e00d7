"""Level-Based Foraging on a small grid.

Agents walk a grid and pick up food by standing next to it and choosing
``load``; a food item is collected when the loaders' levels add up to the
food's level. Each loader contributes ``food_level / own_level`` to the team
reward. Agents see a 5x5 window around themselves.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigurationError, InvalidInputError

ACTIONS = ("noop", "north", "south", "east", "west", "load")
MOVES = {1: (-1, 0), 2: (1, 0), 3: (0, 1), 4: (0, -1)}
FEATURES = ("own_level", "food_visible", "food_dr", "food_dc", "food_level",
            "food_adjacent", "n_visible_food")


@dataclass(frozen=True)
class LbfConfig:
    rows: int = 10
    cols: int = 10
    n_agents: int = 3
    n_foods: int = 3
    horizon: int = 50
    agent_levels: tuple = (1, 2)
    sight: int = 2  # window half-width: 2 -> 5x5
    strict_threshold: bool = False  # collect only when level sum > food level
    normalize_reward: bool = False


@dataclass
class LbfState:
    rows: int
    cols: int
    agent_pos: np.ndarray  # (n, 2) int
    agent_level: np.ndarray  # (n,)
    food_pos: np.ndarray  # (m, 2)
    food_level: np.ndarray  # (m,)
    collected: np.ndarray  # (m,) bool
    step: int = 0
    horizon: int = 50

    def copy(self):
        return replace(self, agent_pos=self.agent_pos.copy(), agent_level=self.agent_level.copy(),
                       food_pos=self.food_pos.copy(), food_level=self.food_level.copy(),
                       collected=self.collected.copy())


def _check_config(config):
    if config.n_agents < 2 or config.n_foods < 1:
        raise ConfigurationError("LBF needs at least 2 agents and 1 food")
    if config.rows < 5 or config.cols < 5:
        raise ConfigurationError("LBF grid must be at least 5x5")
    if config.n_agents + config.n_foods > config.rows * config.cols:
        raise ConfigurationError("grid too small to place all entities")
    if config.horizon < 1:
        raise ConfigurationError("horizon must be positive")


def lbf_reset(config, seed):
    """Place agents and foods at random distinct cells; returns (state, observations)."""
    _check_config(config)
    rng = np.random.default_rng(seed)
    n, m = config.n_agents, config.n_foods
    cells = rng.choice(config.rows * config.cols, size=n + m, replace=False)
    pos = np.stack([cells // config.cols, cells % config.cols], axis=1).astype(np.int64)
    levels = rng.choice(np.asarray(config.agent_levels, dtype=np.int64), size=n)
    top2 = int(np.sort(levels)[-2:].sum())
    food_level = rng.integers(1, top2 + 1, size=m)
    state = LbfState(
        rows=config.rows, cols=config.cols,
        agent_pos=pos[:n].copy(), agent_level=levels.astype(np.int64),
        food_pos=pos[n:].copy(), food_level=food_level.astype(np.int64),
        collected=np.zeros(m, dtype=bool), step=0, horizon=config.horizon)
    return state, lbf_observations(state, config.sight)


def _in_grid(state, r, c):
    return 0 <= r < state.rows and 0 <= c < state.cols


def _occupied(state):
    occ = {}
    for i, (r, c) in enumerate(state.agent_pos):
        occ[(int(r), int(c))] = ("agent", i)
    for j, (r, c) in enumerate(state.food_pos):
        if not state.collected[j]:
            occ[(int(r), int(c))] = ("food", j)
    return occ


def _adjacent_foods(state, i):
    r, c = state.agent_pos[i]
    out = []
    for j in range(len(state.food_level)):
        if state.collected[j]:
            continue
        fr, fc = state.food_pos[j]
        if abs(fr - r) + abs(fc - c) == 1:
            out.append(j)
    return out


def lbf_available_actions(state, agent, occupied=None):
    occ = _occupied(state) if occupied is None else occupied
    mask = np.zeros(len(ACTIONS), dtype=bool)
    mask[0] = True
    r, c = (int(v) for v in state.agent_pos[agent])
    for a, (dr, dc) in MOVES.items():
        nr, nc = r + dr, c + dc
        mask[a] = _in_grid(state, nr, nc) and (nr, nc) not in occ
    mask[5] = bool(_adjacent_foods(state, agent))
    return mask


def lbf_step(state, joint_action, strict_threshold=False, sight=2, normalize_reward=False):
    """Advance one step. Returns (new_state, team_reward, done, observations).

    ``state`` is not modified.
    """
    n = len(state.agent_level)
    actions = [int(a) for a in joint_action]
    if len(actions) != n:
        raise InvalidInputError(f"expected {n} actions, got {len(actions)}")
    for a in actions:
        if not 0 <= a < len(ACTIONS):
            raise InvalidInputError(f"action index {a} out of range")
    new = state.copy()
    occ = _occupied(state)

    targets = {}
    for i, a in enumerate(actions):
        if a not in MOVES:
            continue
        r, c = (int(v) for v in state.agent_pos[i])
        dr, dc = MOVES[a]
        cell = (r + dr, c + dc)
        if not _in_grid(state, *cell) or cell in occ:
            continue
        if cell in targets.values():
            continue  # lower index already claimed it
        targets[i] = cell
    for i, cell in targets.items():
        new.agent_pos[i] = cell

    reward = 0.0
    loaders = [i for i, a in enumerate(actions) if a == 5]
    for j in range(len(new.food_level)):
        if new.collected[j]:
            continue
        fr, fc = new.food_pos[j]
        near = [i for i in loaders
                if abs(new.agent_pos[i][0] - fr) + abs(new.agent_pos[i][1] - fc) == 1]
        if not near:
            continue
        total = int(sum(new.agent_level[i] for i in near))
        level = int(new.food_level[j])
        ok = total > level if strict_threshold else total >= level
        if ok:
            new.collected[j] = True
            reward += sum(level / float(new.agent_level[i]) for i in near)
    if normalize_reward and reward:
        reward /= float(new.food_level.sum())

    new.step = state.step + 1
    done = bool(new.collected.all() or new.step >= new.horizon)
    return new, reward, done, lbf_observations(new, sight)


def observation_size(n_agents, sight=2):
    w = 2 * sight + 1
    return 3 * w * w + 1 + 2 + n_agents


def lbf_observation(state, agent, sight=2):
    """Egocentric window (agent level, food level, self marker) + level, position, id."""
    n = len(state.agent_level)
    w = 2 * sight + 1
    grid = np.zeros((3, w, w))
    r0, c0 = state.agent_pos[agent]
    for i, (r, c) in enumerate(state.agent_pos):
        dr, dc = r - r0 + sight, c - c0 + sight
        if 0 <= dr < w and 0 <= dc < w:
            grid[0, dr, dc] = state.agent_level[i]
    for j, (r, c) in enumerate(state.food_pos):
        if state.collected[j]:
            continue
        dr, dc = r - r0 + sight, c - c0 + sight
        if 0 <= dr < w and 0 <= dc < w:
            grid[1, dr, dc] = state.food_level[j]
    grid[2, sight, sight] = 1.0
    extra = np.zeros(3 + n)
    extra[0] = state.agent_level[agent]
    extra[1] = r0 / (state.rows - 1)
    extra[2] = c0 / (state.cols - 1)
    extra[3 + agent] = 1.0
    return np.concatenate([grid.ravel(), extra])


def lbf_observations(state, sight=2):
    return [lbf_observation(state, i, sight) for i in range(len(state.agent_level))]


def lbf_features(state, agent, sight=2):
    """Named features used by rule conditions and trajectory dumps."""
    r0, c0 = (int(v) for v in state.agent_pos[agent])
    best = None
    visible = 0
    for j, (r, c) in enumerate(state.food_pos):
        if state.collected[j]:
            continue
        dr, dc = int(r) - r0, int(c) - c0
        if abs(dr) <= sight and abs(dc) <= sight:
            visible += 1
            key = (abs(dr) + abs(dc), j)
            if best is None or key < best[0]:
                best = (key, dr, dc, int(state.food_level[j]))
    feats = {"own_level": float(state.agent_level[agent]), "n_visible_food": float(visible)}
    if best is None:
        feats.update(food_visible=0.0, food_dr=0.0, food_dc=0.0, food_level=0.0, food_adjacent=0.0)
    else:
        _, dr, dc, lvl = best
        feats.update(food_visible=1.0, food_dr=float(dr), food_dc=float(dc), food_level=float(lvl),
                     food_adjacent=float(abs(dr) + abs(dc) == 1))
    return feats


def lbf_global_state(state):
    parts = []
    for (r, c), lvl in zip(state.agent_pos, state.agent_level):
        parts += [r / (state.rows - 1), c / (state.cols - 1), float(lvl)]
    for (r, c), lvl, col in zip(state.food_pos, state.food_level, state.collected):
        parts += [r / (state.rows - 1), c / (state.cols - 1), 0.0 if col else float(lvl)]
    return np.asarray(parts)


class LbfEnv:
    """Stateful wrapper used by the trainer."""

    action_names = ACTIONS
    action_groups = {"move": ("north", "south", "east", "west")}
    feature_names = FEATURES

    def __init__(self, config=None):
        self.config = config or LbfConfig()
        _check_config(self.config)
        self.n_agents = self.config.n_agents
        self.n_actions = len(ACTIONS)
        self.obs_size = observation_size(self.n_agents, self.config.sight)
        self.state_size = 3 * (self.config.n_agents + self.config.n_foods)
        self.horizon = self.config.horizon
        self.state = None

    def reset(self, seed):
        self.state, self._obs = lbf_reset(self.config, seed)
        return self._obs

    def step(self, actions):
        c = self.config
        self.state, reward, done, self._obs = lbf_step(
            self.state, actions, strict_threshold=c.strict_threshold, sight=c.sight,
            normalize_reward=c.normalize_reward)
        terminated = bool(self.state.collected.all())
        return reward, done, {"terminated": terminated, "win": terminated}

    def get_obs(self):
        return self._obs

    def get_state(self):
        return lbf_global_state(self.state)

    def get_avail(self):
        occ = _occupied(self.state)
        return np.stack([lbf_available_actions(self.state, i, occ) for i in range(self.n_agents)])

    def get_features(self):
        return [lbf_features(self.state, i, self.config.sight) for i in range(self.n_agents)]
