"""Two-team grid skirmish with sparse rewards.

A learned ally team fights a scripted enemy team. Each enemy walks toward the
nearest living ally and shoots it once in range. Rewards arrive only on
deaths and on victory: +200 for wiping out the enemy, +10 per enemy killed,
-5 per ally lost.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigurationError, InvalidInputError

MOVE_NAMES = ("north", "south", "east", "west")
MOVES = {1: (-1, 0), 2: (1, 0), 3: (0, 1), 4: (0, -1)}
FEATURES = ("health", "alive", "attack_available", "enemy_visible", "enemy_dr", "enemy_dc",
            "enemy_dist", "n_enemies_visible", "n_enemies_in_range")

WIN_REWARD = 200.0
KILL_REWARD = 10.0
DEATH_PENALTY = -5.0


@dataclass(frozen=True)
class SkirmishConfig:
    rows: int = 8
    cols: int = 12
    n_allies: int = 3
    n_enemies: int = 3
    horizon: int = 60
    max_health: float = 45.0
    ally_damage: float = 6.0
    enemy_damage: float = 6.0
    ally_range: int = 3
    enemy_range: int = 3
    sight: int = 5
    band: int = 2  # width of each team's starting band
    reward_mode: str = "sparse"  # or "dense"


@dataclass
class SkirmishState:
    rows: int
    cols: int
    ally_pos: np.ndarray
    ally_health: np.ndarray
    enemy_pos: np.ndarray
    enemy_health: np.ndarray
    max_health: float
    step: int = 0
    horizon: int = 60

    @property
    def ally_alive(self):
        return self.ally_health > 0

    @property
    def enemy_alive(self):
        return self.enemy_health > 0

    def copy(self):
        return replace(self, ally_pos=self.ally_pos.copy(), ally_health=self.ally_health.copy(),
                       enemy_pos=self.enemy_pos.copy(), enemy_health=self.enemy_health.copy())


def action_names(n_enemies):
    return ("noop",) + MOVE_NAMES + tuple(f"attack_{j}" for j in range(n_enemies))


def chebyshev(a, b):
    return int(max(abs(int(a[0]) - int(b[0])), abs(int(a[1]) - int(b[1]))))


def _check_config(config):
    if config.n_allies < 1 or config.n_enemies < 1:
        raise ConfigurationError("team sizes must be at least 1")
    if config.band < 1 or 2 * config.band > config.cols:
        raise ConfigurationError("arena too narrow for the starting bands")
    if max(config.n_allies, config.n_enemies) > config.rows * config.band:
        raise ConfigurationError("arena too small for the team sizes")
    if config.reward_mode not in ("sparse", "dense"):
        raise ConfigurationError(f"unknown reward_mode {config.reward_mode!r}")


def _place(rng, n, rows, col_lo, col_hi):
    cols = col_hi - col_lo
    cells = rng.choice(rows * cols, size=n, replace=False)
    return np.stack([cells // cols, col_lo + cells % cols], axis=1).astype(np.int64)


def skirmish_reset(config, seed):
    _check_config(config)
    rng = np.random.default_rng(seed)
    state = SkirmishState(
        rows=config.rows, cols=config.cols,
        ally_pos=_place(rng, config.n_allies, config.rows, 0, config.band),
        ally_health=np.full(config.n_allies, float(config.max_health)),
        enemy_pos=_place(rng, config.n_enemies, config.rows, config.cols - config.band, config.cols),
        enemy_health=np.full(config.n_enemies, float(config.max_health)),
        max_health=float(config.max_health), step=0, horizon=config.horizon)
    return state, skirmish_observations(state, config)


def skirmish_available_actions(state, ally, config):
    n_act = 5 + len(state.enemy_health)
    mask = np.zeros(n_act, dtype=bool)
    mask[0] = True
    if state.ally_health[ally] <= 0:
        return mask
    r, c = state.ally_pos[ally]
    for a, (dr, dc) in MOVES.items():
        mask[a] = 0 <= r + dr < state.rows and 0 <= c + dc < state.cols
    for j in range(len(state.enemy_health)):
        mask[5 + j] = bool(state.enemy_health[j] > 0
                           and chebyshev(state.ally_pos[ally], state.enemy_pos[j]) <= config.ally_range)
    return mask


def _living_cells(state):
    cells = set()
    for p, h in zip(state.ally_pos, state.ally_health):
        if h > 0:
            cells.add((int(p[0]), int(p[1])))
    for p, h in zip(state.enemy_pos, state.enemy_health):
        if h > 0:
            cells.add((int(p[0]), int(p[1])))
    return cells


def _try_move(state, pos, dr, dc, cells):
    r, c = int(pos[0]), int(pos[1])
    nr, nc = r + dr, c + dc
    if not (0 <= nr < state.rows and 0 <= nc < state.cols) or (nr, nc) in cells:
        return False
    cells.discard((r, c))
    cells.add((nr, nc))
    pos[0], pos[1] = nr, nc
    return True


def _enemy_policy(state, config, cells, acting):
    """Nearest-ally chase and shoot, enemies in index order.

    ``acting`` marks enemies alive at the start of the step. Fire is exchanged
    simultaneously, so an enemy killed this step still shoots but does not move.
    """
    for j in range(len(state.enemy_health)):
        if not acting[j]:
            continue
        living = [i for i in range(len(state.ally_health)) if state.ally_health[i] > 0]
        if not living:
            return
        target = min(living, key=lambda i: (chebyshev(state.enemy_pos[j], state.ally_pos[i]), i))
        if chebyshev(state.enemy_pos[j], state.ally_pos[target]) <= config.enemy_range:
            state.ally_health[target] = max(0.0, state.ally_health[target] - config.enemy_damage)
            if state.ally_health[target] <= 0:
                cells.discard((int(state.ally_pos[target][0]), int(state.ally_pos[target][1])))
            continue
        if state.enemy_health[j] <= 0:
            continue
        dr = int(state.ally_pos[target][0] - state.enemy_pos[j][0])
        dc = int(state.ally_pos[target][1] - state.enemy_pos[j][1])
        steps = []
        if abs(dc) >= abs(dr):
            steps = [(0, int(np.sign(dc))), (int(np.sign(dr)), 0)]
        else:
            steps = [(int(np.sign(dr)), 0), (0, int(np.sign(dc)))]
        for sr, sc in steps:
            if (sr, sc) != (0, 0) and _try_move(state, state.enemy_pos[j], sr, sc, cells):
                break


def skirmish_step(state, joint_action, config):
    """Allies act (moves then attacks, index order), then the enemy script.
    Enemies alive at the start of the step return fire even if they die in it.

    Returns (new_state, reward, done, observations, info). ``info`` carries
    ``win``, ``kills``, ``losses`` and ``log`` (attacks that resolved as noop).
    """
    n, m = len(state.ally_health), len(state.enemy_health)
    actions = [int(a) for a in joint_action]
    if len(actions) != n:
        raise InvalidInputError(f"expected {n} actions, got {len(actions)}")
    for a in actions:
        if not 0 <= a < 5 + m:
            raise InvalidInputError(f"action index {a} out of range")
    new = state.copy()
    enemy_before = new.enemy_alive.copy()
    ally_before = new.ally_alive.copy()
    cells = _living_cells(new)
    log = []

    for i, a in enumerate(actions):
        if new.ally_health[i] <= 0 or a not in MOVES:
            continue
        _try_move(new, new.ally_pos[i], *MOVES[a], cells)
    damage_dealt = 0.0
    for i, a in enumerate(actions):
        if a < 5 or new.ally_health[i] <= 0:
            continue
        j = a - 5
        if new.enemy_health[j] <= 0 or chebyshev(new.ally_pos[i], new.enemy_pos[j]) > config.ally_range:
            log.append({"ally": i, "target": j, "result": "noop"})
            continue
        dealt = min(config.ally_damage, new.enemy_health[j])
        new.enemy_health[j] -= dealt
        damage_dealt += dealt
        if new.enemy_health[j] <= 0:
            new.enemy_health[j] = 0.0
            cells.discard((int(new.enemy_pos[j][0]), int(new.enemy_pos[j][1])))

    health_before = new.ally_health.sum()
    _enemy_policy(new, config, cells, enemy_before)
    damage_taken = health_before - new.ally_health.sum()

    kills = int((enemy_before & ~new.enemy_alive).sum())
    losses = int((ally_before & ~new.ally_alive).sum())
    win = bool(not new.enemy_alive.any() and new.ally_alive.any())  # mutual wipe is a draw
    reward = WIN_REWARD * win + KILL_REWARD * kills + DEATH_PENALTY * losses
    if config.reward_mode == "dense":
        reward += damage_dealt - damage_taken
    new.step = state.step + 1
    done = bool(win or not new.ally_alive.any() or new.step >= new.horizon)
    info = {"win": win, "kills": kills, "losses": losses, "log": log,
            "terminated": bool(win or not new.ally_alive.any())}
    return new, float(reward), done, skirmish_observations(new, config), info


def observation_size(config):
    n, m = config.n_allies, config.n_enemies
    return 3 + 4 * (n - 1) + 5 * m + n


def skirmish_observation(state, ally, config):
    """Own health and position, then one slot per other unit, then the id one-hot.

    Ally slots: (visible, dr, dc, health). Enemy slots add an in-range flag.
    Offsets are divided by the sight radius so every entry lies in [-1, 1].
    """
    n, m = len(state.ally_health), len(state.enemy_health)
    obs = np.zeros(observation_size(config))
    idx = 3 + 4 * (n - 1) + 5 * m
    obs[idx + ally] = 1.0
    if state.ally_health[ally] <= 0:
        return obs
    me = state.ally_pos[ally]
    obs[0] = state.ally_health[ally] / state.max_health
    obs[1] = me[0] / (state.rows - 1)
    obs[2] = me[1] / (state.cols - 1)
    k = 3
    for i in range(n):
        if i == ally:
            continue
        if state.ally_health[i] > 0 and chebyshev(me, state.ally_pos[i]) <= config.sight:
            d = state.ally_pos[i] - me
            obs[k:k + 4] = (1.0, d[0] / config.sight, d[1] / config.sight,
                            state.ally_health[i] / state.max_health)
        k += 4
    for j in range(m):
        if state.enemy_health[j] > 0:
            dist = chebyshev(me, state.enemy_pos[j])
            if dist <= config.sight:
                d = state.enemy_pos[j] - me
                obs[k:k + 5] = (1.0, d[0] / config.sight, d[1] / config.sight,
                                state.enemy_health[j] / state.max_health,
                                float(dist <= config.ally_range))
        k += 5
    return obs


def skirmish_observations(state, config):
    return [skirmish_observation(state, i, config) for i in range(len(state.ally_health))]


def skirmish_features(state, ally, config):
    alive = state.ally_health[ally] > 0
    feats = {"health": float(state.ally_health[ally]), "alive": float(alive)}
    best = None
    visible = in_range = 0
    if alive:
        me = state.ally_pos[ally]
        for j in range(len(state.enemy_health)):
            if state.enemy_health[j] <= 0:
                continue
            dist = chebyshev(me, state.enemy_pos[j])
            if dist <= config.sight:
                visible += 1
                in_range += dist <= config.ally_range
                if best is None or (dist, j) < best[0]:
                    best = ((dist, j), state.enemy_pos[j] - me)
    feats["attack_available"] = float(in_range > 0)
    feats["n_enemies_visible"] = float(visible)
    feats["n_enemies_in_range"] = float(in_range)
    if best is None:
        feats.update(enemy_visible=0.0, enemy_dr=0.0, enemy_dc=0.0, enemy_dist=0.0)
    else:
        (dist, _), d = best
        feats.update(enemy_visible=1.0, enemy_dr=float(d[0]), enemy_dc=float(d[1]),
                     enemy_dist=float(dist))
    return feats


def skirmish_global_state(state):
    parts = []
    for pos, h in zip(np.concatenate([state.ally_pos, state.enemy_pos]),
                      np.concatenate([state.ally_health, state.enemy_health])):
        alive = h > 0
        parts += [pos[0] / (state.rows - 1) if alive else 0.0,
                  pos[1] / (state.cols - 1) if alive else 0.0,
                  h / state.max_health]
    return np.asarray(parts)


class SkirmishEnv:
    feature_names = FEATURES

    def __init__(self, config=None):
        self.config = config or SkirmishConfig()
        _check_config(self.config)
        self.n_agents = self.config.n_allies
        self.action_names = action_names(self.config.n_enemies)
        self.action_groups = {"move": MOVE_NAMES,
                              "attack": tuple(a for a in self.action_names if a.startswith("attack_"))}
        self.n_actions = len(self.action_names)
        self.obs_size = observation_size(self.config)
        self.state_size = 3 * (self.config.n_allies + self.config.n_enemies)
        self.horizon = self.config.horizon
        self.state = None

    def reset(self, seed):
        self.state, self._obs = skirmish_reset(self.config, seed)
        return self._obs

    def step(self, actions):
        self.state, reward, done, self._obs, info = skirmish_step(self.state, actions, self.config)
        return reward, done, info

    def get_obs(self):
        return self._obs

    def get_state(self):
        return skirmish_global_state(self.state)

    def get_avail(self):
        return np.stack([skirmish_available_actions(self.state, i, self.config)
                         for i in range(self.n_agents)])

    def get_features(self):
        return [skirmish_features(self.state, i, self.config) for i in range(self.n_agents)]
