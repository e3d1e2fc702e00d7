import itertools
import json

import numpy as np
import pytest

from light_marl.envs import (LbfConfig, LbfEnv, SkirmishConfig, SkirmishEnv, lbf_available_actions,
                             lbf_reset, lbf_step, make_env, skirmish_available_actions,
                             skirmish_reset, skirmish_step)
from light_marl.envs.lbf import LbfState, lbf_observation
from light_marl.envs.skirmish import SkirmishState
from light_marl.errors import ConfigurationError, InvalidInputError
from light_marl.io import load_trajectory_dataset, read_jsonl, trajectory_record


def random_actions(avail, rng):
    return [int(rng.choice(np.flatnonzero(m))) for m in avail]


def lbf_state(agents, foods, rows=10, cols=10, horizon=50):
    """agents: [(r, c, level)], foods: [(r, c, level)]"""
    return LbfState(rows=rows, cols=cols,
                    agent_pos=np.array([a[:2] for a in agents], dtype=np.int64),
                    agent_level=np.array([a[2] for a in agents], dtype=np.int64),
                    food_pos=np.array([f[:2] for f in foods], dtype=np.int64),
                    food_level=np.array([f[2] for f in foods], dtype=np.int64),
                    collected=np.zeros(len(foods), dtype=bool), horizon=horizon)


# --- LBF replay oracle -----------------------------------------------------------------

DELTAS = {1: (-1, 0), 2: (1, 0), 3: (0, 1), 4: (0, -1)}


def oracle_lbf_episode(agents, foods, rows, cols, action_seq):
    """Straight-line re-simulation on plain lists. Returns per-step rewards."""
    agents = [list(a) for a in agents]
    foods = [list(f) + [False] for f in foods]
    rewards = []
    for actions in action_seq:
        blocked = {(a[0], a[1]) for a in agents} | {(f[0], f[1]) for f in foods if not f[3]}
        claimed = set()
        moves = []
        for i, act in enumerate(actions):
            if act in DELTAS:
                t = (agents[i][0] + DELTAS[act][0], agents[i][1] + DELTAS[act][1])
                if 0 <= t[0] < rows and 0 <= t[1] < cols and t not in blocked and t not in claimed:
                    claimed.add(t)
                    moves.append((i, t))
        for i, t in moves:
            agents[i][0], agents[i][1] = t
        reward = 0.0
        for f in foods:
            if f[3]:
                continue
            near = [i for i, act in enumerate(actions)
                    if act == 5 and abs(agents[i][0] - f[0]) + abs(agents[i][1] - f[1]) == 1]
            if near and sum(agents[i][2] for i in near) >= f[2]:
                f[3] = True
                reward += sum(f[2] / agents[i][2] for i in near)
        rewards.append(reward)
    return rewards


def test_lbf_reset_deterministic():
    a, _ = lbf_reset(LbfConfig(), 7)
    b, _ = lbf_reset(LbfConfig(), 7)
    assert np.array_equal(a.agent_pos, b.agent_pos) and np.array_equal(a.food_pos, b.food_pos)
    assert np.array_equal(a.agent_level, b.agent_level) and np.array_equal(a.food_level, b.food_level)


def test_lbf_reset_four_agents_two_foods():
    s, obs = lbf_reset(LbfConfig(n_agents=4, n_foods=2), 3)
    cells = {tuple(p) for p in s.agent_pos} | {tuple(p) for p in s.food_pos}
    assert len(cells) == 6
    assert len(obs) == 4


def test_lbf_food_levels_solvable():
    cfg = LbfConfig()
    for seed in range(1000):
        s, _ = lbf_reset(cfg, seed)
        lv = s.agent_level
        pair_max = max(lv[i] + lv[j] for i, j in itertools.combinations(range(len(lv)), 2))
        assert s.food_level.max() <= pair_max
        assert set(lv.tolist()) <= {1, 2}


def test_lbf_reset_errors():
    with pytest.raises(ConfigurationError):
        lbf_reset(LbfConfig(rows=4), 0)
    with pytest.raises(ConfigurationError):
        lbf_reset(LbfConfig(rows=5, cols=5, n_agents=20, n_foods=10), 0)


def test_lbf_joint_load_collects():
    s = lbf_state([(4, 3, 2), (4, 5, 1), (0, 0, 1)], [(4, 4, 3)])
    new, reward, done, _ = lbf_step(s, [5, 5, 0])
    assert reward == 4.5
    assert new.collected[0] and done


def test_lbf_single_loader_below_level():
    s = lbf_state([(4, 3, 1), (0, 0, 1)], [(4, 4, 3), (9, 9, 1)])
    new, reward, done, _ = lbf_step(s, [5, 0])
    assert reward == 0.0 and not new.collected[0] and not done


def test_lbf_strict_threshold_flag():
    s = lbf_state([(4, 3, 2), (4, 5, 1)], [(4, 4, 3)])
    _, reward, _, _ = lbf_step(s, [5, 5], strict_threshold=True)
    assert reward == 0.0


def test_lbf_all_noop():
    s = lbf_state([(4, 3, 2), (1, 1, 1)], [(7, 7, 3)])
    new, reward, done, _ = lbf_step(s, [0, 0])
    assert reward == 0.0 and not done and new.step == 1
    assert np.array_equal(new.agent_pos, s.agent_pos) and np.array_equal(new.collected, s.collected)


def test_lbf_step_does_not_mutate():
    s = lbf_state([(4, 3, 2), (1, 1, 1)], [(7, 7, 3)])
    before = s.agent_pos.copy()
    lbf_step(s, [1, 2])
    assert np.array_equal(s.agent_pos, before) and s.step == 0


def test_lbf_contested_cell_lower_index_wins():
    s = lbf_state([(4, 3, 1), (4, 5, 1)], [(0, 0, 1)])
    new, _, _, _ = lbf_step(s, [3, 4])  # both head for (4, 4)
    assert tuple(new.agent_pos[0]) == (4, 4)
    assert tuple(new.agent_pos[1]) == (4, 5)


def test_lbf_bad_action():
    s = lbf_state([(4, 3, 1), (4, 5, 1)], [(0, 0, 1)])
    with pytest.raises(InvalidInputError):
        lbf_step(s, [6, 0])


def test_lbf_available_open_center():
    s = lbf_state([(5, 5, 1), (0, 0, 1)], [(9, 9, 1)])
    assert lbf_available_actions(s, 0).tolist() == [True, True, True, True, True, False]


def test_lbf_available_corner_next_to_food():
    s = lbf_state([(0, 0, 1), (5, 5, 1)], [(0, 1, 1)])
    # north and west hit walls, east hits the food
    assert lbf_available_actions(s, 0).tolist() == [True, False, True, False, False, True]


def test_lbf_reward_matches_replay_oracle():
    cfg = LbfConfig()
    rng = np.random.default_rng(0)
    for ep in range(1000):
        s, _ = lbf_reset(cfg, ep)
        agents = [(int(p[0]), int(p[1]), int(l)) for p, l in zip(s.agent_pos, s.agent_level)]
        foods = [(int(p[0]), int(p[1]), int(l)) for p, l in zip(s.food_pos, s.food_level)]
        seq, rewards, remaining = [], [], [len(foods)]
        done = False
        while not done:
            acts = random_actions([lbf_available_actions(s, i) for i in range(cfg.n_agents)], rng)
            # bias toward loading so foods actually get collected
            acts = [5 if lbf_available_actions(s, i)[5] and rng.random() < 0.7 else a
                    for i, a in enumerate(acts)]
            s, r, done, _ = lbf_step(s, acts)
            seq.append(acts)
            rewards.append(r)
            remaining.append(int((~s.collected).sum()))
        assert rewards == oracle_lbf_episode(agents, foods, cfg.rows, cfg.cols, seq)
        assert all(a >= b for a, b in zip(remaining, remaining[1:]))
        assert len(seq) <= cfg.horizon


def test_lbf_trajectory_determinism():
    def run():
        env = LbfEnv()
        env.reset(11)
        rng = np.random.default_rng(2)
        out = []
        done = False
        while not done:
            r, done, _ = env.step(random_actions(env.get_avail(), rng))
            out.append((r, np.concatenate(env.get_obs()).tobytes()))
        return out

    assert run() == run()


def test_lbf_observation_ignores_distant_cells():
    s = lbf_state([(2, 2, 1), (8, 8, 2)], [(3, 3, 2), (9, 0, 1)])
    base = lbf_observation(s, 0)
    moved = s.copy()
    moved.agent_pos[1] = (8, 9)
    moved.food_pos[1] = (9, 1)
    moved.food_level[1] = 3
    assert np.array_equal(lbf_observation(moved, 0), base)
    near = s.copy()
    near.food_level[0] = 1
    assert not np.array_equal(lbf_observation(near, 0), base)


def test_lbf_observation_window_zero_outside_grid():
    s = lbf_state([(0, 0, 2), (9, 9, 1)], [(5, 5, 1)])
    obs = lbf_observation(s, 0)
    grid = obs[:75].reshape(3, 5, 5)
    assert grid[0, 2, 2] == 2 and grid[2, 2, 2] == 1
    assert np.all(grid[:, :2, :] == 0) and np.all(grid[:, :, :2] == 0)
    assert np.all(obs >= 0)


# --- skirmish -----------------------------------------------------------------------------

def skirmish_state(allies, enemies, health=45.0, rows=8, cols=12):
    def hp(units):
        return np.array([u[2] if len(u) > 2 else health for u in units], dtype=float)

    return SkirmishState(rows=rows, cols=cols,
                         ally_pos=np.array([u[:2] for u in allies], dtype=np.int64), ally_health=hp(allies),
                         enemy_pos=np.array([u[:2] for u in enemies], dtype=np.int64),
                         enemy_health=hp(enemies), max_health=health)


def test_skirmish_reset():
    cfg = SkirmishConfig()
    a, obs = skirmish_reset(cfg, 4)
    b, _ = skirmish_reset(cfg, 4)
    assert np.array_equal(a.ally_pos, b.ally_pos) and np.array_equal(a.enemy_pos, b.enemy_pos)
    assert a.ally_alive.sum() + a.enemy_alive.sum() == 6
    assert np.all(a.ally_health == 45.0) and np.all(a.enemy_health == 45.0)
    assert np.all(a.ally_pos[:, 1] < cfg.band) and np.all(a.enemy_pos[:, 1] >= cfg.cols - cfg.band)
    assert len(obs) == 3


def test_skirmish_reset_errors():
    with pytest.raises(ConfigurationError):
        skirmish_reset(SkirmishConfig(rows=1, n_allies=5), 0)
    with pytest.raises(ConfigurationError):
        skirmish_reset(SkirmishConfig(n_enemies=0), 0)


def test_skirmish_win_kill_death_reward():
    cfg = SkirmishConfig()
    # allies 1 and 2 finish the last two enemies, which return fire on fragile ally 0
    s = skirmish_state([(3, 6, 6.0), (3, 4), (4, 4)],
                       [(3, 5, 6.0), (4, 5, 6.0)])
    new, reward, done, _, info = skirmish_step(s, [0, 5, 6], cfg)
    assert info["kills"] == 2 and info["losses"] == 1 and info["win"]
    assert reward == 215.0 and done


def test_skirmish_no_event_zero_reward():
    cfg = SkirmishConfig()
    s = skirmish_state([(0, 0)], [(7, 11)])
    _, reward, done, _, _ = skirmish_step(s, [0], cfg)
    assert reward == 0.0 and not done


def test_skirmish_attack_on_dead_target_is_logged_noop():
    cfg = SkirmishConfig()
    s = skirmish_state([(3, 4)], [(3, 5, 0.0), (7, 11)])
    new, reward, _, _, info = skirmish_step(s, [5], cfg)
    assert info["log"] == [{"ally": 0, "target": 0, "result": "noop"}]
    assert new.enemy_health[1] == 45.0


def test_skirmish_available_actions():
    cfg = SkirmishConfig()
    s = skirmish_state([(4, 6), (0, 0, 0.0)], [(4, 8), (0, 11)])
    m = skirmish_available_actions(s, 0, cfg)
    assert m.tolist() == [True, True, True, True, True, True, False]
    assert skirmish_available_actions(s, 1, cfg).sum() == 1
    far = skirmish_state([(4, 0)], [(4, 11), (0, 11)])
    assert not skirmish_available_actions(far, 0, cfg)[5:].any()
    corner = skirmish_state([(0, 0)], [(7, 11)])
    assert skirmish_available_actions(corner, 0, cfg)[:5].tolist() == [True, False, True, True, False]


def run_skirmish_episode(env, seed, rng):
    env.reset(seed)
    total, done = 0.0, False
    health = [env.state.ally_health.copy(), env.state.enemy_health.copy()]
    info = {}
    while not done:
        r, done, info = env.step(random_actions(env.get_avail(), rng))
        total += r
        for old, new in zip(health, (env.state.ally_health, env.state.enemy_health)):
            assert np.all(new <= old) and np.all(new >= 0)
            old[:] = new
    if info["win"]:
        assert not env.state.enemy_alive.any()
    return total, info


def test_skirmish_episode_accounting():
    env = SkirmishEnv()
    rng = np.random.default_rng(0)
    for ep in range(1000):
        total, info = run_skirmish_episode(env, ep, rng)
        kills = int((~env.state.enemy_alive).sum())
        losses = int((~env.state.ally_alive).sum())
        assert total == 200.0 * info["win"] + 10.0 * kills - 5.0 * losses


def test_skirmish_determinism():
    a = run_skirmish_episode(SkirmishEnv(), 5, np.random.default_rng(1))
    b = run_skirmish_episode(SkirmishEnv(), 5, np.random.default_rng(1))
    assert a[0] == b[0]


def test_skirmish_observations_bounded():
    env = SkirmishEnv()
    rng = np.random.default_rng(3)
    for ep in range(20):
        env.reset(ep)
        done = False
        while not done:
            for o in env.get_obs():
                assert o.shape == (env.obs_size,) and np.all(np.abs(o) <= 1.0)
            _, done, _ = env.step(random_actions(env.get_avail(), rng))


def test_make_env_and_features():
    env = make_env("skirmish", n_allies=2, n_enemies=1)
    env.reset(0)
    assert env.n_actions == 6 and env.action_names[-1] == "attack_0"
    feats = env.get_features()[0]
    assert set(feats) == set(env.feature_names)
    lenv = make_env("lbf", n_agents=4, n_foods=2)
    lenv.reset(0)
    assert set(lenv.get_features()[0]) == set(lenv.feature_names)
    with pytest.raises(ConfigurationError):
        make_env("smac")


# --- trajectory dumps ---------------------------------------------------------------------

def test_trajectory_record_round_trip(tmp_path):
    path = tmp_path / "t.jsonl"
    recs = [trajectory_record(0, 0, 1, {"health": 10.0}, [True, False], "noop"),
            trajectory_record(0, 1, 1, {"health": 9.0}, [True, True], "north")]
    with open(path, "w") as f:
        for r in recs:
            f.write(json.dumps(r) + "\n")
        f.write('{"episode": 0, "st')  # torn write
    assert len(read_jsonl(path)) == 2
    assert load_trajectory_dataset(path) == [({"health": 10.0}, "noop"), ({"health": 9.0}, "north")]
