"""Episode collection, replay, the combined TD + individual loss, and the training loop."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import agent as agent_net
from .config import TrainConfig
from .envs import make_env
from .errors import ConfigurationError, InvalidInputError, RuleSyntaxError, TrainingAbort
from .io import append_jsonl, trajectory_record
from .intrinsic import IntrinsicRecord, intrinsic_reward, shaped_team_reward
from .knowledge.rules import RuleSet, match, parse_rules
from .mixer import init_qmix_params, qmix_backward, qmix_forward, vdn_mix
from .tensor import ParamStore, clip_grad_norm, load_params, rmsprop_step, save_params

log = logging.getLogger(__name__)

RULES_DIR = Path(__file__).parent / "rules"


# --- data -------------------------------------------------------------------------

@dataclass
class Episode:
    obs: np.ndarray  # (T+1, n, obs)
    avail: np.ndarray  # (T+1, n, A) bool
    state: np.ndarray  # (T+1, S)
    actions: np.ndarray  # (T, n)
    agent_dists: np.ndarray  # (T, n, A)
    prefs: np.ndarray  # (T, n, A), zeros where no rule fired
    has_pref: np.ndarray  # (T, n) bool
    intrinsic: np.ndarray  # (T, n)
    reward: np.ndarray  # (T,) extrinsic team reward
    shaped: np.ndarray  # (T,) r_ex + lam * mean(intrinsic)
    terminated: np.ndarray  # (T,) bool, env-level termination (no bootstrap)
    lam: float = 0.0
    win: bool = False
    rule_names: list = field(default_factory=list)

    @property
    def length(self):
        return len(self.actions)

    @property
    def done(self):
        d = np.zeros(self.length, dtype=bool)
        d[-1] = True
        return d

    @property
    def ep_return(self):
        return float(self.reward.sum())


class ReplayBuffer:
    """FIFO store of whole episodes with uniform sampling without replacement."""

    def __init__(self, capacity=5000):
        self.capacity = capacity
        self._episodes = deque(maxlen=capacity)

    def __len__(self):
        return len(self._episodes)

    def add(self, episode):
        self._episodes.append(episode)

    def can_sample(self, batch_size):
        return len(self._episodes) >= batch_size

    def sample(self, batch_size, rng):
        if not self.can_sample(batch_size):
            raise InvalidInputError(f"buffer holds {len(self)} episodes, need {batch_size}")
        idx = rng.choice(len(self._episodes), size=batch_size, replace=False)
        return [self._episodes[i] for i in idx]

    def __getitem__(self, i):
        return self._episodes[i]


# --- learner -------------------------------------------------------------------------

class Learner:
    """Online and target parameters for the shared agent network and the mixer."""

    def __init__(self, n_agents, obs_size, n_actions, state_size, mixer="vdn", hidden=64,
                 embed=32, seed=0, params=None):
        if mixer not in ("vdn", "qmix"):
            raise ConfigurationError(f"unknown mixer {mixer!r}")
        self.n_agents, self.obs_size, self.n_actions = n_agents, obs_size, n_actions
        self.state_size, self.mixer, self.hidden, self.embed = state_size, mixer, hidden, embed
        if params is None:
            rng = np.random.default_rng(seed)
            params = ParamStore()
            agent_net.init_agent_params(params, obs_size, n_actions, hidden, rng)
            if mixer == "qmix":
                init_qmix_params(params, n_agents, state_size, embed, rng)
        self.params = params
        self.target = params.copy()

    @classmethod
    def for_env(cls, env, config, seed=None):
        return cls(env.n_agents, env.obs_size, env.n_actions, env.state_size, config.mixer,
                   config.hidden, config.mixing_embed, config.seed if seed is None else seed)

    def agent_params(self, target=False):
        return (self.target if target else self.params).subset("agent.")

    def mixer_params(self, target=False):
        return (self.target if target else self.params).subset("mixer.")

    def sync_target(self):
        self.target.load_values(self.params)

    def meta(self):
        return {"n_agents": self.n_agents, "obs_size": self.obs_size, "n_actions": self.n_actions,
                "state_size": self.state_size, "mixer": self.mixer, "hidden": self.hidden,
                "embed": self.embed}

    def save(self, path, extra_meta=None, binary=False):
        meta = dict(self.meta())
        meta.update(extra_meta or {})
        return save_params(path, self.params, meta, binary=binary)

    @classmethod
    def load(cls, path):
        params, meta = load_params(path)
        learner = cls(meta["n_agents"], meta["obs_size"], meta["n_actions"], meta["state_size"],
                      meta["mixer"], meta["hidden"], meta["embed"], params=params)
        return learner, meta


# --- knowledge plumbing ------------------------------------------------------------------

def resolve_rules_path(path, base_dir=None):
    if not path:
        return None
    p = Path(path)
    candidates = [p]
    if base_dir is not None and not p.is_absolute():
        candidates.append(Path(base_dir) / p)
    candidates.append(RULES_DIR / p.name)
    for c in candidates:
        if c.exists():
            return c
    raise ConfigurationError(f"rule file {path!r} not found")


def load_rules(path, env, base_dir=None):
    resolved = resolve_rules_path(path, base_dir)
    if resolved is None:
        return RuleSet((), tuple(env.action_names), dict(env.action_groups))
    try:
        return parse_rules(resolved.read_text(), env.action_names, env.feature_names, env.action_groups)
    except RuleSyntaxError as exc:
        raise ConfigurationError(f"{resolved}: {exc}") from exc


class Knowledge:
    """Rule lookup for one run, with the random-preference ablation."""

    def __init__(self, rules, random_preferences=False, rng=None):
        self.rules = rules
        self.random_preferences = random_preferences
        self.rng = rng if rng is not None else np.random.default_rng(0)

    @property
    def active(self):
        return self.rules is not None and len(self.rules) > 0

    def __call__(self, features, available):
        if not self.active:
            return None, None
        rule, pref = match(self.rules, features, available)
        if pref is not None and self.random_preferences:
            pref = np.zeros(len(available))
            pref[available] = self.rng.dirichlet(np.ones(int(np.sum(available))))
        return (rule.name if rule is not None else None), pref


# --- collection -----------------------------------------------------------------------

def collect_episode(env, learner, knowledge, epsilon, seed, rng, lam=0.5, temperature=1.0,
                    intrinsic_source="policy", records=None):
    """Run one episode with epsilon-greedy actions and intrinsic-reward bookkeeping.

    ``records``, when a list, receives one :class:`IntrinsicRecord` per agent-step.
    """
    env.reset(seed)
    params = learner.agent_params()
    n, A = env.n_agents, env.n_actions
    h = agent_net.initial_hidden(n, params)
    obs_l, avail_l, state_l = [], [], []
    act_l, dist_l, pref_l, has_l, intr_l, rew_l, shaped_l, term_l, names = ([] for _ in range(9))
    done, info = False, {}
    t = 0
    while not done:
        obs = np.asarray(env.get_obs())
        avail = env.get_avail()
        obs_l.append(obs)
        avail_l.append(avail)
        state_l.append(env.get_state())
        q, h = agent_net.q_forward(obs, h, params)
        dists = agent_net.phi(q, avail, temperature)
        actions = np.array([agent_net.select_action(q[i], avail[i], epsilon, rng) for i in range(n)])
        feats = env.get_features() if knowledge is not None and knowledge.active else None
        prefs = np.zeros((n, A))
        has = np.zeros(n, dtype=bool)
        intr = np.zeros(n)
        step_names = []
        for i in range(n):
            name, pref = knowledge(feats[i], avail[i]) if feats is not None else (None, None)
            step_names.append(name)
            if pref is not None:
                prefs[i], has[i] = pref, True
            mine = dists[i]
            if intrinsic_source == "executed":
                mine = np.zeros(A)
                mine[actions[i]] = 1.0
            intr[i] = intrinsic_reward(pref, mine)
            if records is not None:
                records.append(IntrinsicRecord(i, t, name, pref, dists[i].copy(), intr[i]))
        r_ex, done, info = env.step(actions)
        act_l.append(actions)
        dist_l.append(dists)
        pref_l.append(prefs)
        has_l.append(has)
        intr_l.append(intr)
        rew_l.append(r_ex)
        shaped_l.append(shaped_team_reward(r_ex, intr, lam))
        term_l.append(bool(info.get("terminated", False)))
        names.append(step_names)
        t += 1
    obs_l.append(np.asarray(env.get_obs()))
    avail_l.append(env.get_avail())
    state_l.append(env.get_state())
    return Episode(
        obs=np.stack(obs_l), avail=np.stack(avail_l), state=np.stack(state_l),
        actions=np.stack(act_l).astype(np.int64), agent_dists=np.stack(dist_l),
        prefs=np.stack(pref_l), has_pref=np.stack(has_l), intrinsic=np.stack(intr_l),
        reward=np.asarray(rew_l, dtype=np.float64), shaped=np.asarray(shaped_l, dtype=np.float64),
        terminated=np.asarray(term_l, dtype=bool), lam=lam, win=bool(info.get("win", False)),
        rule_names=names)


# --- losses ----------------------------------------------------------------------------

@dataclass
class Batch:
    obs: np.ndarray  # (T+1, B, n, obs)
    avail: np.ndarray  # (T+1, B, n, A)
    state: np.ndarray  # (T+1, B, S)
    actions: np.ndarray  # (T, B, n)
    intrinsic: np.ndarray  # (T, B, n)
    reward: np.ndarray  # (T, B)
    shaped: np.ndarray  # (T, B)
    terminated: np.ndarray  # (T, B)
    mask: np.ndarray  # (T, B) 1 for real steps
    prefs: np.ndarray  # (T, B, n, A)
    has_pref: np.ndarray  # (T, B, n)
    lam: np.ndarray  # (B,)


def make_batch(episodes):
    if not episodes:
        raise InvalidInputError("empty batch")
    B = len(episodes)
    T = max(ep.length for ep in episodes)
    n, A = episodes[0].avail.shape[1:]
    obs_dim = episodes[0].obs.shape[-1]
    S = episodes[0].state.shape[-1]
    obs = np.zeros((T + 1, B, n, obs_dim))
    avail = np.zeros((T + 1, B, n, A), dtype=bool)
    avail[..., 0] = True  # padded steps keep noop available
    state = np.zeros((T + 1, B, S))
    actions = np.zeros((T, B, n), dtype=np.int64)
    intrinsic = np.zeros((T, B, n))
    reward = np.zeros((T, B))
    shaped = np.zeros((T, B))
    terminated = np.zeros((T, B), dtype=bool)
    mask = np.zeros((T, B))
    prefs = np.zeros((T, B, n, A))
    has_pref = np.zeros((T, B, n), dtype=bool)
    for b, ep in enumerate(episodes):
        L = ep.length
        obs[:L + 1, b] = ep.obs
        avail[:L + 1, b] = ep.avail
        state[:L + 1, b] = ep.state
        actions[:L, b] = ep.actions
        intrinsic[:L, b] = ep.intrinsic
        reward[:L, b] = ep.reward
        shaped[:L, b] = ep.shaped
        terminated[:L, b] = ep.terminated
        mask[:L, b] = 1.0
        prefs[:L, b] = ep.prefs
        has_pref[:L, b] = ep.has_pref
    lam = np.array([ep.lam for ep in episodes])
    return Batch(obs, avail, state, actions, intrinsic, reward, shaped, terminated, mask, prefs,
                 has_pref, lam)


@dataclass
class LossResult:
    loss_td: float
    loss_i: np.ndarray  # per agent
    total: float
    grads: dict


def _mix_forward(learner, qs, state, target):
    """qs (rows, n), state (rows, S) -> (q_tot, cache)."""
    if learner.mixer == "vdn":
        return vdn_mix(qs), None
    return qmix_forward(qs, state, learner.mixer_params(target))


def compute_losses(episodes, learner, gamma=0.99, lambda_k=0.02, individual="sum",
                   recompute_intrinsic=False, temperature=1.0, need_grads=True):
    """TD loss on the mixed value plus lambda_k times the per-agent intrinsic TD losses.

    Bootstrap targets come only from the target parameters; the next joint
    action is each agent's greedy action under its target Q values.
    """
    batch = episodes if isinstance(episodes, Batch) else make_batch(episodes)
    T, B, n = batch.actions.shape
    A = batch.avail.shape[-1]
    p_online = learner.agent_params()
    p_target = learner.agent_params(target=True)

    obs_rows = batch.obs.reshape(T + 1, B * n, -1)
    q_on, caches = agent_net.forward_sequence(obs_rows[:T], p_online, keep_cache=need_grads)
    q_tg, _ = agent_net.forward_sequence(obs_rows, p_target, keep_cache=False)
    q_on = q_on.reshape(T, B, n, A)
    q_tg = q_tg.reshape(T + 1, B, n, A)

    q_taken = np.take_along_axis(q_on, batch.actions[..., None], axis=-1)[..., 0]  # (T, B, n)
    next_avail = batch.avail[1:]
    next_max = np.where(next_avail, q_tg[1:], -np.inf).max(axis=-1)  # (T, B, n)

    intrinsic, shaped = batch.intrinsic, batch.shaped
    if recompute_intrinsic:
        dists = agent_net.phi(q_on, batch.avail[:T], temperature)
        dist = np.sqrt(np.sum((batch.prefs - dists) ** 2, axis=-1))
        intrinsic = np.where(batch.has_pref, -dist, 0.0) * batch.mask[..., None]
        shaped = batch.reward + batch.lam[None, :] * intrinsic.mean(axis=-1)

    rows = T * B
    q_tot, mix_cache = _mix_forward(learner, q_taken.reshape(rows, n), batch.state[:T].reshape(rows, -1), False)
    next_tot, _ = _mix_forward(learner, next_max.reshape(rows, n), batch.state[1:].reshape(rows, -1), True)
    q_tot = q_tot.reshape(T, B)
    next_tot = next_tot.reshape(T, B)

    mask = batch.mask
    n_valid = mask.sum()
    cont = 1.0 - batch.terminated.astype(np.float64)
    td = (q_tot - (shaped + gamma * cont * next_tot)) * mask
    loss_td = float(np.sum(td * td) / n_valid)

    td_i = (q_taken - (intrinsic + gamma * cont[..., None] * next_max)) * mask[..., None]
    loss_i = np.sum(td_i * td_i, axis=(0, 1)) / n_valid
    coef = lambda_k if individual == "sum" else lambda_k / n
    total = loss_td + coef * float(loss_i.sum())
    if not np.isfinite(total):
        raise TrainingAbort("non-finite loss", {"loss_td": loss_td, "loss_i": loss_i.tolist()})

    grads = {}
    if need_grads:
        g_tot = (2.0 / n_valid) * td
        if learner.mixer == "vdn":
            g_taken = np.repeat(g_tot[..., None], n, axis=-1)
        else:
            g_rows, mix_grads = qmix_backward(g_tot.reshape(rows), mix_cache, learner.mixer_params())
            g_taken = g_rows.reshape(T, B, n)
            grads.update({"mixer." + k: v for k, v in mix_grads.items()})
        g_taken = g_taken + coef * (2.0 / n_valid) * td_i
        g_q = np.zeros((T, B, n, A))
        np.put_along_axis(g_q, batch.actions[..., None], g_taken[..., None], axis=-1)
        agent_grads = agent_net.backward_sequence(g_q.reshape(T, B * n, A), caches, p_online)
        grads.update({"agent." + k: v for k, v in agent_grads.items()})
    return LossResult(loss_td, loss_i, total, grads)


# --- evaluation ----------------------------------------------------------------------------

def run_greedy_episode(env, learner, seed, knowledge=None, temperature=1.0, records=None):
    """Greedy rollout. Returns (episode_return, length, win, rule_steps, consistent_steps)."""
    env.reset(seed)
    params = learner.agent_params()
    h = agent_net.initial_hidden(env.n_agents, params)
    total, steps, done, info = 0.0, 0, False, {}
    rule_steps = consistent = 0
    use_rules = knowledge is not None and knowledge.active
    while not done:
        obs = np.asarray(env.get_obs())
        avail = env.get_avail()
        q, h = agent_net.q_forward(obs, h, params)
        actions = [agent_net.greedy(q[i], avail[i]) for i in range(env.n_agents)]
        if use_rules or records is not None:
            feats = env.get_features() if use_rules else None
            dists = agent_net.phi(q, avail, temperature) if records is not None else None
            for i in range(env.n_agents):
                name, pref = knowledge(feats[i], avail[i]) if use_rules else (None, None)
                if pref is not None:
                    rule_steps += 1
                    consistent += bool(pref[actions[i]] > 0)
                if records is not None:
                    records.append(IntrinsicRecord(i, steps, name, pref, dists[i].copy(),
                                                   intrinsic_reward(pref, dists[i])))
        r, done, info = env.step(actions)
        total += r
        steps += 1
    return total, steps, bool(info.get("win", False)), rule_steps, consistent


def evaluate(env, learner, seeds, knowledge=None, temperature=1.0):
    """Greedy test episodes, one per seed, stepped side by side.

    Returns mean return, win rate, mean length and the rule-consistency share.
    """
    envs = [type(env)(env.config) for _ in seeds]
    for e, s in zip(envs, seeds):
        e.reset(s)
    params = learner.agent_params()
    n = env.n_agents
    h = agent_net.initial_hidden(len(envs) * n, params)
    rets = np.zeros(len(envs))
    lens = np.zeros(len(envs), dtype=np.int64)
    wins = np.zeros(len(envs), dtype=bool)
    live = list(range(len(envs)))
    use_rules = knowledge is not None and knowledge.active
    rule_steps = consistent = 0
    while live:
        obs = np.concatenate([np.asarray(envs[k].get_obs()) for k in live])
        avail = np.concatenate([envs[k].get_avail() for k in live])
        rows = np.concatenate([np.arange(k * n, (k + 1) * n) for k in live])
        q, h_live = agent_net.q_forward(obs, h[rows], params)
        h[rows] = h_live
        greedy = np.argmax(np.where(avail, q, -np.inf), axis=1)
        still = []
        for slot, k in enumerate(live):
            acts = greedy[slot * n:(slot + 1) * n]
            if use_rules:
                feats = envs[k].get_features()
                for i in range(n):
                    _, pref = knowledge(feats[i], avail[slot * n + i])
                    if pref is not None:
                        rule_steps += 1
                        consistent += bool(pref[acts[i]] > 0)
            r, done, info = envs[k].step(acts)
            rets[k] += r
            lens[k] += 1
            if done:
                wins[k] = bool(info.get("win", False))
            else:
                still.append(k)
        live = still
    return {
        "mean_return": float(np.mean(rets)),
        "win_rate": float(np.mean(wins)),
        "mean_ep_len": float(np.mean(lens)),
        "consistency": (consistent / rule_steps) if rule_steps else None,
        "rule_steps": int(rule_steps),
    }


def alignment_stats(learner, rules, env, n_episodes=100, seed=0):
    """Mean greedy episode length and the share of rule-firing steps where the
    chosen action has positive weight in the rule's preference."""
    knowledge = Knowledge(rules)
    seeds = [int(s) for s in np.random.default_rng(seed).integers(0, 2**31 - 1, size=n_episodes)]
    stats = evaluate(env, learner, seeds, knowledge)
    return {"avg_steps": stats["mean_ep_len"], "consistency_fraction": stats["consistency"],
            "rule_steps": stats["rule_steps"]}


def intrinsic_curve(learner, rules, env, seed, temperature=1.0):
    """Per-agent intrinsic rewards along one greedy test episode (never fed back)."""
    records = []
    run_greedy_episode(env, learner, seed, Knowledge(rules), temperature, records=records)
    return records


def dump_trajectories(env, path, n_episodes, seed=0, learner=None, epsilon=1.0):
    """Write one trajectory record per (agent, step) for rule extraction.

    Without a learner the behaviour is uniform over available actions;
    with one it is epsilon-greedy on the learner's Q values.
    """
    rng = np.random.default_rng(seed)
    params = learner.agent_params() if learner is not None else None
    count = 0
    for ep in range(n_episodes):
        env.reset(int(rng.integers(0, 2**31 - 1)))
        h = agent_net.initial_hidden(env.n_agents, params) if params is not None else None
        done, t, records = False, 0, []
        while not done:
            avail = env.get_avail()
            feats = env.get_features()
            if params is not None:
                q, h = agent_net.q_forward(np.asarray(env.get_obs()), h, params)
                actions = [agent_net.select_action(q[i], avail[i], epsilon, rng) for i in range(env.n_agents)]
            else:
                actions = [int(rng.choice(np.flatnonzero(m))) for m in avail]
            for i, a in enumerate(actions):
                records.append(trajectory_record(ep, t, i, feats[i], avail[i], env.action_names[a]))
            _, done, _ = env.step(actions)
            t += 1
        append_jsonl(path, records)
        count += len(records)
    return count


# --- training loop -------------------------------------------------------------------------

@dataclass
class TrainResult:
    learner: Learner
    metrics: list
    env_steps: int
    updates: int


def _seed_streams(seed):
    ss = np.random.SeedSequence(seed)
    init, env_seeds, explore, sample, knowledge, test = ss.spawn(6)
    return {
        "init": int(init.generate_state(1)[0]),
        "env": np.random.default_rng(env_seeds),
        "explore": np.random.default_rng(explore),
        "sample": np.random.default_rng(sample),
        "knowledge": np.random.default_rng(knowledge),
        "test": [int(x) for x in np.random.default_rng(test).integers(0, 2**31 - 1, size=1024)],
    }


def train(config: TrainConfig, rules=None, out_dir=None, metrics_sink=None, rules_base_dir=None,
          use_knowledge=True):
    """Train one run; returns a :class:`TrainResult`.

    ``rules`` overrides ``config.rules``. ``metrics_sink`` is called with each
    metrics record (the CLI appends them to a JSON-lines file).
    ``use_knowledge=False`` skips rule lookups altogether.
    """
    cfg = config.effective()
    env = make_env(cfg.env, **cfg.env_config().__dict__)
    test_env = make_env(cfg.env, **cfg.env_config().__dict__)
    streams = _seed_streams(cfg.seed)
    learner = Learner.for_env(env, cfg, seed=streams["init"])
    if rules is None:
        rules = load_rules(cfg.rules, env, rules_base_dir)
    # consistency is always measured against the configured rules, even when
    # training ignores them
    eval_knowledge = Knowledge(rules)
    knowledge = None
    # with both coefficients at zero the rules cannot touch learning, so the
    # run is exactly the knowledge-free one
    inert = cfg.lam == 0 and cfg.lambda_k == 0
    if use_knowledge and cfg.ablation != "no_knowledge" and not inert:
        knowledge = Knowledge(rules, random_preferences=cfg.ablation == "random_knowledge",
                              rng=streams["knowledge"])
    buffer = ReplayBuffer(cfg.buffer_size)
    test_seeds = streams["test"][:cfg.test_episodes]

    metrics = []
    env_steps = updates = episodes = 0
    next_test = 0
    td_hist, li_hist = [], []
    while True:
        finished = env_steps >= cfg.total_steps
        if env_steps >= next_test or finished:
            stats = evaluate(test_env, learner, test_seeds, eval_knowledge, cfg.temperature)
            rec = {
                "env_step": env_steps,
                "mean_return": stats["mean_return"],
                "win_rate": stats["win_rate"],
                "mean_ep_len": stats["mean_ep_len"],
                "loss_td": float(np.mean(td_hist)) if td_hist else None,
                "loss_i_mean": float(np.mean(li_hist)) if li_hist else None,
                "epsilon": agent_net.epsilon_at(env_steps, cfg.eps_start, cfg.eps_end, cfg.eps_anneal),
                "consistency": stats["consistency"],
            }
            td_hist, li_hist = [], []
            metrics.append(rec)
            if metrics_sink is not None:
                metrics_sink(rec)
            log.debug("step %d return %.3f win %.2f", env_steps, rec["mean_return"], rec["win_rate"])
            while next_test <= env_steps:
                next_test += cfg.test_interval
        if finished:
            break

        eps = agent_net.epsilon_at(env_steps, cfg.eps_start, cfg.eps_end, cfg.eps_anneal)
        ep = collect_episode(env, learner, knowledge, eps, int(streams["env"].integers(0, 2**31 - 1)),
                             streams["explore"], lam=cfg.lam, temperature=cfg.temperature,
                             intrinsic_source=cfg.intrinsic_source)
        buffer.add(ep)
        env_steps += ep.length
        episodes += 1
        if buffer.can_sample(cfg.batch_size):
            batch = buffer.sample(cfg.batch_size, streams["sample"])
            res = compute_losses(batch, learner, cfg.gamma, cfg.lambda_k, cfg.individual_loss,
                                 cfg.recompute_intrinsic, cfg.temperature)
            clip_grad_norm(res.grads, cfg.grad_clip)
            rmsprop_step(learner.params, res.grads, cfg.lr, cfg.rms_decay, cfg.rms_eps)
            updates += 1
            td_hist.append(res.loss_td)
            li_hist.append(float(np.mean(res.loss_i)))
            if updates % cfg.target_interval == 0:
                learner.sync_target()

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        learner.save(out / ("model.npz" if cfg.binary_checkpoint else "model.ckpt"),
                     {"config": config.to_text()}, binary=cfg.binary_checkpoint)
    return TrainResult(learner, metrics, env_steps, updates)
