"""Parameter-shared recurrent Q network, the softmax action distribution, and exploration."""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .tensor import GRU_KEYS, dense_forward, gru_forward, softmax_masked, uniform_init

AGENT_KEYS = ("W1", "b1") + GRU_KEYS + ("W2", "b2")


def init_agent_params(store, obs_size, n_actions, hidden, rng, prefix="agent."):
    """dense(obs -> hidden, relu) -> GRU(hidden) -> dense(hidden -> n_actions)."""
    store.add(prefix + "W1", uniform_init(rng, (hidden, obs_size), obs_size))
    store.add(prefix + "b1", uniform_init(rng, (hidden,), obs_size))
    for gate in "zrh":
        store.add(prefix + "W" + gate, uniform_init(rng, (hidden, 2 * hidden), 2 * hidden))
        store.add(prefix + "b" + gate, uniform_init(rng, (hidden,), 2 * hidden))
    store.add(prefix + "W2", uniform_init(rng, (n_actions, hidden), hidden))
    store.add(prefix + "b2", uniform_init(rng, (n_actions,), hidden))
    return store


def hidden_size(params):
    return params["W1"].shape[0]


def initial_hidden(n_rows, params):
    return np.zeros((n_rows, hidden_size(params)))


def q_forward(obs, hidden, params):
    """One step for a batch of agents: returns (q_values, new_hidden).

    ``params`` maps the AGENT_KEYS to arrays (see ``ParamStore.subset``).
    """
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape[-1] != params["W1"].shape[1]:
        raise ConfigurationError(
            f"observation length {obs.shape[-1]} != network input {params['W1'].shape[1]}")
    x = dense_forward(obs, params["W1"], params["b1"], "relu")
    h = gru_forward(x, hidden, params)[0]
    return dense_forward(h, params["W2"], params["b2"]), h


def _split_gru(params):
    H = params["W1"].shape[0]
    Wx = np.concatenate([params["Wz"][:, :H], params["Wr"][:, :H], params["Wh"][:, :H]])
    bx = np.concatenate([params["bz"], params["br"], params["bh"]])
    Wzr_h = np.concatenate([params["Wz"][:, H:], params["Wr"][:, H:]])
    return H, Wx, bx, Wzr_h, params["Wh"][:, H:]


def forward_sequence(obs_seq, params, keep_cache=True):
    """Unroll over time. ``obs_seq`` is (T, rows, obs); returns (q (T, rows, A), cache).

    Same maths as repeated :func:`q_forward`, but every input-side product is
    done once for the whole sequence.
    """
    T, rows = obs_seq.shape[:2]
    H, Wx, bx, Wzr_h, Whh = _split_gru(params)
    X = np.maximum(obs_seq @ params["W1"].T + params["b1"], 0.0)
    G = X @ Wx.T + bx  # (T, rows, 3H)
    hs = np.empty((T + 1, rows, H))
    hs[0] = 0.0
    if keep_cache:
        Z = np.empty((T, rows, H))
        R = np.empty((T, rows, H))
        C = np.empty((T, rows, H))
    for t in range(T):
        h = hs[t]
        gh = h @ Wzr_h.T
        g = G[t]
        z = 0.5 * (1.0 + np.tanh(0.5 * (g[:, :H] + gh[:, :H])))
        r = 0.5 * (1.0 + np.tanh(0.5 * (g[:, H:2 * H] + gh[:, H:])))
        cand = np.tanh(g[:, 2 * H:] + (r * h) @ Whh.T)
        hs[t + 1] = h + z * (cand - h)
        if keep_cache:
            Z[t], R[t], C[t] = z, r, cand
    qs = hs[1:] @ params["W2"].T + params["b2"]
    cache = (obs_seq, X, hs, Z, R, C) if keep_cache else None
    return qs, cache


def backward_sequence(grad_q, cache, params):
    """Backprop through time; returns a gradient dict keyed like AGENT_KEYS."""
    obs_seq, X, hs, Z, R, C = cache
    T, rows, H = Z.shape
    _, _, _, Wzr_h, Whh = _split_gru(params)
    Wz_x, Wr_x, Wh_x = params["Wz"][:, :H], params["Wr"][:, :H], params["Wh"][:, :H]
    A = grad_q.shape[-1]
    g2 = grad_q.reshape(-1, A)
    grads = {"W2": g2.T @ hs[1:].reshape(-1, H), "b2": g2.sum(axis=0)}
    dH = grad_q @ params["W2"]
    DZ = np.empty_like(Z)
    DR = np.empty_like(R)
    DC = np.empty_like(C)
    dh_next = np.zeros((rows, H))
    for t in range(T - 1, -1, -1):
        h = hs[t]
        z, r, cand = Z[t], R[t], C[t]
        dh = dH[t] + dh_next
        dz = dh * (cand - h) * z * (1.0 - z)
        dc = dh * z * (1.0 - cand * cand)
        d_rh = dc @ Whh
        dr = d_rh * h * r * (1.0 - r)
        dh_next = dh * (1.0 - z) + d_rh * r + np.concatenate([dz, dr], axis=1) @ Wzr_h
        DZ[t], DR[t], DC[t] = dz, dr, dc
    Hp = hs[:T].reshape(-1, H)
    X2 = X.reshape(-1, H)
    DZ2, DR2, DC2 = DZ.reshape(-1, H), DR.reshape(-1, H), DC.reshape(-1, H)
    RH = (R * hs[:T]).reshape(-1, H)
    grads["Wz"] = np.concatenate([DZ2.T @ X2, DZ2.T @ Hp], axis=1)
    grads["Wr"] = np.concatenate([DR2.T @ X2, DR2.T @ Hp], axis=1)
    grads["Wh"] = np.concatenate([DC2.T @ X2, DC2.T @ RH], axis=1)
    grads["bz"], grads["br"], grads["bh"] = DZ2.sum(axis=0), DR2.sum(axis=0), DC2.sum(axis=0)
    dX = (DZ2 @ Wz_x + DR2 @ Wr_x + DC2 @ Wh_x) * (X2 > 0)
    grads["W1"] = dX.T @ obs_seq.reshape(-1, obs_seq.shape[-1])
    grads["b1"] = dX.sum(axis=0)
    return grads


def phi(q, mask, temperature=1.0):
    """Action distribution of a Q vector: softmax over the available actions."""
    return softmax_masked(q, mask, temperature)


def greedy(q, mask):
    """Argmax over available entries; ties resolve to the lowest index."""
    return int(np.argmax(np.where(mask, q, -np.inf)))


def select_action(q, mask, epsilon, rng):
    mask = np.asarray(mask, dtype=bool)
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.choice(np.flatnonzero(mask)))
    return greedy(q, mask)


def epsilon_at(step, start=1.0, end=0.05, anneal_steps=50000):
    if anneal_steps <= 0:
        raise ConfigurationError("anneal_steps must be positive")
    if step >= anneal_steps:
        return end
    return start + max(step, 0) / anneal_steps * (end - start)
