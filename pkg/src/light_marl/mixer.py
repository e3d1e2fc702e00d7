"""Mixing heads that combine per-agent chosen-action values into a team value.

``vdn`` adds them up. ``qmix`` feeds them through a one-hidden-layer network
whose weights come from hypernetworks on the global state; absolute values on
those weights keep the team value non-decreasing in every agent's value.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .tensor import elu, elu_grad, uniform_init

QMIX_KEYS = ("W1w", "W1b", "B1w", "B1b", "W2w", "W2b", "V1w", "V1b", "V2w", "V2b")


def vdn_mix(qs):
    return np.sum(qs, axis=-1)


def vdn_backward(grad_tot, n_agents):
    return np.repeat(np.asarray(grad_tot, dtype=np.float64)[..., None], n_agents, axis=-1)


def init_qmix_params(store, n_agents, state_size, embed, rng, prefix="mixer."):
    s = state_size
    store.add(prefix + "W1w", uniform_init(rng, (n_agents * embed, s), s))
    store.add(prefix + "W1b", uniform_init(rng, (n_agents * embed,), s))
    store.add(prefix + "B1w", uniform_init(rng, (embed, s), s))
    store.add(prefix + "B1b", uniform_init(rng, (embed,), s))
    store.add(prefix + "W2w", uniform_init(rng, (embed, s), s))
    store.add(prefix + "W2b", uniform_init(rng, (embed,), s))
    store.add(prefix + "V1w", uniform_init(rng, (embed, s), s))
    store.add(prefix + "V1b", uniform_init(rng, (embed,), s))
    store.add(prefix + "V2w", uniform_init(rng, (1, embed), embed))
    store.add(prefix + "V2b", uniform_init(rng, (1,), embed))
    return store


def qmix_forward(qs, state, params):
    """Batched team value: qs (B, n), state (B, S) -> (Q_tot (B,), cache)."""
    qs = np.atleast_2d(np.asarray(qs, dtype=np.float64))
    state = np.atleast_2d(np.asarray(state, dtype=np.float64))
    B, n = qs.shape
    embed = params["B1w"].shape[0]
    if state.shape[-1] != params["W1w"].shape[1]:
        raise ConfigurationError(
            f"state length {state.shape[-1]} != hypernetwork input {params['W1w'].shape[1]}")
    if params["W1w"].shape[0] != n * embed:
        raise ConfigurationError(f"mixer built for {params['W1w'].shape[0] // embed} agents, got {n}")
    a1 = state @ params["W1w"].T + params["W1b"]
    w1 = np.abs(a1).reshape(B, n, embed)
    b1 = state @ params["B1w"].T + params["B1b"]
    pre = np.einsum("bn,bne->be", qs, w1) + b1
    hid = elu(pre)
    a2 = state @ params["W2w"].T + params["W2b"]
    w2 = np.abs(a2)
    v1 = np.maximum(state @ params["V1w"].T + params["V1b"], 0.0)
    v = v1 @ params["V2w"].T + params["V2b"]
    q_tot = np.sum(hid * w2, axis=-1) + v[:, 0]
    return q_tot, (qs, state, a1, w1, pre, hid, a2, w2, v1)


def qmix_mix(qs, state, params):
    qs = np.asarray(qs, dtype=np.float64)
    out = qmix_forward(qs, state, params)[0]
    return out[0] if qs.ndim == 1 else out


def qmix_backward(grad_tot, cache, params):
    """Returns (grad_qs (B, n), parameter gradient dict)."""
    qs, state, a1, w1, pre, hid, a2, w2, v1 = cache
    B, n = qs.shape
    g = np.asarray(grad_tot, dtype=np.float64).reshape(B)
    grads = {}
    d_hid = g[:, None] * w2
    d_a2 = g[:, None] * hid * np.sign(a2)
    grads["W2w"] = d_a2.T @ state
    grads["W2b"] = d_a2.sum(axis=0)
    d_v = g[:, None]
    grads["V2w"] = d_v.T @ v1
    grads["V2b"] = d_v.sum(axis=0)
    d_v1 = (d_v @ params["V2w"]) * (v1 > 0)
    grads["V1w"] = d_v1.T @ state
    grads["V1b"] = d_v1.sum(axis=0)
    d_pre = d_hid * elu_grad(pre)
    grads["B1w"] = d_pre.T @ state
    grads["B1b"] = d_pre.sum(axis=0)
    d_w1 = qs[:, :, None] * d_pre[:, None, :]
    d_a1 = d_w1.reshape(B, -1) * np.sign(a1)
    grads["W1w"] = d_a1.T @ state
    grads["W1b"] = d_a1.sum(axis=0)
    grad_qs = np.einsum("be,bne->bn", d_pre, w1)
    return grad_qs, grads
