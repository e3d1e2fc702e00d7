"""Small float64 numpy substrate: layers, a GRU cell, masked softmax, RMSProp.

Everything here works on plain ``np.ndarray`` objects. Layers take either a
single vector or a batch of row vectors; backward functions are hand-derived
and return gradients summed over the batch.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InvalidInputError, TrainingAbort

ACTIVATIONS = ("identity", "relu", "tanh")
GRU_KEYS = ("Wz", "bz", "Wr", "br", "Wh", "bh")
CHECKPOINT_MAGIC = "light-marl-params v1"


def uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float64)


class ParamStore:
    """Named float64 parameter arrays, each paired with an RMSProp accumulator."""

    def __init__(self, arrays=None):
        self._params: dict[str, np.ndarray] = {}
        self._acc: dict[str, np.ndarray] = {}
        for name, value in (arrays or {}).items():
            self.add(name, value)

    def add(self, name, value):
        if name in self._params:
            raise ConfigurationError(f"parameter {name!r} already exists")
        value = np.array(value, dtype=np.float64)
        self._params[name] = value
        self._acc[name] = np.zeros_like(value)

    def __getitem__(self, name):
        return self._params[name]

    def __setitem__(self, name, value):
        current = self._params.get(name)
        if current is None:
            raise ConfigurationError(f"unknown parameter {name!r}")
        value = np.asarray(value, dtype=np.float64)
        if value.shape != current.shape:
            raise ConfigurationError(
                f"shape change for {name!r}: {current.shape} -> {value.shape}")
        current[...] = value

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def keys(self):
        return self._params.keys()

    def items(self):
        return self._params.items()

    def accumulator(self, name):
        return self._acc[name]

    def subset(self, prefix):
        """View of the parameters whose names start with ``prefix``, prefix stripped."""
        return {k[len(prefix):]: v for k, v in self._params.items() if k.startswith(prefix)}

    def copy(self):
        out = ParamStore()
        for name, value in self._params.items():
            out._params[name] = value.copy()
            out._acc[name] = self._acc[name].copy()
        return out

    def load_values(self, other):
        """Overwrite values (not accumulators) from ``other`` with identical keys."""
        if set(other.keys()) != set(self._params):
            raise ConfigurationError("parameter sets differ")
        for name in self._params:
            self[name] = other[name]

    def size(self):
        return int(sum(v.size for v in self._params.values()))

    def check(self):
        for name, value in self._params.items():
            if self._acc[name].shape != value.shape:
                raise ConfigurationError(f"accumulator shape mismatch for {name!r}")


# --- activations -----------------------------------------------------------

def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _activate(pre, activation):
    if activation == "identity":
        return pre
    if activation == "relu":
        return np.maximum(pre, 0.0)
    if activation == "tanh":
        return np.tanh(pre)
    raise ConfigurationError(f"unknown activation {activation!r}")


def _activation_grad(out, activation):
    # derivative expressed through the layer output
    if activation == "identity":
        return 1.0
    if activation == "relu":
        return (out > 0).astype(np.float64)
    if activation == "tanh":
        return 1.0 - out * out
    raise ConfigurationError(f"unknown activation {activation!r}")


# --- dense -------------------------------------------------------------------

def dense_forward(x, weight, bias, activation="identity"):
    """activation(weight @ x + bias); ``x`` may be a vector or a (batch, in) matrix."""
    x = np.asarray(x, dtype=np.float64)
    if weight.ndim != 2 or bias.shape != (weight.shape[0],) or x.shape[-1] != weight.shape[1]:
        raise ConfigurationError(
            f"dense dims do not conform: x{x.shape} W{weight.shape} b{bias.shape}")
    return _activate(x @ weight.T + bias, activation)


def dense_backward(grad_out, x, weight, out, activation="identity"):
    """Returns (grad_x, grad_weight, grad_bias) for a batch of row vectors."""
    g = grad_out * _activation_grad(out, activation)
    g2 = np.atleast_2d(g)
    x2 = np.atleast_2d(x)
    return g @ weight, g2.T @ x2, g2.sum(axis=0)


# --- GRU ---------------------------------------------------------------------

def _check_gru(x, h, params):
    hidden = h.shape[-1]
    n_in = x.shape[-1]
    for key in ("Wz", "Wr", "Wh"):
        if params[key].shape != (hidden, n_in + hidden):
            raise ConfigurationError(
                f"GRU {key} has shape {params[key].shape}, expected {(hidden, n_in + hidden)}")
    for key in ("bz", "br", "bh"):
        if params[key].shape != (hidden,):
            raise ConfigurationError(f"GRU {key} has shape {params[key].shape}")


def gru_forward(x, h, params):
    """One GRU step returning (h_new, cache) for :func:`gru_backward`."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    _check_gru(x, h, params)
    n_in = x.shape[-1]
    xh = np.concatenate([x, h], axis=-1)
    z = sigmoid(xh @ params["Wz"].T + params["bz"])
    r = sigmoid(xh @ params["Wr"].T + params["br"])
    xrh = np.concatenate([x, r * h], axis=-1)
    cand = np.tanh(xrh @ params["Wh"].T + params["bh"])
    h_new = (1.0 - z) * h + z * cand
    return h_new, (n_in, h, xh, z, r, xrh, cand)


def gru_step(x, h, params):
    return gru_forward(x, h, params)[0]


def gru_backward(grad_h_new, cache, params, grads=None):
    """Backward through one GRU step.

    Returns (grad_x, grad_h_prev). Parameter gradients are added into
    ``grads`` (a dict keyed like ``params``) when given.
    """
    n_in, h, xh, z, r, xrh, cand = cache
    g = grad_h_new
    d_z = g * (cand - h) * z * (1.0 - z)
    d_cand = g * z * (1.0 - cand * cand)
    grad_h = g * (1.0 - z)

    d_xrh = d_cand @ params["Wh"]
    grad_x = d_xrh[..., :n_in]
    d_rh = d_xrh[..., n_in:]
    grad_h = grad_h + d_rh * r
    d_r = d_rh * h * r * (1.0 - r)

    d_xh = d_z @ params["Wz"] + d_r @ params["Wr"]
    grad_x = grad_x + d_xh[..., :n_in]
    grad_h = grad_h + d_xh[..., n_in:]

    if grads is not None:
        for key, d_pre, inp in (("Wz", d_z, xh), ("Wr", d_r, xh), ("Wh", d_cand, xrh)):
            d2 = np.atleast_2d(d_pre)
            grads[key] = grads.get(key, 0.0) + d2.T @ np.atleast_2d(inp)
            bkey = "b" + key[1]
            grads[bkey] = grads.get(bkey, 0.0) + d2.sum(axis=0)
    return grad_x, grad_h


# --- softmax -------------------------------------------------------------------

def softmax_masked(values, mask, temperature=1.0):
    """Softmax over the entries where ``mask`` is true; masked entries are exactly 0.

    Works along the last axis, so batches of rows are fine.
    """
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if values.shape != mask.shape:
        raise InvalidInputError(f"values {values.shape} and mask {mask.shape} differ")
    if not mask.any(axis=-1).all():
        raise InvalidInputError("softmax_masked needs at least one available entry")
    scaled = np.where(mask, values / temperature, -np.inf)
    top = scaled.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(scaled - top), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


# --- optimiser -------------------------------------------------------------------

def rmsprop_step(params, grads, lr, decay=0.99, eps=1e-5):
    """In-place RMSProp update of ``params``; returns the same store.

    acc <- decay*acc + (1-decay)*g^2 ;  p <- p - lr*g/sqrt(acc+eps)
    """
    if not (lr > 0 and 0 < decay < 1 and eps > 0):
        raise ConfigurationError(f"bad RMSProp settings lr={lr} decay={decay} eps={eps}")
    for name, g in grads.items():
        if name not in params:
            raise ConfigurationError(f"gradient for unknown parameter {name!r}")
        p = params[name]
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ConfigurationError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise TrainingAbort(f"non-finite gradient for {name!r}", {"param": name})
    for name, g in grads.items():
        acc = params.accumulator(name)
        acc *= decay
        acc += (1.0 - decay) * g * g
        params[name] -= lr * g / np.sqrt(acc + eps)
    return params


def clip_grad_norm(grads, max_norm):
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for name in grads:
            grads[name] = grads[name] * scale
    return total


# --- gradient check -----------------------------------------------------------------

def grad_check(function, params, eps=1e-5, max_entries=None, rng=None):
    """Max relative error between analytic and central-difference gradients.

    ``function(params)`` must return ``(value, grads)`` where ``grads`` maps
    parameter names to analytic gradients. ``params`` may be a ParamStore or a
    dict of arrays; entries are perturbed in place and restored. With
    ``max_entries`` only a random subset of each parameter is probed.
    """
    _, analytic = function(params)
    worst = 0.0
    for name in list(params.keys()):
        p = params[name]
        a = np.asarray(analytic.get(name, np.zeros_like(p)), dtype=np.float64)
        flat_idx = np.arange(p.size)
        if max_entries is not None and p.size > max_entries:
            rng = rng or np.random.default_rng(0)
            flat_idx = rng.choice(p.size, size=max_entries, replace=False)
        for i in flat_idx:
            idx = np.unravel_index(i, p.shape)
            orig = p[idx]
            p[idx] = orig + eps
            f_plus = function(params)[0]
            p[idx] = orig - eps
            f_minus = function(params)[0]
            p[idx] = orig
            numeric = (f_plus - f_minus) / (2 * eps)
            an = a[idx]
            err = abs(an - numeric) / max(1.0, abs(an), abs(numeric))
            worst = max(worst, err)
    return worst


# --- checkpoints ---------------------------------------------------------------------

def save_params(path, store, meta=None, binary=False):
    """Write parameters (row-major) plus optional JSON metadata.

    Text mode prints 17 significant digits so a read gives the same bits.
    """
    path = Path(path)
    if binary:
        arrays = {f"param:{k}": v for k, v in store.items()}
        arrays["__meta__"] = np.array(json.dumps(meta or {}, sort_keys=True))
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
        return path
    lines = [CHECKPOINT_MAGIC, "meta " + json.dumps(meta or {}, sort_keys=True)]
    for name, value in store.items():
        lines.append("param " + name + " " + " ".join(str(d) for d in value.shape))
        lines.append(" ".join(format(x, ".17g") for x in value.ravel()))
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)
    return path


def load_params(path):
    """Returns (ParamStore, meta dict) from a file written by :func:`save_params`."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(CHECKPOINT_MAGIC))
    if head != CHECKPOINT_MAGIC.encode():
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            store = ParamStore({k[len("param:"):]: data[k] for k in data.files if k.startswith("param:")})
        return store, meta
    lines = path.read_text().splitlines()
    if not lines[1].startswith("meta "):
        raise ConfigurationError(f"{path}: missing meta line")
    meta = json.loads(lines[1][5:])
    store = ParamStore()
    i = 2
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] != "param" or len(parts) < 2:
            raise ConfigurationError(f"{path}:{i + 1}: expected 'param NAME DIMS'")
        name, shape = parts[1], tuple(int(d) for d in parts[2:])
        body = lines[i + 1].split() if i + 1 < len(lines) else []
        values = np.array([float(v) for v in body], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise ConfigurationError(f"{path}:{i + 2}: {name} expects {int(np.prod(shape))} values")
        store.add(name, values.reshape(shape))
        i += 2
    return store, meta
