"""Run configuration: INI-style sections of ``key = value`` pairs.

Example::

    [env]
    name = lbf
    n_agents = 3
    n_foods = 3

    [train]
    total_steps = 200000

    [light]
    rules = lbf_forage.rules
    lam = 0.5
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

from .envs.lbf import LbfConfig
from .envs.skirmish import SkirmishConfig
from .errors import ConfigurationError

ABLATIONS = ("none", "no_knowledge", "no_intrinsic", "random_knowledge")
ENV_CONFIGS = {"lbf": LbfConfig, "skirmish": SkirmishConfig}
DEFAULT_TEST_INTERVAL = {"lbf": 1000, "skirmish": 2000}
DEFAULT_TOTAL_STEPS = {"lbf": 200_000, "skirmish": 500_000}

SECTIONS = {
    "train": ("total_steps", "buffer_size", "batch_size", "lr", "gamma", "eps_start", "eps_end",
              "eps_anneal", "target_interval", "test_interval", "test_episodes", "rms_decay",
              "rms_eps", "grad_clip"),
    "network": ("hidden", "mixer", "mixing_embed", "temperature"),
    "light": ("lam", "lambda_k", "rules", "individual_loss", "recompute_intrinsic",
              "intrinsic_source", "ablation"),
    "run": ("seed", "out_dir", "binary_checkpoint"),
}


@dataclass
class TrainConfig:
    env: str = "lbf"
    env_params: dict = field(default_factory=dict)
    # train
    total_steps: int = 0  # 0 -> environment default
    buffer_size: int = 5000
    batch_size: int = 32
    lr: float = 0.0005
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_anneal: int = 50000
    target_interval: int = 200
    test_interval: int = 0  # 0 -> environment default
    test_episodes: int = 32
    rms_decay: float = 0.99
    rms_eps: float = 1e-5
    grad_clip: float = 10.0
    # network
    hidden: int = 64
    mixer: str = "vdn"
    mixing_embed: int = 32
    temperature: float = 1.0
    # light
    lam: float = 0.5
    lambda_k: float = 0.02
    rules: str = ""
    individual_loss: str = "sum"
    recompute_intrinsic: bool = False
    intrinsic_source: str = "policy"
    ablation: str = "none"
    # run
    seed: int = 0
    out_dir: str = "runs"
    binary_checkpoint: bool = False

    def __post_init__(self):
        if not self.total_steps:
            self.total_steps = DEFAULT_TOTAL_STEPS.get(self.env, 200_000)
        if not self.test_interval:
            self.test_interval = DEFAULT_TEST_INTERVAL.get(self.env, 1000)
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigurationError(msg)

        need(self.env in ENV_CONFIGS, f"env.name must be one of {sorted(ENV_CONFIGS)}, got {self.env!r}")
        known = {f.name for f in fields(ENV_CONFIGS[self.env])}
        unknown = set(self.env_params) - known
        need(not unknown, f"unknown [env] key(s) for {self.env}: {', '.join(sorted(unknown))}")
        need(self.mixer in ("vdn", "qmix"), f"network.mixer must be vdn or qmix, got {self.mixer!r}")
        need(self.ablation in ABLATIONS, f"light.ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        need(self.individual_loss in ("sum", "mean"), "light.individual_loss must be sum or mean")
        need(self.intrinsic_source in ("policy", "executed"),
             "light.intrinsic_source must be policy or executed")
        need(self.total_steps > 0, "train.total_steps must be positive")
        need(self.buffer_size >= self.batch_size > 0, "need buffer_size >= batch_size > 0")
        need(self.lr > 0, "train.lr must be positive")
        need(0 <= self.gamma <= 1, "train.gamma must lie in [0, 1]")
        need(0 <= self.eps_end <= 1 and 0 <= self.eps_start <= 1, "exploration rates must lie in [0, 1]")
        need(self.eps_anneal > 0, "train.eps_anneal must be positive")
        need(self.target_interval > 0 and self.test_interval > 0 and self.test_episodes > 0,
             "intervals and test_episodes must be positive")
        need(0 < self.rms_decay < 1 and self.rms_eps > 0, "bad RMSProp decay/eps")
        need(self.hidden > 0 and self.mixing_embed > 0, "network sizes must be positive")
        need(self.temperature > 0, "network.temperature must be positive")
        need(self.lam >= 0 and self.lambda_k >= 0, "lam and lambda_k must be non-negative")

    def effective(self):
        """Copy with ablation switches applied to the numeric knobs."""
        cfg = dataclasses.replace(self)
        if cfg.ablation == "no_intrinsic":
            cfg.lam = 0.0
            cfg.lambda_k = 0.0
        return cfg

    def env_config(self):
        cls = ENV_CONFIGS[self.env]
        params = dict(self.env_params)
        for f in fields(cls):
            if f.name in params and isinstance(f.default, tuple):
                params[f.name] = tuple(params[f.name])
        return cls(**params)

    def to_text(self):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["env"] = {"name": self.env, **{k: _fmt(v) for k, v in sorted(self.env_params.items())}}
        for section, keys in SECTIONS.items():
            cp[section] = {k: _fmt(getattr(self, k)) for k in keys}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def to_dict(self):
        return dataclasses.asdict(self)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(raw, example, key):
    raw = raw.strip()
    try:
        if isinstance(example, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(example, int):
            return int(raw.replace("_", ""))
        if isinstance(example, float):
            return float(raw)
        if isinstance(example, tuple):
            return tuple(int(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigurationError(f"{key}: cannot read {raw!r} as {type(example).__name__}") from None
    return raw


_FIELD_DEFAULTS = {f.name: f.default for f in fields(TrainConfig) if f.default is not dataclasses.MISSING}


def _env_default(env, key):
    cls = ENV_CONFIGS.get(env)
    for f in fields(cls):
        if f.name == key:
            return f.default
    raise ConfigurationError(f"unknown [env] key {key!r} for {env}")


def apply_values(values, env_values, key_values, base=None):
    """Build a config from plain dicts of raw strings (sections already flattened)."""
    data = dict(values)
    env = data.pop("env", None) or (base.env if base else "lbf")
    env_params = dict(base.env_params) if base and base.env == env else {}
    for key, raw in env_values.items():
        default = _env_default(env, key)
        env_params[key] = _convert(raw, default, f"env.{key}") if isinstance(raw, str) else raw
    kwargs = base.to_dict() if base else {}
    kwargs.pop("env_params", None)
    kwargs.pop("env", None)
    for key, raw in key_values.items():
        if key not in _FIELD_DEFAULTS:
            raise ConfigurationError(f"unknown config key {key!r}")
        kwargs[key] = _convert(raw, _FIELD_DEFAULTS[key], key) if isinstance(raw, str) else raw
    if base and base.env != env:
        # environment-dependent defaults must be recomputed
        if kwargs.get("test_interval") == DEFAULT_TEST_INTERVAL.get(base.env) and "test_interval" not in key_values:
            kwargs["test_interval"] = 0
        if kwargs.get("total_steps") == DEFAULT_TOTAL_STEPS.get(base.env) and "total_steps" not in key_values:
            kwargs["total_steps"] = 0
    return TrainConfig(env=env, env_params=env_params, **kwargs)


def parse_config(text, source="<config>"):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    env_values, key_values = {}, {}
    env_name = "lbf"
    for section in cp.sections():
        if section == "env":
            for key, raw in cp[section].items():
                if key == "name":
                    env_name = raw.strip()
                else:
                    env_values[key] = raw
            continue
        if section not in SECTIONS:
            raise ConfigurationError(f"{source}: unknown section [{section}]")
        for key, raw in cp[section].items():
            if key not in SECTIONS[section]:
                raise ConfigurationError(f"{source}: unknown key {key!r} in [{section}]")
            key_values[key] = raw
    if env_name not in ENV_CONFIGS:
        raise ConfigurationError(f"{source}: [env] name must be one of {sorted(ENV_CONFIGS)}")
    return apply_values({"env": env_name}, env_values, key_values)


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file {path} not found")
    return parse_config(path.read_text(), str(path))


def with_overrides(config, overrides):
    """Apply ``{"section.key" or "key": raw string}`` overrides."""
    env_values, key_values, values = {}, {}, {}
    for key, raw in overrides.items():
        section, _, name = key.rpartition(".")
        if section == "env" or (not section and name == "env"):
            if name in ("name", "env"):
                values["env"] = raw
            else:
                env_values[name] = raw
            continue
        if section and (section not in SECTIONS or name not in SECTIONS[section]):
            raise ConfigurationError(f"unknown override {key!r}")
        key_values[name] = raw
    return apply_values(values, env_values, key_values, base=config)
