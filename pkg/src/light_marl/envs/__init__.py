from .lbf import LbfConfig, LbfEnv, LbfState, lbf_available_actions, lbf_reset, lbf_step
from .skirmish import (SkirmishConfig, SkirmishEnv, SkirmishState, skirmish_available_actions,
                       skirmish_reset, skirmish_step)


def make_env(name, **params):
    if name == "lbf":
        return LbfEnv(LbfConfig(**params))
    if name == "skirmish":
        return SkirmishEnv(SkirmishConfig(**params))
    from ..errors import ConfigurationError
    raise ConfigurationError(f"unknown environment {name!r}")
