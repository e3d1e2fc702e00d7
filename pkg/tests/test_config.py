from pathlib import Path

import pytest

from light_marl.config import TrainConfig, load_config, parse_config, with_overrides
from light_marl.envs import LbfConfig
from light_marl.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_table_defaults():
    c = TrainConfig()
    assert (c.buffer_size, c.batch_size, c.lr, c.gamma) == (5000, 32, 0.0005, 0.99)
    assert (c.eps_start, c.eps_end, c.eps_anneal) == (1.0, 0.05, 50000)
    assert (c.target_interval, c.test_episodes, c.mixing_embed) == (200, 32, 32)
    assert c.lambda_k == 0.02 and c.lam == 0.5 and c.temperature == 1.0
    assert c.test_interval == 1000 and c.total_steps == 200_000
    sk = TrainConfig(env="skirmish")
    assert sk.test_interval == 2000 and sk.total_steps == 500_000


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert parse_config(cfg.to_text()) == cfg


def test_text_round_trip():
    cfg = TrainConfig(env="lbf", env_params={"n_agents": 4, "agent_levels": (1, 2, 3)}, lam=0.1,
                      recompute_intrinsic=True, seed=9)
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.env_config() == LbfConfig(n_agents=4, agent_levels=(1, 2, 3))


@pytest.mark.parametrize("text, fragment", [
    ("[train]\nbogus = 1\n", "unknown key 'bogus'"),
    ("[weird]\nx = 1\n", "unknown section"),
    ("[env]\nname = smac\n", "name must be one of"),
    ("[env]\nname = lbf\nn_allies = 3\n", "unknown [env] key"),
    ("[train]\nbatch_size = many\n", "cannot read 'many'"),
    ("[train]\ngamma = 1.5\n", "gamma"),
    ("[network]\nmixer = qtran\n", "vdn or qmix"),
    ("[light]\nablation = everything\n", "ablation"),
    ("[light]\nlam = -1\n", "non-negative"),
    ("[train]\nbuffer_size = 4\n", "buffer_size >= batch_size"),
])
def test_invalid_configs(text, fragment):
    with pytest.raises(ConfigurationError) as err:
        parse_config(text, "x.cfg")
    assert fragment in str(err.value)


def test_overrides():
    cfg = TrainConfig()
    out = with_overrides(cfg, {"light.lam": "1.0", "mixer": "qmix", "env.n_agents": "4"})
    assert out.lam == 1.0 and out.mixer == "qmix" and out.env_params == {"n_agents": 4}
    sk = with_overrides(cfg, {"env.name": "skirmish"})
    assert sk.env == "skirmish" and sk.test_interval == 2000
    with pytest.raises(ConfigurationError):
        with_overrides(cfg, {"train.lam": "1"})


def test_no_intrinsic_ablation_zeroes_both_coefficients():
    eff = TrainConfig(ablation="no_intrinsic").effective()
    assert eff.lam == 0.0 and eff.lambda_k == 0.0


def test_missing_file():
    with pytest.raises(ConfigurationError):
        load_config("/nonexistent/run.cfg")
