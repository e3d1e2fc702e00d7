"""Knowledge-guided intrinsic rewards for cooperative multi-agent Q-learning."""
from .agent import epsilon_at, phi, q_forward, select_action
from .config import TrainConfig, load_config, parse_config
from .intrinsic import intrinsic_reward, shaped_team_reward
from .knowledge import RuleSet, SoftRule, evaluate, extract_rules, parse_rules
from .mixer import qmix_mix, vdn_mix
from .trainer import (Episode, Learner, ReplayBuffer, alignment_stats, collect_episode,
                      compute_losses, train)

__version__ = "0.1.0"
