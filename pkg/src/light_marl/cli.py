"""Command-line entry point: ``light-marl <command> ...``.

Commands: train, eval, align, curves, extract-rules, validate-config,
dump-trajectories. Config and rule errors exit with status 2 and a message
naming the offending file and line.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import load_config, parse_config, with_overrides
from .envs import make_env
from .errors import ConfigurationError, InvalidInputError, RuleSyntaxError
from .io import append_jsonl, load_trajectory_dataset
from .knowledge import TreeConfig, extract_rules, format_rules
from .trainer import (Knowledge, Learner, alignment_stats, dump_trajectories, evaluate,
                      intrinsic_curve, load_rules, train)

OUTPUT_ROOT_VAR = "LIGHT_MARL_OUTPUT"
log = logging.getLogger("light_marl")


class UsageError(Exception):
    pass


def parse_seeds(text):
    """``3`` -> [3]; ``1..5`` -> [1, 2, 3, 4, 5]; ``1,4,9`` -> [1, 4, 9]."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise UsageError(f"bad seed range {part!r}") from None
            if hi < lo:
                raise UsageError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        elif part:
            try:
                seeds.append(int(part))
            except ValueError:
                raise UsageError(f"bad seed {part!r}") from None
    if not seeds:
        raise UsageError("no seeds given")
    return seeds


def split_overrides(extra):
    """Turn leftover ``--section.key value`` / ``--section.key=value`` args into a dict."""
    out = {}
    i = 0
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--"):
            raise UsageError(f"unexpected argument {arg!r}")
        key = arg[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"{arg} needs a value")
            i += 1
            value = extra[i]
        out[key.replace("-", "_")] = value
        i += 1
    return out


def output_root(cli_value, config):
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(OUTPUT_ROOT_VAR)
    if env:
        return Path(env)
    return Path(config.out_dir)


def resolve_config(args, extra):
    overrides = split_overrides(extra)
    if args.mixer:
        overrides["network.mixer"] = args.mixer
    if args.ablate:
        overrides["light.ablation"] = args.ablate
    config = load_config(args.config) if args.config else parse_config("")
    return with_overrides(config, overrides) if overrides else config


def cmd_train(args, extra):
    config = resolve_config(args, extra)
    base_dir = Path(args.config).parent if args.config else None
    root = output_root(args.out, config)
    seeds = parse_seeds(args.seed) if args.seed is not None else [config.seed]
    env = make_env(config.env, **config.env_config().__dict__)
    rules = load_rules(config.rules, env, base_dir)  # fail early on rule errors
    for seed in seeds:
        cfg = with_overrides(config, {"run.seed": str(seed)})
        run_dir = root / f"seed_{seed}" if len(seeds) > 1 or args.seed is not None else root
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.ini").write_text(cfg.to_text())
        metrics_path = run_dir / "metrics.jsonl"
        metrics_path.unlink(missing_ok=True)

        def sink(rec, path=metrics_path):
            append_jsonl(path, [rec])
            if not args.quiet:
                print(json.dumps(rec, sort_keys=True), flush=True)

        result = train(cfg, rules=rules, out_dir=run_dir, metrics_sink=sink)
        last = result.metrics[-1]
        print(f"seed {seed}: {result.env_steps} env steps, {result.updates} updates, "
              f"final return {last['mean_return']:.3f}, win rate {last['win_rate']:.3f} -> {run_dir}")
    return 0


def load_checkpoint(path, args):
    learner, meta = Learner.load(path)
    if args.config:
        config = load_config(args.config)
    elif "config" in meta:
        config = parse_config(meta["config"], f"{path} (embedded config)")
    else:
        raise ConfigurationError(f"{path}: no embedded config, pass --config")
    env = make_env(config.env, **config.env_config().__dict__)
    for key, have in (("n_agents", env.n_agents), ("obs_size", env.obs_size),
                      ("n_actions", env.n_actions), ("state_size", env.state_size)):
        if meta[key] != have:
            raise ConfigurationError(f"checkpoint {key}={meta[key]} does not match environment ({have})")
    return learner, config, env


def checkpoint_rules(args, config, env):
    path = args.rules if args.rules is not None else config.rules
    base = Path(args.config).parent if args.config else None
    return load_rules(path, env, base)


def eval_seeds(seed, n):
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**31 - 1, size=n)]


def cmd_eval(args, extra):
    learner, config, env = load_checkpoint(args.checkpoint, args)
    rules = checkpoint_rules(args, config, env)
    stats = evaluate(env, learner, eval_seeds(args.seed, args.episodes), Knowledge(rules), config.temperature)
    print(f"episodes {args.episodes}  mean return {stats['mean_return']:.4f}  "
          f"win rate {stats['win_rate']:.4f}  mean length {stats['mean_ep_len']:.2f}")
    if args.json:
        print(json.dumps(stats, sort_keys=True))
    return 0


def cmd_align(args, extra):
    learner, config, env = load_checkpoint(args.checkpoint, args)
    rules = checkpoint_rules(args, config, env)
    stats = alignment_stats(learner, rules, env, n_episodes=args.episodes, seed=args.seed)
    frac = stats["consistency_fraction"]
    shown = "n/a (no rule fired)" if frac is None else f"{frac:.4f}"
    print(f"episodes {args.episodes}  avg steps {stats['avg_steps']:.2f}  consistency {shown}  "
          f"rule-firing agent steps {stats['rule_steps']}")
    if args.json:
        print(json.dumps(stats, sort_keys=True))
    return 0


def cmd_curves(args, extra):
    learner, config, env = load_checkpoint(args.checkpoint, args)
    rules = checkpoint_rules(args, config, env)
    records = intrinsic_curve(learner, rules, env, args.seed, config.temperature)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "step", "intrinsic", "rule"])
        for rec in sorted(records, key=lambda r: (r.agent, r.step)):
            writer.writerow([rec.agent, rec.step, repr(rec.reward), rec.rule or ""])
    print(f"wrote {len(records)} rows to {out}")
    return 0


def cmd_extract_rules(args, extra):
    data = load_trajectory_dataset(args.data)
    if not data:
        raise InvalidInputError(f"{args.data}: no trajectory records")
    action_names = feature_names = groups = None
    if args.env:
        env = make_env(args.env)
        action_names, groups = env.action_names, env.action_groups
        feature_names = tuple(data[0][0])
        unknown = set(feature_names) - set(env.feature_names)
        if unknown:
            raise InvalidInputError(f"{args.data}: features unknown to {args.env}: {sorted(unknown)}")
    tree = TreeConfig(args.max_depth, args.min_leaf, args.min_purity, args.min_support)
    rules, report, _ = extract_rules(data, tree, feature_names, action_names, groups, return_report=True)
    text = format_rules(rules)
    Path(args.out).write_text(text)
    covered = sum(r.support for r in report if r.emitted)
    for r in report:
        flag = "kept" if r.emitted else "dropped"
        print(f"{r.name:10s} support {r.support:6d}  purity {r.purity:.3f}  {flag}")
    print(f"{len(rules)} rules, coverage {covered / len(data):.2f} of {len(data)} records -> {args.out}")
    if not len(rules):
        print("warning: no leaf met min_support and min_purity; rule file is empty", file=sys.stderr)
    return 0


def cmd_validate_config(args, extra):
    config = resolve_config(args, extra)
    env = make_env(config.env, **config.env_config().__dict__)
    rules = load_rules(config.rules, env, Path(args.config).parent)
    print(config.to_text(), end="")
    print(f"# ok: {config.env}, {len(rules)} rules")
    return 0


def cmd_dump_trajectories(args, extra):
    learner = None
    if args.checkpoint:
        learner, config, env = load_checkpoint(args.checkpoint, args)
    else:
        config = resolve_config(args, extra)
        env = make_env(config.env, **config.env_config().__dict__)
    n = dump_trajectories(env, args.out, args.episodes, args.seed, learner, args.epsilon)
    print(f"wrote {n} records to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="light-marl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one run per seed")
    p.add_argument("--config")
    p.add_argument("--seed", help="a seed, a range a..b, or a comma list")
    p.add_argument("--ablate", choices=["none", "no_knowledge", "no_intrinsic", "random_knowledge"])
    p.add_argument("--mixer", choices=["vdn", "qmix"])
    p.add_argument("--out", help=f"output root (default ${OUTPUT_ROOT_VAR} or run.out_dir)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    for name, func, episodes, helptext in (
            ("eval", cmd_eval, 32, "greedy test episodes"),
            ("align", cmd_align, 100, "rule-consistency of greedy behaviour")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("checkpoint")
        p.add_argument("--config")
        p.add_argument("--rules")
        p.add_argument("--episodes", type=int, default=episodes)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("curves", help="per-agent intrinsic rewards along one test episode (CSV)")
    p.add_argument("checkpoint")
    p.add_argument("--config")
    p.add_argument("--rules")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("extract-rules", help="decision-tree rules from a trajectory dump")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    p.add_argument("--env", choices=["lbf", "skirmish"], help="check names against this environment")
    defaults = TreeConfig()
    p.add_argument("--max-depth", type=int, default=defaults.max_depth)
    p.add_argument("--min-leaf", type=int, default=defaults.min_leaf)
    p.add_argument("--min-purity", type=float, default=defaults.min_purity)
    p.add_argument("--min-support", type=int, default=defaults.min_support)
    p.set_defaults(func=cmd_extract_rules)

    p = sub.add_parser("validate-config", help="check a config and print the resolved form")
    p.add_argument("config")
    p.add_argument("--ablate", choices=["none", "no_knowledge", "no_intrinsic", "random_knowledge"])
    p.add_argument("--mixer", choices=["vdn", "qmix"])
    p.set_defaults(func=cmd_validate_config)

    p = sub.add_parser("dump-trajectories", help="write trajectory records for rule extraction")
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--ablate", default=None)
    p.add_argument("--mixer", default=None)
    p.set_defaults(func=cmd_dump_trajectories)
    return parser


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if extra and args.command not in ("train", "validate-config", "dump-trajectories"):
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        return args.func(args, extra)
    except (ConfigurationError, RuleSyntaxError, InvalidInputError, UsageError, ValueError, KeyError,
            OSError) as exc:
        print(f"light-marl {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
