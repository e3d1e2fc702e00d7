"""
The two environments
====================

Level-based foraging: agents with levels walk a grid and load food; a food
is collected when the levels of the agents loading it reach its level.

Skirmish: a small grid battle, allies against scripted enemies. The sparse
reward pays 200 for a win, 10 per kill and -5 per lost ally.
"""
import numpy as np

from light_marl.envs import LbfEnv, SkirmishEnv

rng = np.random.default_rng(0)


def random_episode(env, seed):
    env.reset(seed)
    total, steps, done, info = 0.0, 0, False, {}
    while not done:
        acts = [int(rng.choice(np.flatnonzero(m))) for m in env.get_avail()]
        r, done, info = env.step(acts)
        total += r
        steps += 1
    return total, steps, info


lbf = LbfEnv()
print("lbf actions", lbf.action_names)
print("lbf features", lbf.feature_names)
lbf.reset(1)
print("obs", np.asarray(lbf.get_obs()).shape, "state", np.asarray(lbf.get_state()).shape)
returns = [random_episode(lbf, s)[0] for s in range(50)]
print("random policy mean return", np.mean(returns))

sk = SkirmishEnv()
print("skirmish actions", sk.action_names)
total, steps, info = random_episode(sk, 3)
kills = int((~sk.state.enemy_alive).sum())
losses = int((~sk.state.ally_alive).sum())
print(f"return {total} after {steps} steps, win={info['win']}, kills={kills}, losses={losses}")
print("200*win + 10*kills - 5*losses =", 200 * info["win"] + 10 * kills - 5 * losses)
