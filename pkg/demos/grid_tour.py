"""Walk through the four gridworld tasks with ASCII renders.

Each task is shown right after reset, then again after a few random joint
steps, with the reward signals printed so the sparsity structure is visible.
"""
import numpy as np

from ligs.envs import (ACTION_NAMES, CorridorEnv, make_env, render)
from ligs.rng import Rng


def tour(experiment_id: str, seed: int = 4, ticks: int = 6) -> None:
    env = make_env(experiment_id)
    rng = Rng(seed, (0,))
    state = env.reset(rng)
    print("=" * 62)
    print(f"{experiment_id}  ({env.kind})  grid {env.width}x{env.height}, "
          f"{env.n_agents} agents, limit {env.episode_limit}")
    print(env.__doc__.strip().splitlines()[0])
    print(f"obs_dim={env.obs_dim}  encoded state -> {state.shape}, "
          f"sum={state.sum():.2f}")
    print(render(env))
    total = 0.0
    for t in range(ticks):
        actions = [int(rng.gen.integers(env.n_actions))
                   for _ in range(env.n_agents)]
        res = env.step(actions)
        total += res.team_reward
        names = ",".join(ACTION_NAMES[a] for a in actions)
        print(f" t={t} actions=[{names}] team={res.team_reward:+.1f} "
              f"per_agent={res.per_agent_reward} done={res.done}")
        if res.done:
            break
    print(render(env))
    print(f"random play for {ticks} ticks earned {total:+.1f}, "
          f"success={env.success()}")


def corridor_deadlock() -> None:
    # head-on meeting inside the one-body passage: both pushes cancel
    env = CorridorEnv()
    env.reset(Rng(0, (0,)))
    env.positions = [(4, 2), (5, 2)]
    before = list(env.positions)
    from ligs.envs import LEFT, RIGHT
    env.step([RIGHT, LEFT])
    print("=" * 62)
    print("corridor head-on collision:", before, "->", env.positions)
    print("neither body moves; someone has to back out")


if __name__ == "__main__":
    np.set_printoptions(precision=2, suppress=True)
    for name in ("foraging1", "foraging2", "foraging3", "corridor"):
        tour(name)
    corridor_deadlock()
