"""Trace one episode of the gated shaping stream, tick by tick.

A frozen random network scores every state; while the switch is on, the
agents receive the discounted potential difference of consecutive states.
Because the potential is pinned to zero at switch boundaries and at episode
end, the discounted sum of the gated stream cancels exactly, so the shaping
moves exploration without moving the discounted objective.
"""
import numpy as np

from ligs.config import RunConfig
from ligs.envs import make_env
from ligs.generator import (GeneratorPolicies, PotentialNet, SwitchState,
                            decide, generator_reward, telescoping_audit)
from ligs.rng import Rng


def roll_episode(mode: str, seed: int = 11):
    # low terminate prob stretches the on-periods so the telescoping shows
    cfg = RunConfig(experiment_id="corridor", switch_cost=0.05,
                    generator_action_count=3, option_terminate_prob=0.25)
    env = make_env(cfg.experiment_id)
    rng = Rng(seed, (0,))
    pot = PotentialNet(env.obs_dim, cfg.generator_action_count, 16, Rng(seed, (1,)))
    gp = GeneratorPolicies(env.obs_dim, cfg.generator_action_count, 16, Rng(seed, (2,)))
    ss = SwitchState()

    state = env.reset(rng)
    fs, qs, rows = [], [], []
    for tick in range(18):
        actions = [int(rng.gen.integers(env.n_actions))
                   for _ in range(env.n_agents)]
        res = env.step(actions)
        done = res.done or tick == 17
        dec = decide(gp, ss, state, res.next_state, pot, rng, cfg,
                     done=done, tick=tick, mode=mode)
        shaped = generator_reward(res.team_reward, dec.intrinsic_f, dec.q,
                                  dec.switch_cost_charge, 0.0)
        rows.append((tick, dec.q, dec.theta, dec.intrinsic_f,
                     dec.switch_cost_charge, dec.q_source, shaped))
        fs.append(dec.intrinsic_f)
        qs.append(dec.q)
        state = res.next_state
        if done:
            break
    return cfg, rows, np.array(fs), np.array(qs, dtype=np.int64)


def show(mode: str) -> None:
    cfg, rows, fs, qs = roll_episode(mode)
    print("=" * 66)
    print(f"mode={mode}")
    print(" tick  q  theta  intrinsic_f  cost  source        shaped_total")
    for tick, q, theta, f, cost, src, shaped in rows:
        print(f"  {tick:3d}  {q}    {theta}   {f:+.4f}    {cost:.2f}  "
              f"{src:<12s}  {shaped:+.4f}")
    audit = telescoping_audit(fs, qs, cfg.gamma)
    on = int(qs.sum())
    print(f"on for {on}/{len(qs)} ticks; "
          f"discounted gated sum = {audit:+.2e} (cancels)")


if __name__ == "__main__":
    np.set_printoptions(precision=4, suppress=True)
    for mode in ("ligs", "random", "always_on"):
        show(mode)
