"""Training coordinator: rollout collection and the phased update cycle.

One Trainer owns num_actors env instances, the task agents' learner, and,
for the switching variants, the generator stack (potential net, switch and
reward policies, novelty signal). Each cycle collects rollout_length steps
from every actor, then runs the update phases in a fixed order:

    collect -> novelty -> generator -> agents

Baselines skip the phases they do not own: mappo/ippo never construct a
generator or novelty module, mappo_rnd constructs only the distillation
pair and feeds its normalized bonus straight into the agents' rewards.

Outputs per run directory: metrics.csv (one row per finished episode),
heatmap.csv (per-cell switch-activation counts), checkpoints/*.bin, and an
optional per-tick trace for actor 0.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import nn
from .config import GENERATOR_ALGOS, RunConfig, validate_config
from .envs import make_env
from .generator import (GeneratorBuffer, GeneratorPolicies, PotentialNet,
                        SwitchState, decide, generator_reward,
                        update_generator)
from .learners import RolloutBuffer, TeamLearner, assemble_shaped_reward
from .metrics import MetricsRow, MetricsWriter
from .novelty import (RndPair, RunningStd, VisitCounter, novelty_count,
                      novelty_rnd, rnd_input, rnd_update)
from .rng import (Rng, STREAM_AGENT_ACT, STREAM_ENV, STREAM_GENERATOR,
                  STREAM_INIT_GENERATOR, STREAM_INIT_NOVELTY,
                  STREAM_INIT_POLICY, STREAM_UPDATE, rng_fork)

# decide() mode per algorithm token
_ALG_MODE = {"ligs": "ligs", "ligs_random_switch": "random",
             "ligs_always_on": "always_on"}


class TrainAbort(RuntimeError):
    """A numeric failure during training, tagged with phase and step."""


class Trainer:
    def __init__(self, cfg: RunConfig, out_dir: str, trace_path: str | None = None,
                 record_phases: bool = False):
        validate_config(cfg)
        self.cfg = cfg
        self.out_dir = out_dir
        self.trace_path = trace_path
        self.phase_log: list | None = [] if record_phases else None

        root = Rng(cfg.seed)
        env_root = rng_fork(root, STREAM_ENV)
        act_root = rng_fork(root, STREAM_AGENT_ACT)
        gen_root = rng_fork(root, STREAM_GENERATOR)
        self.env_rngs = [rng_fork(env_root, i) for i in range(cfg.num_actors)]
        self.act_rngs = [rng_fork(act_root, i) for i in range(cfg.num_actors)]
        self.gen_rngs = [rng_fork(gen_root, i) for i in range(cfg.num_actors)]
        self.update_rng = rng_fork(root, STREAM_UPDATE)

        self.envs = [make_env(cfg.experiment_id) for _ in range(cfg.num_actors)]
        probe = self.envs[0]
        self.obs_dim = probe.obs_dim
        self.n_agents = probe.n_agents
        self.n_actions = probe.n_actions
        self.learner = TeamLearner(cfg, self.obs_dim, self.n_actions,
                                   self.n_agents, rng_fork(root, STREAM_INIT_POLICY))

        self.is_gen = cfg.algorithm in GENERATOR_ALGOS
        self.mode = _ALG_MODE.get(cfg.algorithm, "ligs")
        self.pot = self.gp = None
        self.rnd = self.counter = self.running = None
        if self.is_gen:
            init = rng_fork(root, STREAM_INIT_GENERATOR)
            self.pot = PotentialNet(self.obs_dim, cfg.generator_action_count,
                                    cfg.hidden_width, rng_fork(init, 0))
            self.gp = GeneratorPolicies(self.obs_dim, cfg.generator_action_count,
                                        cfg.hidden_width, rng_fork(init, 1))
            self.switch_states = [SwitchState() for _ in range(cfg.num_actors)]
        if self.is_gen or cfg.algorithm == "mappo_rnd":
            if cfg.novelty_kind == "rnd" or cfg.algorithm == "mappo_rnd":
                d = self.obs_dim + self.n_agents * self.n_actions
                self.rnd = RndPair(d, cfg.l_output_size, cfg.hidden_width,
                                   rng_fork(root, STREAM_INIT_NOVELTY))
                self.running = RunningStd()
            else:
                self.counter = VisitCounter()

        h, w = probe.height, probe.width
        self.heat = np.zeros((h, w), dtype=np.int64)
        self.global_step = 0
        self.episodes = 0
        self.on_steps = 0

    # -- small helpers -----------------------------------------------------
    def _phase(self, name: str, cycle: int):
        if self.phase_log is not None:
            self.phase_log.append((cycle, name))
        return _PhaseGuard(name, self)

    def _reset_actor(self, i: int) -> np.ndarray:
        self.envs[i].reset(self.env_rngs[i])
        return self.envs[i].encode_state()

    # -- the run -----------------------------------------------------------
    def run(self) -> dict:
        cfg = self.cfg
        T, A = cfg.rollout_length, cfg.num_actors
        n_cycles = cfg.total_env_steps // (T * A)
        os.makedirs(self.out_dir, exist_ok=True)
        writer = MetricsWriter(os.path.join(self.out_dir, "metrics.csv"))
        trace_fh = open(self.trace_path, "w") if self.trace_path else None

        S = np.array([self._reset_actor(i) for i in range(A)])
        ep_ext = np.zeros(A)
        ep_int = np.zeros(A)
        ep_sw = np.zeros(A, dtype=np.int64)

        try:
            for cycle in range(n_cycles):
                buf = RolloutBuffer(T, A, self.n_agents, self.obs_dim)
                gbuf = GeneratorBuffer(T, A, self.obs_dim) if self.is_gen else None
                cost = np.zeros((T, A))
                nov = np.zeros((T, A))
                joint = np.zeros((T, A, self.n_agents), dtype=np.int64)

                with self._phase("collect", cycle):
                    for t in range(T):
                        acts, logps, vals = self.learner.act(S, self.act_rngs)
                        buf.states[t], buf.actions[t] = S, acts
                        buf.logps[t], buf.values[t] = logps, vals
                        joint[t] = acts
                        for i, env in enumerate(self.envs):
                            pre_positions = list(env.positions)
                            pre_tick = env.tick
                            if self.counter is not None:
                                nov[t, i] = novelty_count(self.counter,
                                                          env.state_key())
                            res = env.step([int(a) for a in acts[i]])
                            self.global_step += 1
                            buf.rewards[t, i] = res.per_agent_reward
                            buf.team_rewards[t, i] = res.team_reward
                            buf.dones[t, i] = float(res.done)
                            ep_ext[i] += res.team_reward
                            if trace_fh is not None and i == 0:
                                trace_fh.write(json.dumps(
                                    {"tick": pre_tick,
                                     "positions": [list(p) for p in pre_positions],
                                     "actions": [int(a) for a in acts[i]],
                                     "rewards": list(res.per_agent_reward)}) + "\n")
                            if self.is_gen:
                                dec = decide(self.gp, self.switch_states[i],
                                             S[i], res.next_state, self.pot,
                                             self.gen_rngs[i], cfg, res.done,
                                             pre_tick, self.mode)
                                gbuf.states[t, i] = S[i]
                                gbuf.q[t, i] = dec.q
                                gbuf.theta[t, i] = dec.theta
                                gbuf.switch_logp[t, i] = dec.switch_logp
                                gbuf.theta_logp[t, i] = dec.theta_logp
                                gbuf.dones[t, i] = float(res.done)
                                cost[t, i] = dec.switch_cost_charge
                                buf.intrinsic_f[t, i] = dec.intrinsic_f
                                buf.q[t, i] = dec.q
                                ep_int[i] += dec.intrinsic_f * dec.q
                                ep_sw[i] += dec.q
                                self.on_steps += dec.q
                                if dec.switched_on:
                                    for (x, y) in pre_positions:
                                        self.heat[y, x] += 1
                            if res.done:
                                self.episodes += 1
                                writer.emit(MetricsRow(
                                    step=self.global_step,
                                    ret_ext=float(ep_ext[i]),
                                    ret_int=float(ep_int[i]),
                                    switches=int(ep_sw[i]),
                                    success=int(env.success()),
                                    seed=cfg.seed))
                                ep_ext[i] = ep_int[i] = 0.0
                                ep_sw[i] = 0
                                S[i] = self._reset_actor(i)
                            else:
                                S[i] = res.next_state
                    buf.bootstrap = self.learner.value(S)
                    if self.is_gen:
                        gbuf.final_states = S.copy()

                if self.rnd is not None:
                    with self._phase("novelty", cycle):
                        X = np.array([rnd_input(buf.states[t, i], joint[t, i],
                                                self.n_actions)
                                      for t in range(T) for i in range(A)])
                        raw = novelty_rnd(self.rnd, X)
                        self.running.update(raw)
                        nov = self.running.normalize(raw).reshape(T, A)
                        perm = self.update_rng.permutation(X.shape[0])
                        for mb in np.array_split(perm, cfg.num_minibatches):
                            if mb.size:
                                rnd_update(self.rnd, X[mb], cfg.learning_rate,
                                           cfg.grad_clip_norm)
                elif self.counter is not None:
                    self._phase("novelty", cycle).done()

                if self.is_gen:
                    with self._phase("generator", cycle):
                        for t in range(T):
                            for i in range(A):
                                gbuf.rewards[t, i] = generator_reward(
                                    buf.team_rewards[t, i], buf.intrinsic_f[t, i],
                                    gbuf.q[t, i], cost[t, i], nov[t, i])
                        update_generator(self.gp, gbuf, cfg, self.update_rng)

                with self._phase("agents", cycle):
                    if cfg.algorithm == "mappo_rnd":
                        shaped = assemble_shaped_reward(
                            buf.rewards, nov[:, :, None], 1.0, cfg)
                    elif self.is_gen:
                        shaped = assemble_shaped_reward(
                            buf.rewards, buf.intrinsic_f[:, :, None],
                            buf.q[:, :, None], cfg)
                    else:
                        shaped = cfg.extrinsic_coef * buf.rewards
                    self.learner.update(buf, shaped, cfg, self.update_rng)
        finally:
            writer.close()
            if trace_fh is not None:
                trace_fh.close()

        self._write_heatmap()
        self._write_checkpoints()
        return {"env_steps": self.global_step,
                "episodes": self.episodes,
                "switch_on_steps": int(self.on_steps),
                "switch_fraction": self.on_steps / max(self.global_step, 1),
                "cycles": n_cycles,
                "out_dir": self.out_dir}

    # -- artifacts ---------------------------------------------------------
    def _write_heatmap(self):
        path = os.path.join(self.out_dir, "heatmap.csv")
        with open(path, "w") as fh:
            for row in self.heat:
                fh.write(",".join(str(int(v)) for v in row) + "\n")

    def _write_checkpoints(self):
        d = os.path.join(self.out_dir, "checkpoints")
        os.makedirs(d, exist_ok=True)
        for k, p in enumerate(self.learner.actors):
            nn.save_params(p, os.path.join(d, f"actor_{k}.bin"))
        for k, p in enumerate(self.learner.critics):
            nn.save_params(p, os.path.join(d, f"critic_{k}.bin"))
        if self.is_gen:
            nn.save_params(self.pot.net, os.path.join(d, "potential.bin"))
            nn.save_params(self.gp.switch_actor, os.path.join(d, "switch_actor.bin"))
            nn.save_params(self.gp.switch_critic, os.path.join(d, "switch_critic.bin"))
            nn.save_params(self.gp.reward_actor, os.path.join(d, "reward_actor.bin"))
            nn.save_params(self.gp.reward_critic, os.path.join(d, "reward_critic.bin"))
        if self.rnd is not None:
            nn.save_params(self.rnd.target, os.path.join(d, "rnd_target.bin"))
            nn.save_params(self.rnd.predictor, os.path.join(d, "rnd_predictor.bin"))


class _PhaseGuard:
    """Re-raises numeric failures with phase + step context attached."""

    def __init__(self, name: str, trainer: Trainer):
        self.name = name
        self.trainer = trainer

    def __enter__(self):
        return self

    def done(self):
        pass

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (nn.NonFiniteError, FloatingPointError)):
            raise TrainAbort(
                f"{self.name} phase aborted at env step "
                f"{self.trainer.global_step}: {exc}") from exc
        return False
