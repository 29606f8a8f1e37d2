"""The switching reward generator.

A binary switch policy decides, state by state, whether an intrinsic reward
stream is active. While active, the generator picks a channel theta and the
agents receive the potential difference

    f_t = gamma * u_{t+1} - u_t,      u_t = pot(s_t)[theta_t],

where pot is a frozen random net. The potential is forced to zero at every
switch boundary and at episode end, so the discounted sum of f over any
episode telescopes to exactly zero and the task's optimal policies are
untouched; what changes is the path by which the agents find them.

Switch-ons cost the generator a fixed charge. Off steps emit dummy zeros.
While on, the stream ends stochastically (switch_off=prob) or whenever the
switch policy says so at the next state (switch_off=policy). Ablations
replace only how q is produced: a fair coin (random) or a constant 1
(always_on); everything downstream is shared code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .learners import (CLIP_EPS, VALUE_COEF, compute_gae, log_softmax,
                       policy_grad_logits, sample_actions, softmax)
from .rng import Rng, rng_fork

MODES = ("ligs", "random", "always_on")


class PotentialNet:
    """Frozen net from states to m potential channels; never trained."""

    def __init__(self, obs_dim: int, m: int, hidden: int, rng: Rng):
        self.net = nn.init_params(nn.mlp_shapes(obs_dim, [hidden, hidden], m), rng)
        self.m = m

    def value(self, state: np.ndarray, theta: int) -> float:
        y, _ = nn.forward(self.net, np.asarray(state, dtype=np.float64))
        return float(y[int(theta)])


class GeneratorPolicies:
    """Switch actor (2 logits), reward actor (m logits), one critic each."""

    def __init__(self, obs_dim: int, m: int, hidden: int, rng: Rng):
        h = [hidden, hidden]
        self.switch_actor = nn.init_params(nn.mlp_shapes(obs_dim, h, 2), rng_fork(rng, 0))
        self.switch_critic = nn.init_params(nn.mlp_shapes(obs_dim, h, 1), rng_fork(rng, 1))
        self.reward_actor = nn.init_params(nn.mlp_shapes(obs_dim, h, m), rng_fork(rng, 2))
        self.reward_critic = nn.init_params(nn.mlp_shapes(obs_dim, h, 1), rng_fork(rng, 3))
        self.m = m


@dataclass
class SwitchState:
    """Per-env carry between steps: on/off flag and the potential chain."""
    I: int = 0
    prev_potential: float = 0.0
    next_q: int | None = None       # pre-drawn q for the next step (policy/random)
    next_q_logp: float = 0.0
    switch_times: list = field(default_factory=list)

    def reset(self):
        self.I = 0
        self.prev_potential = 0.0
        self.next_q = None
        self.next_q_logp = 0.0
        self.switch_times = []


@dataclass
class GeneratorDecision:
    q: int
    theta: int
    intrinsic_f: float
    switch_cost_charge: float
    switch_logp: float
    theta_logp: float
    switched_on: bool
    q_source: str


def _switch_sample(gp: GeneratorPolicies, state, rng: Rng):
    logits, _ = nn.forward(gp.switch_actor, state)
    acts, lps = sample_actions(logits[None, :], rng)
    return int(acts[0]), float(lps[0])


def _switch_logp_of(gp: GeneratorPolicies, state, q: int) -> float:
    logits, _ = nn.forward(gp.switch_actor, state)
    return float(log_softmax(logits)[q])


def decide(gp: GeneratorPolicies, ss: SwitchState, s_t, s_tp1, pot: PotentialNet,
           rng: Rng, cfg, done: bool, tick: int, mode: str = "ligs") -> GeneratorDecision:
    """One generator step: produce q, theta and the gated intrinsic reward.

    `done` marks that s_tp1 ends the episode, which forces the terminal
    potential to zero. The next step must see the same SwitchState object.
    """
    if mode not in MODES:
        raise ValueError(f"unknown generator mode '{mode}'")
    was_on = ss.I == 1
    q_source = mode

    # ---- produce q, and (where the boundary needs it) the next q --------
    if mode == "always_on":
        q, switch_logp = 1, _switch_logp_of(gp, s_t, 1)
        next_on = not done
    elif mode == "random":
        if ss.next_q is None:
            ss.next_q = int(rng.random() < 0.5)
        q = ss.next_q
        switch_logp = _switch_logp_of(gp, s_t, q)
        ss.next_q = int(rng.random() < 0.5)     # pre-draw for t+1
        next_on = (not done) and ss.next_q == 1
    elif cfg.switch_off == "policy":
        if ss.next_q is None:
            q, switch_logp = _switch_sample(gp, s_t, rng)
        else:
            q, switch_logp = ss.next_q, ss.next_q_logp
        ss.next_q, ss.next_q_logp = _switch_sample(gp, s_tp1, rng)
        next_on = (not done) and ss.next_q == 1
        q_source = "policy"
    else:                                        # ligs, stochastic termination
        if was_on:
            q, switch_logp = 1, _switch_logp_of(gp, s_t, 1)
            q_source = "continuation"
        else:
            q, switch_logp = _switch_sample(gp, s_t, rng)
            q_source = "policy"
        if q == 1:
            next_on = (not done) and not (rng.random() < cfg.option_terminate_prob)
        else:
            next_on = False

    # ---- unified downstream: boundaries, potentials, reward -------------
    if q == 0:
        ss.I = 0
        ss.prev_potential = 0.0
        if done:
            ss.reset()
        return GeneratorDecision(0, 0, 0.0, 0.0, switch_logp, 0.0, False, q_source)

    switched_on = not was_on
    cost = cfg.switch_cost if switched_on else 0.0
    if switched_on:
        ss.switch_times.append(tick)
    u_t = 0.0 if switched_on else ss.prev_potential
    logits, _ = nn.forward(gp.reward_actor, s_t)
    th, th_lp = sample_actions(logits[None, :], rng)
    theta, theta_logp = int(th[0]), float(th_lp[0])
    if next_on:
        nlogits, _ = nn.forward(gp.reward_actor, s_tp1)
        nth, _ = sample_actions(nlogits[None, :], rng)
        u_next = pot.value(s_tp1, int(nth[0]))
    else:
        u_next = 0.0
    f = cfg.gamma * u_next - u_t
    ss.I = 1 if next_on else 0
    ss.prev_potential = u_next if next_on else 0.0
    if done:
        # episode boundary: nothing carries into the next episode
        ss.reset()
    return GeneratorDecision(1, theta, f, cost, switch_logp, theta_logp,
                             switched_on, q_source)


def generator_reward(team_reward: float, intrinsic_f: float, q: int,
                     switch_cost_charge: float, novelty: float) -> float:
    """One row of the generator's own stream: team extrinsic + gated
    intrinsic - switch-on charge + novelty bonus."""
    return float(team_reward) + float(intrinsic_f) * float(q) \
        - float(switch_cost_charge) + float(novelty)


def telescoping_audit(intrinsic_f, q, gamma: float) -> float:
    """Discounted sum of the gated intrinsic rewards over one episode.

    Zero (to float precision) whenever the potential boundaries were zeroed
    at switch times and episode end, which decide() enforces.
    """
    f = np.asarray(intrinsic_f, dtype=np.float64)
    qv = np.asarray(q, dtype=np.float64)
    disc = gamma ** np.arange(f.shape[0])
    return float(np.sum(disc * f * qv))


class GeneratorBuffer:
    """Time-major generator stream: [T, n_actors]."""

    def __init__(self, T, n_actors, obs_dim):
        self.states = np.zeros((T, n_actors, obs_dim))
        self.q = np.zeros((T, n_actors), dtype=np.int64)
        self.theta = np.zeros((T, n_actors), dtype=np.int64)
        self.switch_logp = np.zeros((T, n_actors))
        self.theta_logp = np.zeros((T, n_actors))
        self.rewards = np.zeros((T, n_actors))       # generator_reward rows
        self.dones = np.zeros((T, n_actors))
        self.final_states = np.zeros((n_actors, obs_dim))   # s_T for bootstrap
        self.T, self.n_actors = T, n_actors


def update_generator(gp: GeneratorPolicies, buf: GeneratorBuffer, cfg, rng: Rng):
    """PPO on the generator's stream: the switch actor trains on every row,
    the reward actor only on rows where q=1."""
    T, A = buf.T, buf.n_actors
    rows = T * A
    flat_states = buf.states.reshape(rows, -1)

    def critic_stream(critic):
        v, _ = nn.forward(critic, flat_states)
        values = v[:, 0].reshape(T, A)
        vT, _ = nn.forward(critic, buf.final_states)
        adv = np.zeros((T, A))
        tgt = np.zeros((T, A))
        for a in range(A):
            boot = 0.0 if buf.dones[-1, a] else float(vT[a, 0])
            adv[:, a], tgt[:, a] = compute_gae(buf.rewards[:, a], values[:, a],
                                               buf.dones[:, a], cfg.gamma,
                                               cfg.gae_lambda, boot)
        return adv.reshape(rows), tgt.reshape(rows)

    s_adv, s_tgt = critic_stream(gp.switch_critic)
    r_adv, r_tgt = critic_stream(gp.reward_critic)
    mask = buf.q.reshape(rows) == 1
    stats = {"switch_loss": 0.0, "reward_loss": 0.0, "updates": 0}
    for _ in range(cfg.num_epochs):
        perm = rng.permutation(rows)
        for mb in np.array_split(perm, cfg.num_minibatches):
            if mb.size == 0:
                continue
            # switch actor + critic on all rows
            a = s_adv[mb]
            a = (a - a.mean()) / (a.std() + 1e-8)
            logits, tape = nn.forward(gp.switch_actor, flat_states[mb])
            ploss, _, dlogits = policy_grad_logits(
                logits, buf.q.reshape(rows)[mb], buf.switch_logp.reshape(rows)[mb], a)
            nn.backward(gp.switch_actor, tape, dlogits)
            nn.adam_step(gp.switch_actor, cfg.learning_rate, cfg.grad_clip_norm)
            _critic_step(gp.switch_critic, flat_states[mb], s_tgt[mb], cfg)
            stats["switch_loss"] += ploss
            # reward actor + critic on the gated rows
            sel = mb[mask[mb]]
            if sel.size > 0:
                a = r_adv[sel]
                a = (a - a.mean()) / (a.std() + 1e-8)
                logits, tape = nn.forward(gp.reward_actor, flat_states[sel])
                ploss, _, dlogits = policy_grad_logits(
                    logits, buf.theta.reshape(rows)[sel],
                    buf.theta_logp.reshape(rows)[sel], a)
                nn.backward(gp.reward_actor, tape, dlogits)
                nn.adam_step(gp.reward_actor, cfg.learning_rate, cfg.grad_clip_norm)
                stats["reward_loss"] += ploss
            _critic_step(gp.reward_critic, flat_states[mb], r_tgt[mb], cfg)
            stats["updates"] += 1
    n = max(stats["updates"], 1)
    return {k: v / n if k != "updates" else v for k, v in stats.items()}


def _critic_step(critic, states, targets, cfg):
    v, tape = nn.forward(critic, states)
    err = v[:, 0] - targets
    nn.backward(critic, tape, VALUE_COEF * (err / err.size)[:, None])
    nn.adam_step(critic, cfg.learning_rate, cfg.grad_clip_norm)
