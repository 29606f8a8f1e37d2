"""PPO task learners: shared-parameter teams with a central critic, or
fully independent learners, over the numpy nets in nn.py.

The two wirings:

* mappo : one actor shared by all agents (agent-id one-hot appended to the
  observation) and one centralized critic reading the global state. The
  share_params flag swaps the shared actor for per-agent actors while
  keeping the central critic.
* ippo  : per-agent actors and per-agent critics; no sharing anywhere.

Updates are clipped-surrogate PPO: ratio clip 0.2, value loss coefficient
0.5, entropy bonus 0.01, advantages normalized per minibatch, Adam with a
global gradient-norm clip.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .rng import Rng, rng_fork

CLIP_EPS = 0.2
VALUE_COEF = 0.5
ENTROPY_COEF = 0.01


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def entropy(logits: np.ndarray) -> np.ndarray:
    lp = log_softmax(logits)
    return -(np.exp(lp) * lp).sum(axis=-1)


def sample_actions(logits: np.ndarray, rng: Rng):
    """Sample one action per row; returns (actions, log_probs)."""
    if not np.all(np.isfinite(logits)):
        raise nn.NonFiniteError("non-finite logits in action sampling")
    p = softmax(logits)
    c = np.cumsum(p, axis=-1)
    c[..., -1] = np.maximum(c[..., -1], 1.0)
    u = rng.random(logits.shape[:-1])[..., None]
    acts = (u >= c).sum(axis=-1)
    lp = log_softmax(logits)
    return acts, np.take_along_axis(lp, acts[..., None], axis=-1)[..., 0]


def compute_gae(rewards, values, dones, gamma, lam, bootstrap_value):
    """Generalized advantage estimates over one time-ordered stream.

    dones[t] marks that the episode ended at step t, so nothing bootstraps
    across it; the final step bootstraps bootstrap_value when not done.
    Returns (advantages, value_targets).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    last = 0.0
    for t in range(T - 1, -1, -1):
        next_v = bootstrap_value if t == T - 1 else values[t + 1]
        delta = rewards[t] + gamma * next_v * (1.0 - dones[t]) - values[t]
        last = delta + gamma * lam * (1.0 - dones[t]) * last
        adv[t] = last
    return adv, adv + values


def assemble_shaped_reward(extrinsic, intrinsic_f, q, cfg):
    """Training reward for task agents: coefficients only, never novelty."""
    return cfg.extrinsic_coef * np.asarray(extrinsic, dtype=np.float64) \
        + cfg.intrinsic_coef * np.asarray(intrinsic_f, dtype=np.float64) * np.asarray(q, dtype=np.float64)


def policy_grad_logits(logits, actions, old_logp, adv, clip_eps=CLIP_EPS,
                       entropy_coef=ENTROPY_COEF):
    """Loss pieces and d(loss)/d(logits) for the clipped surrogate + entropy.

    loss = -mean(min(rho*A, clip(rho)*A)) - entropy_coef * mean(H).
    Every per-sample contribution uses rho clipped into [1-eps, 1+eps] when
    the clipped branch is the minimum; ties keep the unclipped gradient.
    Returns (policy_loss, mean_entropy, dlogits).
    """
    B = logits.shape[0]
    lp = log_softmax(logits)
    p = np.exp(lp)
    lp_a = np.take_along_axis(lp, actions[:, None], axis=1)[:, 0]
    rho = np.exp(lp_a - old_logp)
    s1 = rho * adv
    s2 = np.clip(rho, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    surr = np.minimum(s1, s2)
    policy_loss = -float(surr.mean())
    # gradient flows only where the unclipped branch is active
    active = (s1 <= s2).astype(np.float64)
    onehot = np.zeros_like(p)
    onehot[np.arange(B), actions] = 1.0
    dlogits = -(active * rho * adv)[:, None] * (onehot - p) / B
    h = -(p * lp).sum(axis=1)
    # dH/dz_j = -p_j * (lp_j + H)
    dlogits += entropy_coef * (p * (lp + h[:, None])) / B
    return policy_loss, float(h.mean()), dlogits


class RolloutBuffer:
    """Time-major arrays for one collection cycle: [T, n_actors, ...]."""

    def __init__(self, T, n_actors, n_agents, obs_dim):
        self.T, self.n_actors, self.n_agents = T, n_actors, n_agents
        self.states = np.zeros((T, n_actors, obs_dim))
        self.actions = np.zeros((T, n_actors, n_agents), dtype=np.int64)
        self.logps = np.zeros((T, n_actors, n_agents))
        self.values = np.zeros((T, n_actors, n_agents))
        self.rewards = np.zeros((T, n_actors, n_agents))      # extrinsic, per agent
        self.team_rewards = np.zeros((T, n_actors))
        self.intrinsic_f = np.zeros((T, n_actors))
        self.q = np.zeros((T, n_actors))
        self.dones = np.zeros((T, n_actors))
        self.novelty = np.zeros((T, n_actors))                # generator-only signal
        self.bootstrap = np.zeros((n_actors, n_agents))       # V(s_T) per actor


class TeamLearner:
    """Actors and critics for N task agents plus their PPO update."""

    def __init__(self, cfg, obs_dim: int, n_actions: int, n_agents: int, rng: Rng):
        self.style = cfg.base_learner if cfg.algorithm != "ippo" else "ippo"
        if cfg.algorithm == "mappo" or cfg.algorithm == "mappo_rnd":
            self.style = "mappo"
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.obs_dim = obs_dim
        self.share_params = cfg.share_params
        self.lr = cfg.learning_rate
        self.clip_norm = cfg.grad_clip_norm
        hidden = [cfg.hidden_width, cfg.hidden_width]
        if self.style == "mappo" and self.share_params:
            shapes = nn.mlp_shapes(obs_dim + n_agents, hidden, n_actions)
            self.actors = [nn.init_params(shapes, rng_fork(rng, 0))]
        else:
            self.actors = [nn.init_params(nn.mlp_shapes(obs_dim, hidden, n_actions),
                                          rng_fork(rng, 10 + i))
                           for i in range(n_agents)]
        if self.style == "mappo":
            self.critics = [nn.init_params(nn.mlp_shapes(obs_dim, hidden, 1),
                                           rng_fork(rng, 1))]
        else:
            self.critics = [nn.init_params(nn.mlp_shapes(obs_dim, hidden, 1),
                                           rng_fork(rng, 20 + i))
                            for i in range(n_agents)]

    # -- wiring helpers ---------------------------------------------------
    def _actor_input(self, states: np.ndarray, agent: int) -> np.ndarray:
        if len(self.actors) == 1:
            ids = np.zeros((states.shape[0], self.n_agents))
            ids[:, agent] = 1.0
            return np.concatenate([states, ids], axis=1)
        return states

    def _actor_for(self, agent: int) -> nn.ParamStore:
        return self.actors[0] if len(self.actors) == 1 else self.actors[agent]

    def _critic_for(self, agent: int) -> nn.ParamStore:
        return self.critics[0] if len(self.critics) == 1 else self.critics[agent]

    # -- acting -----------------------------------------------------------
    def act(self, states: np.ndarray, rng):
        """Sample joint actions for a batch of env states.

        states: [B, obs_dim]. rng is one stream for the whole batch, or a
        list of per-row streams (one per actor, so actor streams stay
        independent). Returns actions [B, n_agents], log-probs [B, n_agents],
        values [B, n_agents].
        """
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        B = states.shape[0]
        actions = np.zeros((B, self.n_agents), dtype=np.int64)
        logps = np.zeros((B, self.n_agents))
        per_row = isinstance(rng, (list, tuple))
        if per_row and len(rng) != B:
            raise ValueError(f"need one rng per row: {len(rng)} != {B}")
        for i in range(self.n_agents):
            logits, _ = nn.forward(self._actor_for(i), self._actor_input(states, i))
            if per_row:
                for j in range(B):
                    a, lp = sample_actions(logits[j:j + 1], rng[j])
                    actions[j, i], logps[j, i] = a[0], lp[0]
            else:
                actions[:, i], logps[:, i] = sample_actions(logits, rng)
        return actions, logps, self.value(states)

    def value(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        B = states.shape[0]
        vals = np.zeros((B, self.n_agents))
        for i in range(self.n_agents):
            v, _ = nn.forward(self._critic_for(i), states)
            vals[:, i] = v[:, 0]
        # the central critic serves every agent with the same value
        return vals

    # -- learning ---------------------------------------------------------
    def update(self, buf: RolloutBuffer, train_rewards: np.ndarray, cfg, rng: Rng):
        """PPO over one rollout; train_rewards is [T, n_actors, n_agents]."""
        T, A, N = buf.T, buf.n_actors, self.n_agents
        adv = np.zeros((T, A, N))
        tgt = np.zeros((T, A, N))
        for a in range(A):
            for i in range(N):
                adv[:, a, i], tgt[:, a, i] = compute_gae(
                    train_rewards[:, a, i], buf.values[:, a, i], buf.dones[:, a],
                    cfg.gamma, cfg.gae_lambda, buf.bootstrap[a, i])

        rows = T * A
        flat_states = buf.states.reshape(rows, -1)
        flat_actions = buf.actions.reshape(rows, N)
        flat_logps = buf.logps.reshape(rows, N)
        flat_adv = adv.reshape(rows, N)
        flat_tgt = tgt.reshape(rows, N)
        stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "updates": 0}
        for _ in range(cfg.num_epochs):
            perm = rng.permutation(rows)
            for mb in np.array_split(perm, cfg.num_minibatches):
                if mb.size == 0:
                    continue
                a = flat_adv[mb]
                a = (a - a.mean()) / (a.std() + 1e-8)
                self._minibatch_step(flat_states[mb], flat_actions[mb],
                                     flat_logps[mb], a, flat_tgt[mb], stats)
        n = max(stats["updates"], 1)
        return {k: v / n if k != "updates" else v for k, v in stats.items()}

    def _minibatch_step(self, states, actions, old_logps, adv, targets, stats):
        for i in range(self.n_agents):
            actor = self._actor_for(i)
            logits, tape = nn.forward(actor, self._actor_input(states, i))
            ploss, ent, dlogits = policy_grad_logits(
                logits, actions[:, i], old_logps[:, i], adv[:, i])
            nn.backward(actor, tape, dlogits)
            stats["policy_loss"] += ploss
            stats["entropy"] += ent
            if len(self.actors) > 1:
                nn.adam_step(actor, self.lr, self.clip_norm)
        if len(self.actors) == 1:
            nn.adam_step(self.actors[0], self.lr, self.clip_norm)

        if len(self.critics) == 1:
            # central critic regresses to the agent-mean target
            critic = self.critics[0]
            v, tape = nn.forward(critic, states)
            err = v[:, 0] - targets.mean(axis=1)
            vloss = 0.5 * float((err ** 2).mean())
            nn.backward(critic, tape, VALUE_COEF * (err / err.size)[:, None])
            nn.adam_step(critic, self.lr, self.clip_norm)
            stats["value_loss"] += vloss
        else:
            for i in range(self.n_agents):
                critic = self.critics[i]
                v, tape = nn.forward(critic, states)
                err = v[:, 0] - targets[:, i]
                stats["value_loss"] += 0.5 * float((err ** 2).mean()) / self.n_agents
                nn.backward(critic, tape, VALUE_COEF * (err / err.size)[:, None])
                nn.adam_step(critic, self.lr, self.clip_norm)
        stats["updates"] += 1


def ppo_update(learner: TeamLearner, buf: RolloutBuffer, train_rewards, cfg, rng: Rng):
    """Module-level handle for one PPO pass over a rollout."""
    return learner.update(buf, train_rewards, cfg, rng)
