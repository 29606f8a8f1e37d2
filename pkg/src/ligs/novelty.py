"""Novelty signals for the generator's objective.

Default is a distillation pair: a frozen random target net and a trained
predictor, both reading concat(state encoding, one-hot joint action). The
squared prediction error is the raw novelty; repeated visits train it away.
The ablation is a per-state visit counter paying 1/(count+1).

Novelty is a generator-side quantity only; task agents never see it.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .rng import Rng, rng_fork


class RndPair:
    """Frozen target net plus trained predictor of the same shape."""

    def __init__(self, input_dim: int, out_size: int, hidden: int, rng: Rng):
        shapes = nn.mlp_shapes(input_dim, [hidden, hidden], out_size)
        self.target = nn.init_params(shapes, rng_fork(rng, 0))
        self.predictor = nn.init_params(shapes, rng_fork(rng, 1))
        self.input_dim = input_dim


def novelty_rnd(pair: RndPair, x: np.ndarray) -> np.ndarray | float:
    """Raw novelty ||predictor(x) - target(x)||^2 per row; nonnegative."""
    single = np.asarray(x).ndim == 1
    xb = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t, _ = nn.forward(pair.target, xb)
    p, _ = nn.forward(pair.predictor, xb)
    err = ((p - t) ** 2).sum(axis=1)
    return float(err[0]) if single else err


def rnd_update(pair: RndPair, batch: np.ndarray, lr: float,
               clip_norm: float | None = None) -> float:
    """One predictor step toward the frozen target; returns the mean loss."""
    xb = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if xb.shape[0] == 0 or xb.size == 0:
        raise ValueError("rnd_update needs a nonempty batch")
    t, _ = nn.forward(pair.target, xb)
    p, tape = nn.forward(pair.predictor, xb)
    diff = p - t
    loss = float((diff ** 2).sum(axis=1).mean())
    nn.backward(pair.predictor, tape, 2.0 * diff / xb.shape[0])
    nn.adam_step(pair.predictor, lr, clip_norm)
    return loss


def rnd_input(state: np.ndarray, joint_action, n_actions: int) -> np.ndarray:
    """concat(state, one-hot of each agent's action)."""
    state = np.asarray(state, dtype=np.float64)
    hot = np.zeros(len(joint_action) * n_actions)
    for i, a in enumerate(joint_action):
        hot[i * n_actions + int(a)] = 1.0
    return np.concatenate([state, hot])


class VisitCounter:
    """Count-based ablation: bonus 1/(count+1), then the visit is recorded."""

    def __init__(self):
        self.counts: dict = {}

    def __len__(self):
        return len(self.counts)


def novelty_count(counter: VisitCounter, key) -> float:
    c = counter.counts.get(key, 0)
    counter.counts[key] = c + 1
    return 1.0 / (c + 1.0)


class RunningStd:
    """Streaming std (Welford) used to scale raw novelty before it enters
    the generator's reward."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, values: np.ndarray) -> None:
        for v in np.asarray(values, dtype=np.float64).ravel():
            self.n += 1
            d = v - self.mean
            self.mean += d / self.n
            self.m2 += d * (v - self.mean)

    @property
    def std(self) -> float:
        if self.n < 2:
            return 1.0
        return float(np.sqrt(self.m2 / (self.n - 1)))

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) / (self.std + 1e-8)
