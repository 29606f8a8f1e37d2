"""Fully-connected nets in plain numpy: forward tape, reverse pass, Adam.

All parameters of one net live in a single flat float64 vector; weight and
bias views index into it so the optimizer works on one array. Hidden layers
are ReLU, the output layer is linear. Initial weights are uniform in
(-sqrt(1/fan_in), +sqrt(1/fan_in)) and biases start at zero.
"""

from __future__ import annotations

import struct

import numpy as np

from .rng import Rng

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class NonFiniteError(RuntimeError):
    """A gradient or activation stopped being finite."""


class ParamStore:
    """One net's parameters, gradients and Adam moments over a flat vector."""

    def __init__(self, layer_shapes: list[tuple[int, int]]):
        if not layer_shapes:
            raise ValueError("layer_shapes must be nonempty")
        for i in range(1, len(layer_shapes)):
            if layer_shapes[i][0] != layer_shapes[i - 1][1]:
                raise ValueError(
                    f"layer {i} input {layer_shapes[i][0]} != layer {i-1} output "
                    f"{layer_shapes[i - 1][1]}")
        self.layer_shapes = [(int(a), int(b)) for a, b in layer_shapes]
        n = sum(a * b + b for a, b in self.layer_shapes)
        self.theta = np.zeros(n, dtype=np.float64)
        self.grads = np.zeros(n, dtype=np.float64)
        self.m1 = np.zeros(n, dtype=np.float64)
        self.m2 = np.zeros(n, dtype=np.float64)
        self.step_count = 0
        # per-layer views into the flat vectors
        self.weights, self.biases = [], []
        self.grad_w, self.grad_b = [], []
        off = 0
        for a, b in self.layer_shapes:
            self.weights.append(self.theta[off:off + a * b].reshape(a, b))
            self.grad_w.append(self.grads[off:off + a * b].reshape(a, b))
            off += a * b
            self.biases.append(self.theta[off:off + b])
            self.grad_b.append(self.grads[off:off + b])
            off += b

    @property
    def in_dim(self) -> int:
        return self.layer_shapes[0][0]

    @property
    def out_dim(self) -> int:
        return self.layer_shapes[-1][1]

    @property
    def size(self) -> int:
        return self.theta.size


def init_params(layer_shapes: list[tuple[int, int]], rng: Rng) -> ParamStore:
    p = ParamStore(layer_shapes)
    for w in p.weights:
        bound = np.sqrt(1.0 / w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return p


def mlp_shapes(in_dim: int, hidden: list[int], out_dim: int) -> list[tuple[int, int]]:
    dims = [in_dim] + list(hidden) + [out_dim]
    return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]


def forward(p: ParamStore, x: np.ndarray):
    """Run the net on a batch [B, in_dim]; returns (y [B, out_dim], tape).

    The tape holds every layer input plus pre-activations, enough to replay
    the graph backwards.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != p.in_dim:
        raise ValueError(f"input dim {x.shape[1]} != net input {p.in_dim}")
    acts = [x]           # inputs to each layer
    pre = []             # pre-activation of each layer
    h = x
    last = len(p.layer_shapes) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        if i != last:
            acts.append(h)
    if not np.all(np.isfinite(h)):
        raise NonFiniteError("non-finite activation in forward pass")
    y = h[0] if squeeze else h
    return y, (acts, pre, squeeze)


def backward(p: ParamStore, tape, dy: np.ndarray) -> None:
    """Accumulate d(loss)/d(theta) into p.grads given d(loss)/d(output)."""
    acts, pre, squeeze = tape
    dy = np.asarray(dy, dtype=np.float64)
    if squeeze and dy.ndim == 1:
        dy = dy[None, :]
    dz = dy
    for i in range(len(p.layer_shapes) - 1, -1, -1):
        if i != len(p.layer_shapes) - 1:
            dz = dz * (pre[i] > 0.0)
        p.grad_w[i] += acts[i].T @ dz
        p.grad_b[i] += dz.sum(axis=0)
        if i > 0:
            dz = dz @ p.weights[i].T


def clip_global_norm(g: np.ndarray, max_norm: float) -> float:
    """Scale g in place so its L2 norm is at most max_norm; returns the raw norm.

    Idempotent: clipping an already-clipped vector changes nothing.
    """
    norm = float(np.sqrt(np.dot(g, g)))
    if norm > max_norm:
        g *= max_norm / norm
    return norm


def adam_step(p: ParamStore, lr: float, clip_norm: float | None = None) -> None:
    """Clip the accumulated gradient, apply one Adam update, zero the gradient."""
    g = p.grads
    if not np.all(np.isfinite(g)):
        idx = int(np.flatnonzero(~np.isfinite(g))[0])
        raise NonFiniteError(f"non-finite gradient at parameter index {idx}")
    if clip_norm is not None:
        clip_global_norm(g, clip_norm)
    p.step_count += 1
    t = p.step_count
    p.m1 *= ADAM_BETA1
    p.m1 += (1.0 - ADAM_BETA1) * g
    p.m2 *= ADAM_BETA2
    p.m2 += (1.0 - ADAM_BETA2) * g * g
    m_hat = p.m1 / (1.0 - ADAM_BETA1 ** t)
    v_hat = p.m2 / (1.0 - ADAM_BETA2 ** t)
    p.theta -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    g[...] = 0.0


_MAGIC = b"LIGSPAR1"


def save_params(p: ParamStore, path: str) -> None:
    """Checkpoint: magic, layer count, (in,out) pairs, flat little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", len(p.layer_shapes)))
        for a, b in p.layer_shapes:
            fh.write(struct.pack("<qq", a, b))
        fh.write(p.theta.astype("<f8").tobytes())


def load_params(path: str) -> ParamStore:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"'{path}' is not a parameter checkpoint")
        (n_layers,) = struct.unpack("<q", fh.read(8))
        shapes = [struct.unpack("<qq", fh.read(16)) for _ in range(n_layers)]
        p = ParamStore([(int(a), int(b)) for a, b in shapes])
        raw = fh.read(p.size * 8)
        if len(raw) != p.size * 8:
            raise ValueError(f"'{path}': truncated parameter payload")
        p.theta[...] = np.frombuffer(raw, dtype="<f8")
    return p
