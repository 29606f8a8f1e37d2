"""Executable checks of the switching framework's operator-level guarantees
on small tabular games.

The augmented state is (s, I): the environment state plus the on/off flag of
the intrinsic stream. Two one-step backups matter:

* intervention: the generator acts now; pay R (+ any generator-side bonus L),
  the best channel's F, minus the switch charge, then continue from (s', 1-I)
* continuation: a plain greedy Bellman backup at the same I

Their pointwise max is a gamma-contraction, so value iteration has a unique
fixed point; switching exactly where the intervention branch attains the
fixed point recovers the switch rule. Shaping built from zero-boundary
potential differences telescopes away, which the exhaustive policy
enumeration audit checks to float precision.
"""

from __future__ import annotations

import itertools
import json

import numpy as np

from .rng import Rng, rng_fork


class GameError(ValueError):
    """A tabular game fixture violates its preconditions."""


class PropertyError(AssertionError):
    """An operator-level property failed on a fixture."""


class TabularGame:
    """P[s,a,s'], R[s,a], discount, F channels [s,m], switch cost, bonus L."""

    def __init__(self, P, R, gamma, F, switch_cost, L=None):
        self.P = np.asarray(P, dtype=np.float64)
        self.R = np.asarray(R, dtype=np.float64)
        self.gamma = float(gamma)
        self.F = np.asarray(F, dtype=np.float64)
        self.switch_cost = float(switch_cost)
        if self.P.ndim != 3 or self.P.shape[0] != self.P.shape[2]:
            raise GameError(f"P must be [S,A,S], got {self.P.shape}")
        self.n_states, self.n_actions = self.P.shape[0], self.P.shape[1]
        if self.R.shape != (self.n_states, self.n_actions):
            raise GameError(f"R must be [S,A]={self.n_states, self.n_actions}, got {self.R.shape}")
        if self.F.ndim != 2 or self.F.shape[0] != self.n_states:
            raise GameError(f"F must be [S,m], got {self.F.shape}")
        self.m = self.F.shape[1]
        self.L = np.zeros_like(self.R) if L is None else np.asarray(L, dtype=np.float64)
        if self.L.shape != self.R.shape:
            raise GameError(f"L must match R's shape {self.R.shape}, got {self.L.shape}")
        if not 0.0 < self.gamma < 1.0:
            raise GameError(f"gamma must lie in (0,1), got {self.gamma}")
        if np.any(self.P < -1e-15):
            s, a, _ = np.unravel_index(int(np.argmin(self.P)), self.P.shape)
            raise GameError(f"transition row (s={s}, a={a}) has a negative entry")
        sums = self.P.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)
        if bad.size:
            s, a = bad[0]
            raise GameError(f"transition row (s={s}, a={a}) sums to {sums[s, a]:.6g}, not 1")

    @property
    def fbar(self) -> np.ndarray:
        """Best channel value per state."""
        return self.F.max(axis=1)


def intervention_op(gm: TabularGame, V: np.ndarray, pi: np.ndarray | None = None,
                    g: np.ndarray | None = None) -> np.ndarray:
    """One intervention backup: R + L + F - cost + gamma * E V(s', 1-I).

    V is [S,2]. With pi (joint-action distribution [S,A]) and g (channel
    distribution [S,m]) the backup is the expectation under them; with None
    it is greedy over the action / the channel. Returns [S,2].
    """
    V = np.asarray(V, dtype=np.float64)
    f_term = gm.fbar if g is None else (np.asarray(g) * gm.F).sum(axis=1)
    out = np.zeros((gm.n_states, 2))
    for I in (0, 1):
        cont = gm.P @ V[:, 1 - I]                     # [S,A] expected next value
        per_a = gm.R + gm.L + gm.gamma * cont
        if pi is None:
            body = per_a.max(axis=1)
        else:
            body = (np.asarray(pi) * per_a).sum(axis=1)
        out[:, I] = body + f_term - gm.switch_cost
    return out


def bellman_op(gm: TabularGame, V: np.ndarray) -> np.ndarray:
    """Pointwise max of the greedy intervention backup and the plain greedy
    backup at unchanged I. A gamma-contraction in the sup norm."""
    V = np.asarray(V, dtype=np.float64)
    mv = intervention_op(gm, V)
    out = np.zeros((gm.n_states, 2))
    for I in (0, 1):
        plain = (gm.R + gm.gamma * (gm.P @ V[:, I])).max(axis=1)
        out[:, I] = np.maximum(mv[:, I], plain)
    return out


def value_iterate(gm: TabularGame, tol: float = 1e-8,
                  v0: np.ndarray | None = None, max_iter: int = 1_000_000):
    """Iterate the backup to its fixed point; returns (V*, iteration count)."""
    V = np.zeros((gm.n_states, 2)) if v0 is None else np.array(v0, dtype=np.float64)
    for k in range(1, max_iter + 1):
        nxt = bellman_op(gm, V)
        if np.max(np.abs(nxt - V)) < tol:
            return nxt, k
        V = nxt
    raise PropertyError(f"value iteration failed to reach tol={tol} in {max_iter} sweeps")


def iteration_bound(gm: TabularGame, tol: float, v0: np.ndarray | None = None) -> int:
    """Geometric-decay bound on the sweeps value_iterate may take."""
    V0 = np.zeros((gm.n_states, 2)) if v0 is None else np.asarray(v0, dtype=np.float64)
    d0 = float(np.max(np.abs(bellman_op(gm, V0) - V0)))
    if d0 < tol:
        return 1
    return int(np.ceil(np.log(tol * (1.0 - gm.gamma) / d0) / np.log(gm.gamma))) + 1


def switch_rule(gm: TabularGame, v_star: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Bit table over (s, I): 1 exactly where the intervention branch attains
    the fixed-point value (within eps)."""
    mv = intervention_op(gm, v_star)
    return (mv >= np.asarray(v_star) - eps).astype(np.int64)


def simulate_switch_times(gm: TabularGame, v_star: np.ndarray, rng: Rng,
                          start_state: int = 0, steps: int = 50) -> list[int]:
    """Greedy play from the fixed point; returns ticks where the rule fires
    (each firing toggles I, matching the intervention backup's recursion)."""
    rule = switch_rule(gm, v_star)
    s, I = start_state, 0
    times = []
    for t in range(steps):
        if rule[s, I]:
            times.append(t)
            per_a = gm.R + gm.L + gm.gamma * (gm.P @ v_star[:, 1 - I])
            a = int(np.argmax(per_a[s]))
            I = 1 - I
        else:
            per_a = gm.R + gm.gamma * (gm.P @ v_star[:, I])
            a = int(np.argmax(per_a[s]))
        s = rng.categorical(gm.P[s, a])
    return times


# ---------------------------------------------------------------------------
# policy-enumeration audit: shaping leaves the task's optimum alone
# ---------------------------------------------------------------------------

def _finite_horizon_value(gm: TabularGame, policy: np.ndarray, horizon: int) -> np.ndarray:
    """Exact T-step discounted value of a deterministic stationary policy."""
    S = gm.n_states
    P_pi = gm.P[np.arange(S), policy]          # [S,S']
    R_pi = gm.R[np.arange(S), policy]          # [S]
    v = np.zeros(S)
    for _ in range(horizon):
        v = R_pi + gm.gamma * (P_pi @ v)
    return v


def _shaped_value(gm: TabularGame, policy: np.ndarray, sigma: np.ndarray,
                  theta: np.ndarray, horizon: int) -> np.ndarray:
    """Exact T-step value of policy under the potential-difference shaping
    induced by switch table sigma[s] and channel table theta[s].

    The shaping term at an on step t is gamma*u_{t+1} - u_t where u is the
    chosen channel's potential, zeroed at switch boundaries and at the
    horizon. Computed by dynamic programming over (s, previous I).
    """
    S = gm.n_states
    P_pi = gm.P[np.arange(S), policy]
    R_pi = gm.R[np.arange(S), policy]
    u_tab = gm.F[np.arange(S), theta]          # potential if on and continuing
    I_now = sigma.astype(np.int64)             # I_t = sigma(s_t)
    W = np.zeros((S, 2))                       # value by (state, previous I)
    for k in range(1, horizon + 1):
        W_next = np.zeros((S, 2))
        for Ip in (0, 1):
            I = I_now
            u_t = np.where((I == 1) & (Ip == 1), u_tab, 0.0)
            # u_{t+1}(s') is nonzero only if still on at t+1 and not at the horizon
            if k >= 2:
                u_next = np.where((sigma == 1), u_tab, 0.0)
            else:
                u_next = np.zeros(S)
            exp_unext = P_pi @ u_next
            f_term = np.where(I == 1, gm.gamma * exp_unext - u_t, 0.0)
            cont = np.stack([P_pi @ W[:, 0], P_pi @ W[:, 1]], axis=1)
            W_next[:, Ip] = R_pi + f_term + gm.gamma * cont[np.arange(S), I]
        W = W_next
    return W[:, 0]                             # episodes start with the stream off


def enumerate_policies(gm: TabularGame):
    return [np.array(p, dtype=np.int64)
            for p in itertools.product(range(gm.n_actions), repeat=gm.n_states)]


def invariance_audit(gm: TabularGame, g_policies=None, horizon: int = 40,
                     tol: float = 1e-9, rng: Rng | None = None) -> dict:
    """Exhaustively enumerate deterministic joint policies and assert that the
    zero-boundary shaping changes no policy's value, hence neither the argmax
    sets nor the achievable optimum. Raises PropertyError on any violation.
    """
    n_enum = gm.n_actions ** gm.n_states
    if n_enum > 5000:
        raise GameError(f"enumeration of {n_enum} policies is over the audit cap; "
                        "use <= 4 states and <= 3 actions")
    if g_policies is None:
        gs = [(np.ones(gm.n_states, dtype=np.int64), np.zeros(gm.n_states, dtype=np.int64)),
              (np.zeros(gm.n_states, dtype=np.int64), np.zeros(gm.n_states, dtype=np.int64))]
        r = rng or Rng(0)
        for _ in range(4):
            gs.append((r.integers(0, 2, size=gm.n_states).astype(np.int64),
                       r.integers(0, gm.m, size=gm.n_states).astype(np.int64)))
        g_policies = gs

    policies = enumerate_policies(gm)
    plain = np.stack([_finite_horizon_value(gm, p, horizon) for p in policies])
    max_plain = plain.max(axis=0)
    argmax_plain = [set(np.flatnonzero(plain[:, s] >= max_plain[s] - tol))
                    for s in range(gm.n_states)]
    worst_gap = 0.0
    for sigma, theta in g_policies:
        shaped = np.stack([_shaped_value(gm, p, sigma, theta, horizon)
                           for p in policies])
        gap = float(np.max(np.abs(shaped - plain)))
        worst_gap = max(worst_gap, gap)
        if gap > tol:
            raise PropertyError(f"shaping changed a policy value by {gap:.3e} > {tol}")
        max_shaped = shaped.max(axis=0)
        for s in range(gm.n_states):
            got = set(np.flatnonzero(shaped[:, s] >= max_shaped[s] - tol))
            if got != argmax_plain[s]:
                raise PropertyError(f"argmax policy set changed at state {s}")
        # weak improvement: policies that maximize the shaped objective still
        # collect at least the unshaped optimum in environment reward
        for s in range(gm.n_states):
            best = int(np.argmax(shaped[:, s]))
            if plain[best, s] < max_plain[s] - tol:
                raise PropertyError(
                    f"extrinsic return with the generator fell below the plain "
                    f"optimum at state {s}: {plain[best, s]:.6g} < {max_plain[s]:.6g}")
    return {"n_policies": len(policies), "n_g": len(g_policies),
            "max_value_gap": worst_gap, "argmax_match": True,
            "max_plain": float(max_plain.max())}


# ---------------------------------------------------------------------------
# linear function approximation
# ---------------------------------------------------------------------------

def q_row_index(gm: TabularGame, s: int, I: int, a: int) -> int:
    return (s * 2 + I) * gm.n_actions + a


def n_q_rows(gm: TabularGame) -> int:
    return gm.n_states * 2 * gm.n_actions


def exact_q_operator(gm: TabularGame, Q: np.ndarray) -> np.ndarray:
    """The Q-table form of the backup, max over branches inside the
    transition expectation (matching what sampled updates estimate)."""
    Q = Q.reshape(gm.n_states, 2, gm.n_actions)
    vmax = Q.max(axis=2)                                 # [S',2]
    out = np.zeros_like(Q)
    for I in (0, 1):
        c1 = (gm.fbar[:, None] + gm.L - gm.switch_cost)  # [S,A]
        inner = np.maximum(c1[:, :, None] + gm.gamma * vmax[None, None, :, 1 - I],
                           gm.gamma * vmax[None, None, :, I])
        out[:, I, :] = gm.R + np.einsum("sap,sap->sa", gm.P, inner)
    return out.reshape(-1)


def q_fixed_point(gm: TabularGame, tol: float = 1e-10) -> np.ndarray:
    Q = np.zeros(n_q_rows(gm))
    for _ in range(1_000_000):
        nxt = exact_q_operator(gm, Q)
        if np.max(np.abs(nxt - Q)) < tol:
            return nxt
        Q = nxt
    raise PropertyError("Q fixed-point iteration did not converge")


def uniform_projection(Phi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Least-squares projection of x onto span(Phi), uniform row weights."""
    coef, *_ = np.linalg.lstsq(Phi, x, rcond=None)
    return Phi @ coef


def weighted_norm(x: np.ndarray) -> float:
    """L2 norm under uniform stationary weights: sqrt(mean of squares)."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x)))


EXPLORE_MODES = ("trajectory", "uniform", "sweep")


def linear_fa_qlearn(gm: TabularGame, Phi: np.ndarray, steps: int, rng: Rng,
                     explore: str = "trajectory", explore_eps: float = 0.2,
                     lr_num: float = 1.0, lr_scale: float = 1000.0,
                     avg_tail: float = 0.5) -> np.ndarray:
    """Q-learning in feature space with the two-branch backup target.

    Per visited row (s, I, a) and sampled next state s':

        target = R(s,a) + max( Fbar(s)+L(s,a)-cost + gamma*max_a' Q(s',1-I,a'),
                               gamma*max_a' Q(s',I,a') )
        r     += alpha_t * (target - Q(s,I,a)) * Phi[row]

    with the Robbins-Monro schedule alpha_t = lr_num / (1 + t/lr_scale).
    Rows come from an eps-greedy trajectory (explore="trajectory"), iid
    uniform draws ("uniform"), or a fixed cyclic order over all rows
    ("sweep"); all three visit every row unboundedly often. The returned
    weights are the average over the trailing avg_tail fraction of steps,
    which damps the residual step-size wander around the limit point.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    if Phi.shape[0] != n_q_rows(gm):
        raise GameError(f"Phi must have {n_q_rows(gm)} rows, got {Phi.shape[0]}")
    if explore not in EXPLORE_MODES:
        raise GameError(f"unknown explore mode '{explore}'")
    p = Phi.shape[1]
    r = np.zeros(p)
    r_sum = np.zeros(p)
    n_avg = 0
    tail_from = int(steps * (1.0 - avg_tail))
    cum_p = np.cumsum(gm.P, axis=2)
    n_rows = n_q_rows(gm)
    s = int(rng.integers(0, gm.n_states))
    I = int(rng.integers(0, 2))
    for t in range(steps):
        if explore == "sweep":
            row = t % n_rows
            a = row % gm.n_actions
            I = (row // gm.n_actions) % 2
            s = row // (2 * gm.n_actions)
        elif explore == "uniform":
            s = int(rng.integers(0, gm.n_states))
            I = int(rng.integers(0, 2))
            a = int(rng.integers(0, gm.n_actions))
        elif rng.random() < explore_eps:
            a = int(rng.integers(0, gm.n_actions))
        else:
            base = (s * 2 + I) * gm.n_actions
            a = int(np.argmax(Phi[base:base + gm.n_actions] @ r))
        row = q_row_index(gm, s, I, a)
        sp = int(np.searchsorted(cum_p[s, a], rng.random(), side="right"))
        sp = min(sp, gm.n_states - 1)
        q_keep = gm.gamma * _row_max(gm, Phi, r, sp, I)
        q_flip = gm.fbar[s] + gm.L[s, a] - gm.switch_cost \
            + gm.gamma * _row_max(gm, Phi, r, sp, 1 - I)
        target = gm.R[s, a] + max(q_keep, q_flip)
        alpha = lr_num / (1.0 + t / lr_scale)
        r += alpha * (target - Phi[row] @ r) * Phi[row]
        if not np.all(np.isfinite(r)) or np.dot(r, r) > 1e16:
            raise PropertyError(f"feature weights diverged at step {t}")
        if t >= tail_from:
            r_sum += r
            n_avg += 1
        if explore == "trajectory":
            s = sp
            if q_flip > q_keep:
                I = 1 - I
    return r_sum / max(n_avg, 1)


def _row_max(gm: TabularGame, Phi, r, s: int, I: int) -> float:
    base = (s * 2 + I) * gm.n_actions
    return float(np.max(Phi[base:base + gm.n_actions] @ r))


def theorem3_check(gm: TabularGame, Phi: np.ndarray, r: np.ndarray) -> dict:
    """Projected fixed-point residual of the learned weights and the
    approximation bound against the exact fixed point."""
    q_learned = Phi @ r
    residual = weighted_norm(uniform_projection(Phi, exact_q_operator(gm, q_learned))
                             - q_learned)
    q_star = q_fixed_point(gm)
    lhs = weighted_norm(q_learned - q_star)
    proj_err = weighted_norm(uniform_projection(Phi, q_star) - q_star)
    rhs = proj_err / np.sqrt(1.0 - gm.gamma ** 2)
    return {"residual": residual, "bound_lhs": lhs, "bound_rhs": float(rhs),
            "projection_error": proj_err}


# ---------------------------------------------------------------------------
# fixtures and serialization
# ---------------------------------------------------------------------------

def random_game(rng: Rng, n_states: int = 6, n_actions: int = 3, m: int = 2,
                gamma: float = 0.9, deterministic: bool = False,
                switch_cost: float | None = None, with_l: bool = False) -> TabularGame:
    if deterministic:
        P = np.zeros((n_states, n_actions, n_states))
        succ = rng.integers(0, n_states, size=(n_states, n_actions))
        for s in range(n_states):
            for a in range(n_actions):
                P[s, a, int(succ[s, a])] = 1.0
    else:
        raw = rng.uniform(0.01, 1.0, size=(n_states, n_actions, n_states))
        P = raw / raw.sum(axis=2, keepdims=True)
    R = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    F = rng.uniform(-1.0, 1.0, size=(n_states, m))
    cost = float(rng.uniform(0.0, 0.5)) if switch_cost is None else switch_cost
    L = rng.uniform(0.0, 0.3, size=(n_states, n_actions)) if with_l else None
    return TabularGame(P, R, gamma, F, cost, L)


class DecayingBonus:
    """Per-(s,a) bonus table that pays its value until a visit budget is
    exhausted, then zero forever: the tabular stand-in for a novelty signal
    that must vanish in the limit."""

    def __init__(self, table: np.ndarray, visit_budget: int):
        self.table = np.asarray(table, dtype=np.float64)
        self.visit_budget = int(visit_budget)
        self.visits = np.zeros(self.table.shape, dtype=np.int64)

    def pay(self, s: int, a: int) -> float:
        if self.visits[s, a] >= self.visit_budget:
            return 0.0
        self.visits[s, a] += 1
        return float(self.table[s, a])


def save_game(gm: TabularGame, path: str) -> None:
    payload = {"P": gm.P.tolist(), "R": gm.R.tolist(), "gamma": gm.gamma,
               "F": gm.F.tolist(), "switch_cost": gm.switch_cost,
               "L": gm.L.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_game(path: str) -> TabularGame:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GameError(f"cannot load game fixture '{path}': {exc}") from exc
    for key in ("P", "R", "gamma", "F", "switch_cost"):
        if key not in payload:
            raise GameError(f"game fixture '{path}' missing key '{key}'")
    return TabularGame(payload["P"], payload["R"], payload["gamma"],
                       payload["F"], payload["switch_cost"], payload.get("L"))
