"""Cooperative gridworld tasks with simultaneous moves.

Four tasks share one movement engine:

* joint_forage  : 8x8, two agents (levels 1 and 2), three level-3 apples.
  An apple is collected, for +1 team reward, only when every agent stands
  adjacent to it and every agent plays collect on the same tick. An agent
  that plays collect beside an apple outside such a joint collect is fined.
* three_section : 9x9 split into three horizontal bands. Top tiles pay a
  small per-tick reward to their visitor and fine an agent sitting at the
  bottom; once an agent leaves the middle band its band choice is locked.
  If both agents are at the bottom, a special tile pays a large reward to
  both, which is the coordinated optimum.
* sparse_versus : 8x8 race against a scripted opponent; +1 team reward only
  if a controlled agent collects the apple strictly before the opponent.
* corridor      : 11x5 with a single-width, 3-cell corridor through a wall;
  each corridor cell holds one body, so opposing agents deadlock unless one
  yields; each agent is paid once on reaching its own goal on the far side.

Actions are {up, down, left, right, stay, collect}. Moves resolve
simultaneously: out-of-grid, wall and apple cells cancel a move; two agents
never share a cell; when two agents contend for one cell the lower index
wins; swaps are cancelled. State encodings are flat float vectors with a
fixed dimension per task.
"""

from __future__ import annotations

import numpy as np

from .rng import Rng

UP, DOWN, LEFT, RIGHT, STAY, COLLECT = range(6)
N_ACTIONS = 6
ACTION_NAMES = ("up", "down", "left", "right", "stay", "collect")
# (dx, dy); y grows downward so "up" decreases y
DELTAS = {UP: (0, -1), DOWN: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0),
          STAY: (0, 0), COLLECT: (0, 0)}

ENV_KINDS = ("joint_forage", "three_section", "sparse_versus", "corridor")


class StepResult:
    __slots__ = ("next_state", "per_agent_reward", "team_reward", "done", "info")

    def __init__(self, next_state, per_agent_reward, team_reward, done, info):
        self.next_state = next_state
        self.per_agent_reward = per_agent_reward
        self.team_reward = team_reward
        self.done = done
        self.info = info


class GridEnv:
    """Shared movement engine; subclasses fill in task rules."""

    kind: str = ""
    width: int = 0
    height: int = 0
    n_agents: int = 2
    n_actions: int = N_ACTIONS
    episode_limit: int = 50

    def __init__(self):
        self.positions: list[tuple[int, int]] = []
        self.tick = 0
        self._done = True
        self._rng: Rng | None = None
        self.walls: set[tuple[int, int]] = set()

    # -- per-task hooks -------------------------------------------------
    def _place(self, rng: Rng) -> None:
        raise NotImplementedError

    def _apply_actions(self, actions, moved) -> tuple[list[float], float, bool, dict]:
        raise NotImplementedError

    def encode_state(self) -> np.ndarray:
        raise NotImplementedError

    def state_key(self):
        """Hashable configuration key (tick excluded) for visit counting."""
        return tuple(self.positions)

    @property
    def obs_dim(self) -> int:
        raise NotImplementedError

    def success(self) -> bool:
        raise NotImplementedError

    # -- engine ----------------------------------------------------------
    def reset(self, rng: Rng) -> np.ndarray:
        self._rng = rng
        self.tick = 0
        self._done = False
        self._place(rng)
        return self.encode_state()

    def in_grid(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def _blocked(self, cell) -> bool:
        return cell in self.walls

    def _resolve_moves(self, actions) -> list[bool]:
        """Mutate self.positions per the simultaneous-move rules.

        Returns a moved flag per body. `actions` covers every body on the
        grid (controlled agents first, then any scripted ones).
        """
        n = len(self.positions)
        pos = list(self.positions)
        targets = []
        for i, act in enumerate(actions):
            dx, dy = DELTAS[act]
            t = (pos[i][0] + dx, pos[i][1] + dy)
            if t == pos[i] or not self.in_grid(t) or self._blocked(t):
                t = pos[i]
            targets.append(t)

        # swap cancellation: two bodies exchanging cells both stay
        for i in range(n):
            for j in range(i + 1, n):
                if (targets[i] == pos[j] and targets[j] == pos[i]
                        and targets[i] != pos[i] and targets[j] != pos[j]):
                    targets[i] = pos[i]
                    targets[j] = pos[j]

        # same-target contention: lowest index proceeds
        claimed: dict[tuple[int, int], int] = {}
        for i in range(n):
            if targets[i] == pos[i]:
                continue
            if targets[i] in claimed:
                targets[i] = pos[i]
            else:
                claimed[targets[i]] = i

        # cannot move onto a cell whose occupant is not vacating it; iterate
        # because each cancellation creates a new stationary occupant
        changed = True
        while changed:
            changed = False
            occupied = {pos[j]: j for j in range(n) if targets[j] == pos[j]}
            for i in range(n):
                if targets[i] != pos[i] and targets[i] in occupied:
                    targets[i] = pos[i]
                    changed = True
        moved = [targets[i] != pos[i] for i in range(n)]
        self.positions = targets
        return moved

    def step(self, actions) -> StepResult:
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        if len(actions) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} actions, got {len(actions)}")
        for a in actions:
            if not 0 <= int(a) < N_ACTIONS:
                raise ValueError(f"invalid action {a}")
        actions = [int(a) for a in actions]
        moved = self._resolve_moves(self._all_actions(actions))
        per_agent, team, task_done, info = self._apply_actions(actions, moved)
        self.tick += 1
        done = task_done or self.tick >= self.episode_limit
        self._done = done
        info["tick"] = self.tick
        info["success"] = self.success()
        return StepResult(self.encode_state(), per_agent, team, done, info)

    def _all_actions(self, actions):
        return actions

    # shared encoding helpers
    def _onehot_positions(self, cells) -> np.ndarray:
        out = np.zeros(len(cells) * self.width * self.height)
        for i, (x, y) in enumerate(cells):
            out[i * self.width * self.height + y * self.width + x] = 1.0
        return out

    def _tick_frac(self) -> np.ndarray:
        return np.array([self.tick / self.episode_limit])


class JointForageEnv(GridEnv):
    """Level-based joint foraging: apples fall only to the full team."""

    kind = "joint_forage"
    width = height = 8
    n_agents = 2
    episode_limit = 50
    agent_levels = (1, 2)
    apple_level = 3
    n_apples = 3
    penalty = 0.5

    def __init__(self):
        super().__init__()
        self.apples: list[tuple[int, int]] = []
        self.apple_alive: list[bool] = []

    def _place(self, rng: Rng) -> None:
        cells = [(x, y) for x in range(self.width) for y in range(self.height)]
        picks = rng.gen.choice(len(cells), size=self.n_agents + self.n_apples,
                               replace=False)
        chosen = [cells[int(i)] for i in picks]
        self.positions = chosen[:self.n_agents]
        self.apples = chosen[self.n_agents:]
        self.apple_alive = [True] * self.n_apples

    def _blocked(self, cell) -> bool:
        if super()._blocked(cell):
            return True
        return any(alive and cell == a for a, alive in zip(self.apples, self.apple_alive))

    def _adjacent(self, cell, apple) -> bool:
        return abs(cell[0] - apple[0]) + abs(cell[1] - apple[1]) == 1

    def _apply_actions(self, actions, moved):
        per_agent = [0.0] * self.n_agents
        team = 0.0
        collectors = [i for i, a in enumerate(actions) if a == COLLECT]
        collected: list[int] = []
        for k, (apple, alive) in enumerate(zip(self.apples, self.apple_alive)):
            if not alive:
                continue
            if all(self._adjacent(self.positions[i], apple) for i in range(self.n_agents)) \
                    and len(collectors) == self.n_agents:
                collected.append(k)
        for k in collected:
            self.apple_alive[k] = False
            team += 1.0
            for i in range(self.n_agents):
                per_agent[i] += 1.0
        if not collected:
            for i in collectors:
                if any(alive and self._adjacent(self.positions[i], a)
                       for a, alive in zip(self.apples, self.apple_alive)):
                    per_agent[i] -= self.penalty
                    team -= self.penalty
        task_done = not any(self.apple_alive)
        return per_agent, team, task_done, {"apples_left": sum(self.apple_alive)}

    def success(self) -> bool:
        return not any(self.apple_alive)

    def state_key(self):
        return (tuple(self.positions), tuple(self.apples), tuple(self.apple_alive))

    @property
    def obs_dim(self) -> int:
        cells = self.width * self.height
        return self.n_agents * cells + cells + self.n_apples + 1

    def encode_state(self) -> np.ndarray:
        cells = self.width * self.height
        apple_map = np.zeros(cells)
        levels = np.zeros(self.n_apples)
        for k, ((x, y), alive) in enumerate(zip(self.apples, self.apple_alive)):
            if alive:
                apple_map[y * self.width + x] = 1.0
                levels[k] = self.apple_level / self.apple_level
        return np.concatenate([self._onehot_positions(self.positions),
                               apple_map, levels, self._tick_frac()])


class ThreeSectionEnv(GridEnv):
    """Banded grid: greedy top pay, coordinated bottom jackpot, locked bands."""

    kind = "three_section"
    width = height = 9
    n_agents = 2
    episode_limit = 50
    top_reward_total = 1.0           # r; each top tile pays r/n per tick
    bottom_reward = 0.75             # R, with r/2 < R < r
    special_tile = (7, 7)

    FREE, TOP, BOTTOM = 0, 1, 2

    def __init__(self):
        super().__init__()
        self.locks = [self.FREE] * self.n_agents
        self._special_hits = 0

    @property
    def tiles_per_section(self) -> int:
        return self.width * 3

    def _band(self, cell) -> int:
        y = cell[1]
        if y <= 2:
            return self.TOP
        if y <= 5:
            return self.FREE
        return self.BOTTOM

    def _place(self, rng: Rng) -> None:
        mid = [(x, y) for x in range(self.width) for y in (3, 4, 5)]
        picks = rng.gen.choice(len(mid), size=self.n_agents, replace=False)
        self.positions = [mid[int(i)] for i in picks]
        self.locks = [self.FREE] * self.n_agents

    def _resolve_moves(self, actions):
        # a locked agent may not leave its band; cancel before the engine runs
        adjusted = list(actions)
        for i, act in enumerate(actions):
            dx, dy = DELTAS[act]
            t = (self.positions[i][0] + dx, self.positions[i][1] + dy)
            if self.in_grid(t) and self.locks[i] != self.FREE \
                    and self._band(t) != self.locks[i]:
                adjusted[i] = STAY
        moved = super()._resolve_moves(adjusted)
        for i, cell in enumerate(self.positions):
            if self.locks[i] == self.FREE and self._band(cell) != self.FREE:
                self.locks[i] = self._band(cell)
        return moved

    def _apply_actions(self, actions, moved):
        per_agent = [0.0] * self.n_agents
        unit = self.top_reward_total / self.tiles_per_section
        bands = [self._band(c) for c in self.positions]
        for i in range(self.n_agents):
            if bands[i] == self.TOP:
                per_agent[i] += unit
                for j in range(self.n_agents):
                    if j != i and bands[j] == self.BOTTOM:
                        per_agent[j] -= unit
        got_special = False
        if all(b == self.BOTTOM for b in bands) \
                and any(c == self.special_tile for c in self.positions):
            for i in range(self.n_agents):
                per_agent[i] += self.bottom_reward
            got_special = True
        if got_special:
            self._special_hits += 1
        team = float(sum(per_agent))
        return per_agent, team, False, {"special_hits": self._special_hits}

    def reset(self, rng: Rng) -> np.ndarray:
        self._special_hits = 0
        return super().reset(rng)

    def success(self) -> bool:
        return self._special_hits > 0

    def state_key(self):
        return (tuple(self.positions), tuple(self.locks))

    @property
    def obs_dim(self) -> int:
        return self.n_agents * self.width * self.height + self.n_agents * 3 + 1

    def encode_state(self) -> np.ndarray:
        lock_flags = np.zeros(self.n_agents * 3)
        for i, lock in enumerate(self.locks):
            lock_flags[i * 3 + lock] = 1.0
        return np.concatenate([self._onehot_positions(self.positions),
                               lock_flags, self._tick_frac()])


def scripted_opponent(env: "SparseVersusEnv", rng: Rng) -> int:
    """Greedy Manhattan chase of the apple with epsilon-random moves.

    If adjacent to the apple, collect. Otherwise take a distance-reducing
    move; ties break in the order up > left > down > right. With probability
    epsilon a uniformly random move replaces the greedy one.
    """
    pos = env.opponent_pos
    apple = env.apple
    if abs(pos[0] - apple[0]) + abs(pos[1] - apple[1]) == 1:
        return COLLECT
    if rng.random() < env.opponent_eps:
        return int(rng.integers(0, 4))
    best, best_d = STAY, abs(pos[0] - apple[0]) + abs(pos[1] - apple[1])
    for act in (UP, LEFT, DOWN, RIGHT):
        dx, dy = DELTAS[act]
        t = (pos[0] + dx, pos[1] + dy)
        if not env.in_grid(t):
            continue
        d = abs(t[0] - apple[0]) + abs(t[1] - apple[1])
        if d < best_d:
            best, best_d = act, d
    return best


class SparseVersusEnv(GridEnv):
    """Race a scripted opponent to a single apple; reward only for winning."""

    kind = "sparse_versus"
    width = height = 8
    n_agents = 2
    episode_limit = 50
    opponent_eps = 0.1
    apple = (4, 4)
    opponent_spawn = (7, 7)

    def __init__(self):
        super().__init__()
        self.opponent_pos = self.opponent_spawn
        self._won = False

    def _place(self, rng: Rng) -> None:
        self._won = False
        self.opponent_pos = self.opponent_spawn
        forbidden = {self.apple, self.opponent_spawn}
        cells = [(x, y) for x in range(self.width) for y in range(self.height)
                 if (x, y) not in forbidden]
        picks = rng.gen.choice(len(cells), size=self.n_agents, replace=False)
        self.positions = [cells[int(i)] for i in picks]

    def _blocked(self, cell) -> bool:
        return cell == self.apple

    def _all_actions(self, actions):
        self._opp_action = scripted_opponent(self, self._rng)
        return actions + [self._opp_action]

    def _resolve_moves(self, actions):
        # opponent is one more body in the same resolution, lowest priority
        self.positions = self.positions + [self.opponent_pos]
        moved = super()._resolve_moves(actions)
        self.opponent_pos = self.positions.pop()
        return moved

    def _adjacent_apple(self, cell) -> bool:
        return abs(cell[0] - self.apple[0]) + abs(cell[1] - self.apple[1]) == 1

    def _apply_actions(self, actions, moved):
        ours = any(a == COLLECT and self._adjacent_apple(self.positions[i])
                   for i, a in enumerate(actions))
        theirs = self._opp_action == COLLECT and self._adjacent_apple(self.opponent_pos)
        per_agent = [0.0] * self.n_agents
        team = 0.0
        done = ours or theirs
        if ours and not theirs:       # strictly before the opponent
            per_agent = [1.0] * self.n_agents
            team = 1.0
            self._won = True
        return per_agent, team, done, {"opponent_collected": theirs}

    def success(self) -> bool:
        return self._won

    def state_key(self):
        return (tuple(self.positions), self.opponent_pos)

    @property
    def obs_dim(self) -> int:
        cells = self.width * self.height
        return self.n_agents * cells + cells + cells + 1 + 1

    def encode_state(self) -> np.ndarray:
        cells = self.width * self.height
        opp = np.zeros(cells)
        opp[self.opponent_pos[1] * self.width + self.opponent_pos[0]] = 1.0
        apple_map = np.zeros(cells)
        apple_map[self.apple[1] * self.width + self.apple[0]] = 1.0
        return np.concatenate([self._onehot_positions(self.positions), opp,
                               apple_map, np.array([1.0]), self._tick_frac()])


class CorridorEnv(GridEnv):
    """Two agents cross a one-body-wide corridor in opposite directions.

    The map is two open pockets joined by a width-1, 3-cell passage. Every
    cell holds at most one body and swaps are cancelled, so agents meeting
    head-on inside the passage deadlock until one backs out: the task is
    solved only when one agent yields the passage to the other. Each agent
    is paid +1 once, on first reaching its own goal in the opposite pocket.
    """

    kind = "corridor"
    width, height = 11, 5
    n_agents = 2
    episode_limit = 60
    corridor_cells = ((4, 2), (5, 2), (6, 2))
    spawns = ((0, 2), (10, 2))
    goals = ((10, 2), (0, 2))

    def __init__(self):
        super().__init__()
        self.walls = {(x, y) for x in (4, 5, 6) for y in range(self.height)
                      if y != 2}
        self.reached = [False] * self.n_agents

    def _place(self, rng: Rng) -> None:
        self.positions = list(self.spawns)
        self.reached = [False] * self.n_agents

    def _apply_actions(self, actions, moved):
        per_agent = [0.0] * self.n_agents
        for i in range(self.n_agents):
            if not self.reached[i] and self.positions[i] == self.goals[i]:
                self.reached[i] = True
                per_agent[i] = 1.0
        team = float(sum(per_agent))
        task_done = all(self.reached)
        return per_agent, team, task_done, {"reached": list(self.reached)}

    def success(self) -> bool:
        return all(self.reached)

    def state_key(self):
        return (tuple(self.positions), tuple(self.reached))

    @property
    def obs_dim(self) -> int:
        return self.n_agents * self.width * self.height + self.n_agents + 1

    def encode_state(self) -> np.ndarray:
        flags = np.array([1.0 if r else 0.0 for r in self.reached])
        return np.concatenate([self._onehot_positions(self.positions),
                               flags, self._tick_frac()])


_KIND_TO_CLS = {
    "joint_forage": JointForageEnv,
    "three_section": ThreeSectionEnv,
    "sparse_versus": SparseVersusEnv,
    "corridor": CorridorEnv,
}

EXPERIMENT_TO_KIND = {
    "foraging1": "joint_forage",
    "foraging2": "three_section",
    "foraging3": "sparse_versus",
    "corridor": "corridor",
}


def make_env(kind: str) -> GridEnv:
    if kind in EXPERIMENT_TO_KIND:
        kind = EXPERIMENT_TO_KIND[kind]
    if kind not in _KIND_TO_CLS:
        raise ValueError(f"unknown env kind '{kind}'")
    return _KIND_TO_CLS[kind]()


def render(env: GridEnv) -> str:
    """ASCII snapshot, mostly for the demos: agents 0..9, # wall, * apple."""
    grid = [["." for _ in range(env.width)] for _ in range(env.height)]
    for (x, y) in env.walls:
        grid[y][x] = "#"
    if isinstance(env, JointForageEnv):
        for (x, y), alive in zip(env.apples, env.apple_alive):
            if alive:
                grid[y][x] = "*"
    if isinstance(env, SparseVersusEnv):
        ax, ay = env.apple
        grid[ay][ax] = "*"
        ox, oy = env.opponent_pos
        grid[oy][ox] = "O"
    if isinstance(env, ThreeSectionEnv):
        sx, sy = env.special_tile
        grid[sy][sx] = "$"
    if isinstance(env, CorridorEnv):
        for i, (x, y) in enumerate(env.goals):
            grid[y][x] = "g" if i == 0 else "G"
    for i, (x, y) in enumerate(env.positions):
        grid[y][x] = str(i)
    return "\n".join("".join(row) for row in grid)
