"""Gridworld rules: placement, rewards, collisions, encodings, invariants."""

import numpy as np
import pytest

from ligs.envs import (
    ACTION_NAMES,
    COLLECT,
    DOWN,
    LEFT,
    N_ACTIONS,
    RIGHT,
    STAY,
    UP,
    CorridorEnv,
    EXPERIMENT_TO_KIND,
    GridEnv,
    JointForageEnv,
    SparseVersusEnv,
    ThreeSectionEnv,
    make_env,
    scripted_opponent,
)
from ligs.rng import Rng

ALL_KINDS = ("joint_forage", "three_section", "sparse_versus", "corridor")


def fresh(kind, seed=0):
    env = make_env(kind)
    env.reset(Rng(seed))
    return env


# -- construction and reset --------------------------------------------------

def test_experiment_aliases():
    assert set(EXPERIMENT_TO_KIND) == {"foraging1", "foraging2", "foraging3", "corridor"}
    assert make_env("foraging1").kind == "joint_forage"
    assert make_env("foraging2").kind == "three_section"
    assert make_env("foraging3").kind == "sparse_versus"


def test_unknown_kind():
    with pytest.raises(ValueError, match="nope"):
        make_env("nope")


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_reset_same_seed_identical(kind):
    a = make_env(kind).reset(Rng(7))
    b = make_env(kind).reset(Rng(7))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_positions_in_grid_and_distinct(kind):
    for seed in range(30):
        env = fresh(kind, seed)
        assert len(set(env.positions)) == env.n_agents
        for (x, y) in env.positions:
            assert 0 <= x < env.width and 0 <= y < env.height
            assert (x, y) not in env.walls


def test_three_section_spawns_strictly_middle():
    for seed in range(50):
        env = fresh("three_section", seed)
        for (_, y) in env.positions:
            assert 3 <= y <= 5
        assert env.locks == [env.FREE, env.FREE]


def test_corridor_spawns_opposite_halves():
    for seed in range(10):
        env = fresh("corridor", seed)
        (x0, _), (x1, _) = env.positions
        assert x0 < env.width // 2 < x1


def test_joint_forage_apples_and_levels():
    env = fresh("joint_forage")
    assert env.n_apples == 3 and len(env.apples) == 3
    assert sum(env.agent_levels) == env.apple_level
    cells = set(env.positions) | set(env.apples)
    assert len(cells) == env.n_agents + env.n_apples


# -- step errors --------------------------------------------------------------

def test_step_after_done_rejected():
    env = fresh("corridor")
    for _ in range(env.episode_limit):
        r = env.step([STAY, STAY])
    assert r.done
    with pytest.raises(RuntimeError):
        env.step([STAY, STAY])


def test_wrong_action_count_rejected():
    env = fresh("corridor")
    with pytest.raises(ValueError):
        env.step([STAY])


def test_bad_action_index_rejected():
    env = fresh("corridor")
    with pytest.raises(ValueError):
        env.step([STAY, N_ACTIONS])


# -- movement engine ----------------------------------------------------------

def place(env, cells):
    env.positions = [tuple(c) for c in cells]


def test_walls_and_edges_cancel_moves():
    env = fresh("corridor")
    place(env, [(0, 2), (10, 2)])
    env.step([LEFT, RIGHT])  # off-grid on both ends
    assert env.positions == [(0, 2), (10, 2)]
    cx, cy = env.corridor_cells[0]
    place(env, [(cx, cy), (10, 2)])
    env.step([UP, STAY])     # corridor cells are walled above
    assert env.positions[0] == (cx, cy)


def test_contested_cell_lower_index_wins():
    env = fresh("corridor")
    cx, cy = env.corridor_cells[0]
    place(env, [(cx - 1, cy), (cx + 1, cy)])
    env.step([RIGHT, LEFT])
    assert env.positions[0] == (cx, cy)
    assert env.positions[1] == (cx + 1, cy)


def test_swap_cancelled():
    env = fresh("corridor")
    cx, cy = env.corridor_cells[1]
    place(env, [(cx - 1, cy), (cx, cy)])
    env.step([RIGHT, LEFT])
    assert env.positions == [(cx - 1, cy), (cx, cy)]


def test_move_onto_stationary_body_cancelled():
    env = fresh("corridor")
    cx, cy = env.corridor_cells[1]
    place(env, [(cx - 1, cy), (cx, cy)])
    env.step([RIGHT, STAY])
    assert env.positions == [(cx - 1, cy), (cx, cy)]


def test_chain_follow_allowed():
    # a body may step into a cell its occupant vacates the same tick
    env = fresh("corridor")
    (ax, ay), (bx, by) = env.corridor_cells[0], env.corridor_cells[1]
    place(env, [(ax, ay), (bx, by)])
    r = env.step([RIGHT, RIGHT])
    assert env.positions == [(bx, by), (env.corridor_cells[2])]


def test_collision_enumeration_never_shares_cell():
    # every joint move from every adjacent-pair layout keeps bodies distinct
    env = make_env("corridor")
    open_cells = [(x, y) for x in range(env.width) for y in range(env.height)
                  if (x, y) not in env.walls]
    rng = Rng(5)
    for _ in range(2000):
        env.reset(Rng(0))
        i, j = rng.integers(0, len(open_cells), 2)
        if open_cells[int(i)] == open_cells[int(j)]:
            continue
        place(env, [open_cells[int(i)], open_cells[int(j)]])
        env.step(list(rng.integers(0, N_ACTIONS, 2)))
        assert env.positions[0] != env.positions[1]


# -- joint_forage rules --------------------------------------------------------

def put_apple(env, cell):
    env.apples = [cell]
    env.apple_alive = [True] * 1
    # keep encode/state shapes: pad the remaining apples off-board as dead
    while len(env.apples) < env.n_apples:
        env.apples.append((0, 0))
        env.apple_alive.append(False)


def test_joint_collect_pays_and_removes():
    env = fresh("joint_forage")
    put_apple(env, (4, 4))
    place(env, [(3, 4), (5, 4)])
    r = env.step([COLLECT, COLLECT])
    assert r.team_reward == 1.0
    assert r.per_agent_reward == [1.0, 1.0]
    assert env.apple_alive[0] is False


def test_lone_collector_fined():
    env = fresh("joint_forage")
    put_apple(env, (4, 4))
    place(env, [(3, 4), (0, 0)])
    r = env.step([COLLECT, STAY])
    assert r.per_agent_reward[0] == -env.penalty
    assert r.per_agent_reward[1] == 0.0
    assert r.team_reward == -env.penalty
    assert env.apple_alive[0] is True


def test_collect_away_from_apples_free():
    env = fresh("joint_forage")
    put_apple(env, (4, 4))
    place(env, [(0, 0), (7, 7)])
    r = env.step([COLLECT, COLLECT])
    assert r.team_reward == 0.0


def test_reward_non_monotone_witness():
    # switching one agent collect -> stay strictly raises its reward
    env = fresh("joint_forage")
    put_apple(env, (4, 4))
    place(env, [(3, 4), (0, 0)])
    fined = env.step([COLLECT, STAY]).per_agent_reward[0]
    env = fresh("joint_forage")
    put_apple(env, (4, 4))
    place(env, [(3, 4), (0, 0)])
    idle = env.step([STAY, STAY]).per_agent_reward[0]
    assert idle > fined


def test_apples_block_movement():
    env = fresh("joint_forage")
    put_apple(env, (4, 4))
    place(env, [(3, 4), (7, 7)])
    env.step([RIGHT, STAY])
    assert env.positions[0] == (3, 4)


def test_episode_ends_when_apples_gone():
    env = fresh("joint_forage")
    env.apples = [(4, 4), (0, 1), (7, 1)]
    env.apple_alive = [True, False, False]
    place(env, [(3, 4), (5, 4)])
    r = env.step([COLLECT, COLLECT])
    assert r.done and env.success()


# -- three_section rules --------------------------------------------------------

def test_top_pay_and_bottom_fine_same_tick():
    env = fresh("three_section")
    place(env, [(4, 2), (7, 7)])
    env.locks = [env.TOP, env.BOTTOM]
    r = env.step([STAY, STAY])
    unit = env.top_reward_total / env.tiles_per_section
    assert r.per_agent_reward[0] == pytest.approx(unit)
    # agent 1 sits on the special tile alone: no jackpot, only the fine
    assert r.per_agent_reward[1] == pytest.approx(-unit)


def test_both_bottom_special_tile_jackpot():
    env = fresh("three_section")
    place(env, [env.special_tile, (6, 7)])
    env.locks = [env.BOTTOM, env.BOTTOM]
    r = env.step([STAY, STAY])
    assert r.per_agent_reward == [pytest.approx(env.bottom_reward)] * 2
    assert env.success()


def test_jackpot_strictly_between_half_r_and_r():
    env = make_env("three_section")
    assert env.top_reward_total / 2 < env.bottom_reward < env.top_reward_total


def test_band_locking_blocks_return():
    env = fresh("three_section")
    place(env, [(4, 3), (8, 5)])
    env.step([UP, STAY])       # (4,2) is top band
    assert env.locks[0] == env.TOP
    env.step([DOWN, STAY])     # back toward middle is cancelled
    assert env.positions[0] == (4, 2)


def test_lock_absorbing_under_fuzz():
    env = fresh("three_section", 3)
    rng = Rng(99)
    locked_at = [None, None]
    for t in range(2000):
        if env._done:
            env.reset(rng)
            locked_at = [None, None]
        env.step(list(rng.integers(0, N_ACTIONS, 2)))
        for i in range(2):
            if locked_at[i] is None and env.locks[i] != env.FREE:
                locked_at[i] = env.locks[i]
            if locked_at[i] is not None:
                assert env.locks[i] == locked_at[i]
                assert env._band(env.positions[i]) == locked_at[i]


# -- sparse_versus rules ---------------------------------------------------------

def test_opponent_greedy_step():
    env = fresh("sparse_versus")
    env.opponent_pos = (0, 0)
    env.apple = (2, 0)
    # eps draw consumed first; seed 1 first draw > 0.1 keeps the greedy move
    assert scripted_opponent(env, Rng(1)) == RIGHT


def test_opponent_adjacent_collects():
    env = fresh("sparse_versus")
    env.opponent_pos = (4, 3)
    assert scripted_opponent(env, Rng(1)) == COLLECT


def test_opponent_eps_fraction():
    env = fresh("sparse_versus")
    env.opponent_pos = (0, 0)
    env.apple = (7, 7)
    rng = Rng(17)
    greedy = scripted_opponent(env, Rng(1))
    n = 10_000
    random_moves = 0
    for _ in range(n):
        a = scripted_opponent(env, rng)
        if a != greedy:
            random_moves += 1
    # a random draw picks the greedy direction 1/4 of the time, so the
    # observable deviation rate is eps * 3/4
    assert abs(random_moves / n - 0.1 * 0.75) < 0.015


def test_win_requires_strictly_before():
    env = fresh("sparse_versus")
    place(env, [(3, 4), (0, 0)])
    env.opponent_pos = (7, 7)
    r = env.step([COLLECT, STAY])
    assert r.team_reward == 1.0 and r.done and env.success()


def test_simultaneous_collect_is_no_win():
    env = fresh("sparse_versus")
    place(env, [(3, 4), (0, 0)])
    env.opponent_pos = (4, 3)   # adjacent: scripted policy collects
    r = env.step([COLLECT, STAY])
    assert r.team_reward == 0.0 and r.done and not env.success()


def test_opponent_collect_ends_episode_without_reward():
    env = fresh("sparse_versus")
    place(env, [(0, 0), (0, 7)])
    env.opponent_pos = (4, 3)
    r = env.step([STAY, STAY])
    assert r.done and r.team_reward == 0.0 and not env.success()


def test_opponent_body_blocks_agents():
    env = fresh("sparse_versus")
    place(env, [(7, 6), (0, 0)])
    env.opponent_pos = (7, 7)
    env.apple = (6, 7)          # opponent adjacent: it collects and stays put
    r = env.step([DOWN, STAY])
    assert env.positions[0] == (7, 6)
    assert r.done and r.team_reward == 0.0


# -- corridor rules ---------------------------------------------------------------

def test_corridor_goal_pays_once():
    env = fresh("corridor")
    g0 = env.goals[0]
    place(env, [(g0[0] - 1, g0[1]), env.spawns[1]])
    env.positions[1] = (env.spawns[1][0], env.spawns[1][1] - 1)  # clear the goal
    r = env.step([RIGHT, STAY])
    assert env.positions[0] == g0
    assert r.per_agent_reward[0] == 1.0
    r = env.step([STAY, STAY])
    assert r.per_agent_reward[0] == 0.0


def test_corridor_done_when_both_reach():
    env = fresh("corridor")
    g0, g1 = env.goals
    place(env, [g0, (g1[0] + 1, g1[1])])
    env.reached = [True, False]
    r = env.step([STAY, LEFT])
    assert r.done and env.success()


def test_corridor_cells_single_width():
    env = make_env("corridor")
    for (x, y) in env.corridor_cells:
        assert (x, y) not in env.walls
        assert (x, y - 1) in env.walls or y == 0
        assert (x, y + 1) in env.walls or y == env.height - 1


def test_corridor_exclusivity_under_fuzz():
    env = fresh("corridor", 1)
    rng = Rng(31)
    for _ in range(5000):
        if env._done:
            env.reset(rng)
        env.step(list(rng.integers(0, N_ACTIONS, 2)))
        cells = set(env.corridor_cells)
        inside = [p for p in env.positions if p in cells]
        assert len(inside) == len(set(inside))


# -- encodings ---------------------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_encode_dimension_and_purity(kind):
    env = fresh(kind)
    v = env.encode_state()
    assert v.shape == (env.obs_dim,)
    assert np.array_equal(v, env.encode_state())


def test_obs_dim_arithmetic():
    cells = 8 * 8
    assert make_env("joint_forage").obs_dim == 2 * cells + cells + 3 + 1
    assert make_env("three_section").obs_dim == 2 * 81 + 2 * 3 + 1
    assert make_env("sparse_versus").obs_dim == 2 * cells + cells + cells + 1 + 1
    env = make_env("corridor")
    assert env.obs_dim == 2 * 11 * 5 + 2 + 1


def test_move_changes_exactly_two_position_coords():
    env = fresh("corridor")
    place(env, [env.spawns[0], env.spawns[1]])
    before = env.encode_state()
    env.step([UP if (env.spawns[0][0], env.spawns[0][1] - 1) not in env.walls
              else RIGHT, STAY])
    after = env.encode_state()
    block = env.width * env.height
    changed = np.flatnonzero(before[:block] != after[:block])
    assert changed.size == 2
    # agent 1 block untouched
    assert np.array_equal(before[block:2 * block], after[block:2 * block])


# -- episode-level invariants ----------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_replay_equivalence_and_termination(kind):
    def rollout(seed):
        env = make_env(kind)
        rng = Rng(seed, path=(77,))
        act = Rng(seed, path=(78,))
        out = []
        env.reset(rng)
        for _ in range(400):
            r = env.step(list(act.integers(0, N_ACTIONS, env.n_agents)))
            out.append((r.next_state.tobytes(), tuple(r.per_agent_reward),
                        r.team_reward, r.done))
            if r.done:
                assert env.tick <= env.episode_limit
                env.reset(rng)
        return out

    assert rollout(5) == rollout(5)


def test_action_names_cover_action_space():
    assert len(ACTION_NAMES) == N_ACTIONS
