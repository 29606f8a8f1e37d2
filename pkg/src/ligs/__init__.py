"""Switching intrinsic-reward generation on top of multi-agent PPO.

A generator agent learns where to switch on a telescoping intrinsic-reward
stream for a team of PPO learners, paying a cost per activation. The shaping
provably leaves the task's optimal policies untouched; the package pairs the
training stack with a tabular theory lab that checks those guarantees
directly.
"""

from .config import (ALGORITHMS, EXPERIMENTS, ConfigError, RunConfig,
                     load_config, normalize_config, parse_config,
                     serialize_config, validate_config)
from .envs import GridEnv, StepResult, make_env
from .generator import (GeneratorDecision, GeneratorPolicies, PotentialNet,
                        SwitchState, decide, generator_reward,
                        telescoping_audit)
from .harness import (ExperimentSpec, HarnessError, aggregate_heatmaps,
                      compare_runs, run_experiment, run_theory_suite)
from .learners import TeamLearner, assemble_shaped_reward, compute_gae
from .metrics import (HEADER, MetricsError, MetricsRow, MetricsWriter,
                      read_metrics)
from .novelty import RndPair, VisitCounter, novelty_count, novelty_rnd
from .rng import Rng, rng_fork
from .theory import (GameError, PropertyError, TabularGame, bellman_op,
                     intervention_op, invariance_audit, linear_fa_qlearn,
                     load_game, q_fixed_point, random_game, save_game,
                     switch_rule, theorem3_check, value_iterate)
from .trainer import TrainAbort, Trainer

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "EXPERIMENTS", "ConfigError", "RunConfig", "load_config",
    "normalize_config", "parse_config", "serialize_config", "validate_config",
    "GridEnv", "StepResult", "make_env",
    "GeneratorDecision", "GeneratorPolicies", "PotentialNet", "SwitchState",
    "decide", "generator_reward", "telescoping_audit",
    "ExperimentSpec", "HarnessError", "aggregate_heatmaps", "compare_runs",
    "run_experiment", "run_theory_suite",
    "TeamLearner", "assemble_shaped_reward", "compute_gae",
    "HEADER", "MetricsError", "MetricsRow", "MetricsWriter", "read_metrics",
    "RndPair", "VisitCounter", "novelty_count", "novelty_rnd",
    "Rng", "rng_fork",
    "GameError", "PropertyError", "TabularGame", "bellman_op",
    "intervention_op", "invariance_audit", "linear_fa_qlearn", "load_game",
    "q_fixed_point", "random_game", "save_game", "switch_rule",
    "theorem3_check", "value_iterate",
    "TrainAbort", "Trainer",
    "__version__",
]
