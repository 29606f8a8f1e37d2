"""Run configuration: a flat key=value text format and its validated record.

The on-disk format is UTF-8 text, one `key=value` pair per line (commas also
separate pairs, so `a=1, b=2` on one line parses), `#` starts a comment.
Unknown keys and malformed values are hard errors that name the key.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

EXPERIMENTS = ("foraging1", "foraging2", "foraging3", "corridor")
ALGORITHMS = ("ligs", "mappo", "ippo", "mappo_rnd", "ligs_random_switch", "ligs_always_on")
NOVELTY_KINDS = ("rnd", "count")
BASE_LEARNERS = ("mappo", "ippo")
SWITCH_OFF_MODES = ("prob", "policy")

# algorithms that instantiate the switching generator
GENERATOR_ALGOS = ("ligs", "ligs_random_switch", "ligs_always_on")


class ConfigError(ValueError):
    """Raised for unknown keys, bad values, or failed range checks."""


@dataclass
class RunConfig:
    experiment_id: str
    seed: int = 0
    gamma: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 1e-4
    rollout_length: int = 128
    num_actors: int = 16
    num_minibatches: int = 4
    num_epochs: int = 4
    grad_clip_norm: float = 1.0
    switch_cost: float = 0.1
    intrinsic_coef: float = 1.0
    extrinsic_coef: float = 1.0
    l_output_size: int = 32
    generator_action_count: int = 1
    option_terminate_prob: float = 0.9
    novelty_kind: str = "rnd"
    algorithm: str = "ligs"
    total_env_steps: int = 300_000
    base_learner: str = "mappo"
    share_params: bool = True
    switch_off: str = "prob"
    hidden_width: int = 64


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    field = _FIELDS[key]
    raw = raw.strip()
    if field.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key '{key}': expected integer, got '{raw}'") from None
    if field.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"key '{key}': expected real number, got '{raw}'") from None
    if field.type in ("bool", bool):
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"key '{key}': expected boolean, got '{raw}'")
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse key=value text into a validated RunConfig."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for pair in line.split(","):
            pair = pair.strip()
            if not pair:
                continue
            if "=" not in pair:
                raise ConfigError(f"line {lineno}: expected key=value, got '{pair}'")
            key, raw = pair.split("=", 1)
            key = key.strip()
            if key not in _FIELDS:
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key '{key}'")
            values[key] = _parse_value(key, raw)
    if "experiment_id" not in values:
        raise ConfigError("missing required key 'experiment_id'")
    cfg = RunConfig(**values)  # type: ignore[arg-type]
    validate_config(cfg)
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    return parse_config(text)


def validate_config(cfg: RunConfig) -> None:
    def choice(key, value, allowed):
        if value not in allowed:
            raise ConfigError(f"key '{key}': '{value}' not one of {allowed}")

    choice("experiment_id", cfg.experiment_id, EXPERIMENTS)
    choice("algorithm", cfg.algorithm, ALGORITHMS)
    choice("novelty_kind", cfg.novelty_kind, NOVELTY_KINDS)
    choice("base_learner", cfg.base_learner, BASE_LEARNERS)
    choice("switch_off", cfg.switch_off, SWITCH_OFF_MODES)
    if not 0.0 < cfg.gamma < 1.0:
        raise ConfigError(f"key 'gamma': must lie in (0,1), got {cfg.gamma}")
    for key in ("gae_lambda", "option_terminate_prob"):
        v = getattr(cfg, key)
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"key '{key}': must lie in [0,1], got {v}")
    for key in ("learning_rate", "grad_clip_norm"):
        v = getattr(cfg, key)
        if v <= 0:
            raise ConfigError(f"key '{key}': must be positive, got {v}")
    for key in ("switch_cost", "intrinsic_coef", "extrinsic_coef"):
        v = getattr(cfg, key)
        if v < 0:
            raise ConfigError(f"key '{key}': must be nonnegative, got {v}")
    for key in ("rollout_length", "num_actors", "num_minibatches", "num_epochs",
                "l_output_size", "generator_action_count", "hidden_width"):
        v = getattr(cfg, key)
        if v < 1:
            raise ConfigError(f"key '{key}': must be >= 1, got {v}")
    # a zero-step run is a valid no-op (header-only metrics file)
    if cfg.total_env_steps < 0:
        raise ConfigError(f"key 'total_env_steps': must be >= 0, got {cfg.total_env_steps}")
    if cfg.seed < 0:
        raise ConfigError(f"key 'seed': must be >= 0, got {cfg.seed}")


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form: every field, declaration order, one pair per line."""
    lines = []
    for f in dataclasses.fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def normalize_config(text: str) -> str:
    """Canonical form of a config text: parse, fill defaults, reprint."""
    return serialize_config(parse_config(text))
