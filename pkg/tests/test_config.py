"""Config text format: parsing, defaults, validation, round-trip."""

import pytest

from ligs.config import (
    ConfigError,
    RunConfig,
    load_config,
    normalize_config,
    parse_config,
    serialize_config,
    validate_config,
)


def test_defaults_fill_absent_keys():
    cfg = parse_config("experiment_id=foraging2, seed=7")
    assert cfg.experiment_id == "foraging2"
    assert cfg.seed == 7
    assert cfg.gamma == 0.99
    assert cfg.gae_lambda == 0.95
    assert cfg.learning_rate == 1e-4
    assert cfg.rollout_length == 128
    assert cfg.num_actors == 16
    assert cfg.num_minibatches == 4
    assert cfg.num_epochs == 4
    assert cfg.grad_clip_norm == 1.0


def test_comments_and_blank_lines():
    cfg = parse_config(
        "# a run\nexperiment_id=corridor\n\nseed=3  # trailing comment\n")
    assert cfg.experiment_id == "corridor"
    assert cfg.seed == 3


def test_one_pair_per_line_also_accepted():
    cfg = parse_config("experiment_id=foraging1\ngamma=0.9\n")
    assert cfg.gamma == 0.9


def test_out_of_range_gamma_names_key():
    with pytest.raises(ConfigError, match="gamma"):
        parse_config("experiment_id=foraging1, gamma=1.5")


def test_missing_experiment_id():
    with pytest.raises(ConfigError, match="experiment_id"):
        parse_config("")


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="warp_speed"):
        parse_config("experiment_id=foraging1, warp_speed=9")


def test_bad_int_named():
    with pytest.raises(ConfigError, match="seed"):
        parse_config("experiment_id=foraging1, seed=three")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("experiment_id=foraging1, seed=1, seed=2")


def test_bad_enum_values():
    with pytest.raises(ConfigError, match="algorithm"):
        parse_config("experiment_id=foraging1, algorithm=dqn")
    with pytest.raises(ConfigError, match="experiment_id"):
        parse_config("experiment_id=atari")
    with pytest.raises(ConfigError, match="novelty_kind"):
        parse_config("experiment_id=foraging1, novelty_kind=icm")


def test_range_checks():
    with pytest.raises(ConfigError, match="learning_rate"):
        validate_config(RunConfig(experiment_id="foraging1", learning_rate=0.0))
    with pytest.raises(ConfigError, match="num_actors"):
        validate_config(RunConfig(experiment_id="foraging1", num_actors=0))
    with pytest.raises(ConfigError, match="option_terminate_prob"):
        validate_config(RunConfig(experiment_id="foraging1",
                                  option_terminate_prob=1.5))
    with pytest.raises(ConfigError, match="switch_cost"):
        validate_config(RunConfig(experiment_id="foraging1", switch_cost=-0.1))


def test_bool_parsing():
    assert parse_config("experiment_id=foraging1, share_params=false").share_params is False
    assert parse_config("experiment_id=foraging1, share_params=1").share_params is True
    with pytest.raises(ConfigError, match="share_params"):
        parse_config("experiment_id=foraging1, share_params=maybe")


def test_round_trip():
    text = "experiment_id=corridor, seed=5, gamma=0.9, algorithm=ippo"
    assert serialize_config(parse_config(text)) == normalize_config(text)
    # canonical text is a fixed point of normalization
    canon = normalize_config(text)
    assert normalize_config(canon) == canon


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("experiment_id=foraging3\nseed=9\n", encoding="utf-8")
    cfg = load_config(str(p))
    assert cfg.experiment_id == "foraging3"
    assert cfg.seed == 9


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.cfg"))
