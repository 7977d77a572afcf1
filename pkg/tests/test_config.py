from pathlib import Path

import pytest

from config import (
    DEFAULT_OUT_DIR,
    OUT_DIR_ENV,
    ConfigError,
    ExperimentConfig,
    from_mapping,
    load_config,
    parse_seeds,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize(
    "value, expected",
    [("0..3", (0, 1, 2, 3)), ("5", (5,)), (7, (7,)), ([3, 1, 2], (3, 1, 2)), ("2..2", (2,)), (None, ())],
)
def test_parse_seeds(value, expected):
    assert parse_seeds(value) == expected


@pytest.mark.parametrize("value", ["3..1", "a..b", "1-4", True, [1, "2"]])
def test_parse_seeds_rejects_bad_values(value):
    with pytest.raises(ConfigError):
        parse_seeds(value)


def test_unknown_top_level_key_is_rejected():
    with pytest.raises(ConfigError, match="polcy_kind"):
        from_mapping({"polcy_kind": "rl"})


def test_unknown_nested_key_names_its_path():
    with pytest.raises(ConfigError, match="scenario.radio.shadow_sigma"):
        from_mapping({"scenario": {"radio": {"shadow_sigma": 3.0}}})
    with pytest.raises(ConfigError, match="trainer.learning_rate"):
        from_mapping({"trainer": {"learning_rate": 0.1}})


def test_invalid_values_become_config_errors():
    with pytest.raises(ConfigError):
        from_mapping({"trainer": {"xi": 2.0}})
    with pytest.raises(ConfigError):
        from_mapping({"policy_kind": "random"})
    with pytest.raises(ConfigError):
        from_mapping({"scenario": {"poi": [1.0]}})
    with pytest.raises(ConfigError):
        from_mapping({"scenario": {"terrain": "desert"}})


def test_canyon_preset_with_radio_override():
    cfg = from_mapping({"scenario": {"terrain": "canyon", "radio": {"seed": 3}}})
    assert cfg.scenario.terrain == "canyon"
    assert cfg.scenario.radio.path_loss_exponent == 3.5
    assert cfg.scenario.radio.rician_k_db == 0.0
    assert cfg.scenario.radio.seed == 3


def test_shipped_configs_load():
    plain = load_config(CONFIGS / "plain.yaml")
    assert plain.policy_kind == "rl"
    assert plain.seeds == tuple(range(20))
    assert Path(plain.memory_out).name == "memory.json"
    canyon = load_config(CONFIGS / "canyon.yaml")
    assert canyon.policy_kind == "meta"
    assert canyon.scenario.terrain == "canyon"
    assert Path(canyon.prior_memories[0]).parent.name == "plain"
    oracle = load_config(CONFIGS / "oracle.yaml")
    assert oracle.scenario.poi == (0.0, 0.0)
    assert oracle.scenario.uav_start == (1240.0, 0.0)


def test_relative_file_references_resolve_against_the_config(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("policy_kind: rl\ncheckpoint: ckpt/policy.ckpt\nprior_memories: [mem.json]\n")
    cfg = load_config(path)
    assert cfg.checkpoint == str(tmp_path / "ckpt" / "policy.ckpt")
    assert cfg.prior_memories == (str(tmp_path / "mem.json"),)


def test_config_hash_is_stable_and_ignores_out_dir():
    cfg = from_mapping({"seeds": "0..4", "scenario": {"terrain": "canyon"}})
    digest = cfg.config_hash()
    assert len(digest) == 16
    int(digest, 16)
    assert from_mapping({"seeds": "0..4", "scenario": {"terrain": "canyon"}}).config_hash() == digest
    assert cfg.with_overrides(out_dir="elsewhere").config_hash() == digest
    assert cfg.with_overrides(seeds=(0, 1)).config_hash() != digest


def test_missing_referenced_file_is_a_config_error(tmp_path):
    cfg = ExperimentConfig(policy_kind="rl", checkpoint=str(tmp_path / "missing.ckpt"))
    with pytest.raises(ConfigError):
        cfg.file_digests()
    assert cfg.file_digests(require_checkpoint=False) == {}
    memory = tmp_path / "memory.json"
    memory.write_text("{}")
    digests = ExperimentConfig(prior_memories=(str(memory),)).file_digests()
    assert list(digests) == [str(memory)]
    assert len(digests[str(memory)]) == 64


def test_out_dir_comes_from_the_environment(monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, "from-env")
    assert from_mapping({}).out_dir == "from-env"
    assert from_mapping({"out_dir": "explicit"}).out_dir == "explicit"
    monkeypatch.delenv(OUT_DIR_ENV)
    assert from_mapping({}).out_dir == DEFAULT_OUT_DIR


def test_bad_yaml_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("seeds: [0, 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_overrides_skip_none():
    cfg = ExperimentConfig(policy_kind="greedy")
    assert cfg.with_overrides(policy_kind=None, episodes=3) == ExperimentConfig(policy_kind="greedy", episodes=3)
