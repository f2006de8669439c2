"""Config schema: round-trips, defaults, validation gates."""

import json

import pytest

from fbmlab.config import ExperimentConfig
from fbmlab.exceptions import ConfigurationError


def test_roundtrip_identity():
    config = ExperimentConfig()
    assert ExperimentConfig.from_dict(config.to_dict()) == config
    rebuilt = ExperimentConfig.from_dict(json.loads(config.to_json()))
    assert rebuilt == config


def test_partial_dict_fills_defaults():
    config = ExperimentConfig.from_dict({"H": 2.5, "samples": 10})
    assert config.hurst == 2.5
    assert config.samples == 10
    assert config.n_ref == ExperimentConfig().n_ref


def test_unknown_keys_rejected():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"hurst": 1.5})  # must use the JSON key "H"


def test_from_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"H": 1.5, "d": 2, "x0": [0.0, 1.0], "x0n": [0.0, 1.0]}))
    config = ExperimentConfig.from_file(path)
    assert config.dim == 2 and config.x0 == (0.0, 1.0)
    path.write_text("not json")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_file(path)


def test_scalar_initial_condition_promoted():
    config = ExperimentConfig.from_dict({"x0": 0.5, "x0n": 0.5})
    assert config.x0 == (0.5,)


def test_validate_noise_rejects_integer_hurst():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(hurst=2.0).validate_noise()
    ExperimentConfig(hurst=0.7).validate_noise()  # rough H fine for noise dumps


def test_validate_rate_gates():
    ExperimentConfig().validate_rate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(hurst=0.7).validate_rate()  # needs H > 1
    with pytest.raises(ConfigurationError):
        ExperimentConfig(n_list=(10,)).validate_rate()  # need >= 3 resolutions
    with pytest.raises(ConfigurationError):
        ExperimentConfig(n_list=(16, 32, 48)).validate_rate()  # 48 does not divide 4096
    with pytest.raises(ConfigurationError):
        ExperimentConfig(samples=1).validate_rate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(
            drift={"name": "capped_holder", "params": {"alpha": 0.5}}
        ).validate_rate()  # fails the regularity gate at H=1.5
    with pytest.raises(ConfigurationError):
        ExperimentConfig(x0=(0.0, 0.0)).validate_rate()  # length mismatch with d=1


def test_validate_optimality_gates():
    good = ExperimentConfig(
        drift={"name": "sin", "params": {"amplitude": 1.0}},
        n_list=(64, 128, 256, 512),
        n_ref=8192,
    )
    good.validate_optimality()
    with pytest.raises(ConfigurationError):
        good.override(drift={"name": "capped_holder", "params": {"alpha": 0.8}}).validate_optimality()
    with pytest.raises(ConfigurationError):
        good.override(n_list=(64, 128, 512)).validate_optimality()  # not doubling
