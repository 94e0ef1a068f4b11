from __future__ import annotations

import json

import pytest

from ember import ConfigurationError
from ember.config import (
    load_run_config,
    packaged_config,
    resolve_config,
    training_config,
    write_resolved_config,
)


def minimal_raw(tmp_path):
    return {"data": {"root": str(tmp_path / "data")}, "output_dir": str(tmp_path / "out")}


class TestResolveConfig:
    def test_defaults_fill_in(self, tmp_path):
        config = resolve_config(minimal_raw(tmp_path))
        assert config["training"]["epochs"] == 200
        assert config["training"]["batch_size"] == 32
        assert config["training"]["learning_rate"] == 1e-5
        assert config["model"]["head"]["hidden_units"] == 128
        assert config["model"]["head"]["mode"] == "binary_sigmoid"
        assert config["model"]["adapter"]["target"] == [224, 224]
        assert config["data"]["fractions"] == [0.7, 0.1, 0.2]
        assert config["evaluation"]["threshold"] == 0.5

    def test_unknown_top_level_key_rejected(self, tmp_path):
        raw = minimal_raw(tmp_path)
        raw["trainnig"] = {}
        with pytest.raises(ConfigurationError, match="trainnig"):
            resolve_config(raw)

    def test_unknown_nested_key_rejected(self, tmp_path):
        raw = minimal_raw(tmp_path)
        raw["training"] = {"learning_rte": 0.1}
        with pytest.raises(ConfigurationError, match="learning_rte"):
            resolve_config(raw)

    def test_missing_required_key(self):
        with pytest.raises(ConfigurationError, match="output_dir"):
            resolve_config({"data": {"root": "x"}})

    def test_invalid_fractions_rejected(self, tmp_path):
        raw = minimal_raw(tmp_path)
        raw["data"]["fractions"] = [0.8, 0.2, 0.2]
        with pytest.raises(ConfigurationError):
            resolve_config(raw)

    def test_invalid_layout_rejected(self, tmp_path):
        raw = minimal_raw(tmp_path)
        raw["data"]["layout"] = "nested"
        with pytest.raises(ConfigurationError):
            resolve_config(raw)

    def test_typed_configs_validate_eagerly(self, tmp_path):
        raw = minimal_raw(tmp_path)
        raw["training"] = {"unfreeze_schedule": [[3, "head_only"]]}
        with pytest.raises(ConfigurationError):
            resolve_config(raw)


class TestLoadAndPersist:
    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(minimal_raw(tmp_path)))
        config = load_run_config(path)
        assert config["training"]["seed"] == 42

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_run_config(tmp_path / "none.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            load_run_config(path)

    def test_resolved_config_round_trips(self, tmp_path):
        config = resolve_config(minimal_raw(tmp_path))
        target = write_resolved_config(config, tmp_path / "out")
        assert target.name == "config.resolved.json"
        reloaded = resolve_config(json.loads(target.read_text()))
        assert reloaded == config


class TestPackagedConfigs:
    def test_reproduction_config_values(self):
        # The shipped reproduction config pins the published run settings.
        config = packaged_config("uttarakhand")
        assert config["training"]["epochs"] == 200
        assert config["training"]["batch_size"] == 32
        assert config["training"]["learning_rate"] == 1e-5
        assert config["model"]["adapter"]["target"] == [224, 224]
        assert config["model"]["head"]["hidden_units"] == 128
        assert config["model"]["head"]["mode"] == "binary_sigmoid"
        assert config["data"]["fractions"] == [0.8, 0.0, 0.2]
        assert config["training"]["early_stopping"]["enabled"] is False

    def test_early_stopping_variant(self):
        config = packaged_config("uttarakhand_earlystop")
        assert config["training"]["early_stopping"]["enabled"] is True
        assert config["training"]["epochs"] == 200

    def test_unknown_packaged_config(self):
        with pytest.raises(ConfigurationError):
            packaged_config("nonexistent")

    def test_reproduction_config_builds_training_config(self):
        cfg = training_config(packaged_config("uttarakhand"))
        assert cfg.epochs == 200
        assert cfg.optimizer.beta1 == 0.9
        assert cfg.optimizer.beta2 == 0.999
        assert cfg.optimizer.epsilon == 1e-8
