"""
Tests for configuration loading, the key=value encoding and DTRC checkpoints.

Run with: pytest test_config_checkpoint.py -v
"""

import struct

import numpy as np
import pytest
import yaml

from rectifier import GeoConfig, IllConfig, SegConfig, load_model, load_run_config, save_model
from rectifier.checkpoint import MAGIC, ModelWeights
from rectifier.config import (
    THREADS_ENV,
    TrainConfig,
    build,
    dump_yaml,
    from_kv,
    parse_kv,
    to_kv,
)
from rectifier.errors import CheckpointError, ConfigError, DataError
from rectifier.geotr import GeoModel
from rectifier.models import model_weights
from rectifier.segmenter import SegModel


@pytest.fixture(autouse=True)
def no_thread_override(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)


class TestKeyValue:
    """Config block encoding."""

    def test_lines_are_sorted_and_typed(self):
        text = to_kv(SegConfig(channels=(2, 3, 4)), {"kind": "segmenter"})
        lines = text.splitlines()
        assert lines == sorted(lines)
        assert "channels=2,3,4" in lines
        assert "mean_reduction=false" in lines
        assert "kind=segmenter" in lines

    @pytest.mark.parametrize(
        "config",
        [
            GeoConfig(image_size=16, hidden_dim=8, heads=2, ffn_dim=None, decoder_residual="attended"),
            IllConfig(overlap=0.2, alpha=3e-5, use_decoder=False),
            SegConfig(tau=0.35, mean_reduction=True),
        ],
    )
    def test_from_kv_restores_config(self, config):
        assert from_kv(type(config), to_kv(config)) == config

    def test_undeclared_keys_are_ignored(self):
        assert from_kv(SegConfig, "kind=segmenter\nstep=40\n") == SegConfig()

    def test_line_without_equals(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_kv("a=1\nbroken\n")

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            from_kv(SegConfig, "tau=2.0\n")


class TestRunConfig:
    """Profiles, YAML files and CLI overrides."""

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"seed": 3, "geo": {"depth": 2}}))
        config = load_run_config("desk", path, {"seed": 5, "out": None})
        assert config.seed == 5
        assert config.geo.depth == 2
        assert config.geo.hidden_dim == 512
        assert config.out is None

    def test_published_scale_profile(self):
        assert load_run_config("paper").geo_train.steps == 500_000

    def test_unknown_profile(self):
        with pytest.raises(ConfigError, match="profile"):
            load_run_config("lab")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config("desk", tmp_path / "absent.yaml")

    def test_yaml_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_run_config("desk", path)

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="geo"):
            load_run_config("desk", overrides={"geo": {"depht": 2}})

    def test_threads_from_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert load_run_config().threads == 3
        monkeypatch.setenv(THREADS_ENV, "none")
        with pytest.raises(ConfigError):
            load_run_config()

    def test_echo_reloads_to_same_config(self, tmp_path):
        config = load_run_config("desk", overrides={"command": "synth", "seed": 9, "synth": {"curl": 0.1}})
        dump_yaml(config, tmp_path / "config.yaml")
        assert load_run_config("desk", tmp_path / "config.yaml") == config

    def test_warmup_clamped_to_run_length(self):
        config = build(TrainConfig, {"steps": 10, "warmup_steps": 20})
        assert config.warmup_steps == 20
        assert config.effective_warmup == 10

    def test_geo_shapes_checked(self):
        with pytest.raises(ConfigError):
            build(GeoConfig, {"hidden_dim": 10, "heads": 4})


class TestCheckpointFormat:
    """DTRC encoding."""

    def weights(self) -> ModelWeights:
        return ModelWeights(
            tensors={"b": np.arange(6, dtype=np.float32).reshape(2, 3), "a": np.float32(2.5) * np.ones(())},
            config={"kind": "segmenter", "depth": "2"},
        )

    def test_save_load_save_is_byte_identical(self, tmp_path):
        self.weights().save(tmp_path / "one.dtrc")
        ModelWeights.load(tmp_path / "one.dtrc").save(tmp_path / "two.dtrc")
        assert (tmp_path / "one.dtrc").read_bytes() == (tmp_path / "two.dtrc").read_bytes()

    def test_round_trip_values(self):
        restored = ModelWeights.from_bytes(self.weights().to_bytes())
        np.testing.assert_array_equal(restored.tensors["b"], np.arange(6).reshape(2, 3))
        assert restored.tensors["a"].shape == ()
        assert restored.config == {"depth": "2", "kind": "segmenter"}

    def test_header(self):
        blob = self.weights().to_bytes()
        assert blob[:4] == MAGIC
        assert struct.unpack("<HI", blob[4:10]) == (1, 2)

    def test_bad_magic(self):
        with pytest.raises(CheckpointError, match="magic"):
            ModelWeights.from_bytes(b"XXXX" + self.weights().to_bytes()[4:])

    def test_unsupported_version(self):
        blob = bytearray(self.weights().to_bytes())
        blob[4:6] = struct.pack("<H", 9)
        with pytest.raises(CheckpointError, match="version"):
            ModelWeights.from_bytes(bytes(blob))

    def test_truncated_tensor_is_named(self):
        blob = self.weights().to_bytes()
        with pytest.raises(CheckpointError) as info:
            ModelWeights.from_bytes(blob[:30])
        assert info.value.tensor == "b"

    def test_trailing_bytes(self):
        with pytest.raises(CheckpointError, match="trailing"):
            ModelWeights.from_bytes(self.weights().to_bytes() + b"\0")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ModelWeights.load(tmp_path / "absent.dtrc")


class TestModelCheckpoints:
    """Saving and rebuilding models by kind."""

    def test_geo_round_trip(self, tmp_path, tiny_geo_config, rng):
        model = GeoModel(tiny_geo_config.model_copy(update={"seed": 4}))
        save_model(model, tmp_path / "geo.dtrc")
        restored = load_model(tmp_path / "geo.dtrc", "geotr")
        assert restored.config == model.config
        image = rng.uniform(size=(16, 16, 3))
        np.testing.assert_array_equal(restored.predict(image).coords, model.predict(image).coords)

    def test_config_block_carries_kind(self, tiny_seg_config):
        weights = model_weights(SegModel(tiny_seg_config), extra={"step": 12})
        assert weights.config["kind"] == "segmenter"
        assert weights.config["step"] == "12"
        assert weights.config["channels"] == "4,4,8"

    def test_wrong_kind(self, tmp_path, tiny_seg_config):
        save_model(SegModel(tiny_seg_config), tmp_path / "seg.dtrc")
        with pytest.raises(CheckpointError, match="segmenter"):
            load_model(tmp_path / "seg.dtrc", "geotr")

    def test_missing_tensor_is_named(self, tmp_path, tiny_seg_config):
        weights = model_weights(SegModel(tiny_seg_config))
        del weights.tensors["head.bias"]
        weights.save(tmp_path / "seg.dtrc")
        with pytest.raises(CheckpointError) as info:
            load_model(tmp_path / "seg.dtrc", "segmenter")
        assert info.value.tensor == "head.bias"

    def test_extent_mismatch_is_named(self, tmp_path, tiny_seg_config):
        weights = model_weights(SegModel(tiny_seg_config))
        weights.tensors["head.weight"] = np.zeros((1, 1, 4, 2), dtype=np.float32)
        weights.save(tmp_path / "seg.dtrc")
        with pytest.raises(CheckpointError) as info:
            load_model(tmp_path / "seg.dtrc", "segmenter")
        assert info.value.tensor == "head.weight"
