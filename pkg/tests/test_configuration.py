"""Tests for PipelineConfig creation, serialization, environment loading and validation."""

import json
import os
from pathlib import Path
from unittest.mock import patch

import pytest

from src.pipeline.config.config_manager import (
    DEFAULT_INSTRUCTIONS,
    TASK_KINDS,
    PipelineConfig,
    load_config,
)
from src.pipeline.core.errors import ConfigError


class TestPipelineConfig:
    """All configuration tests in a single flat class."""

    def test_creation_with_defaults(self):
        config = PipelineConfig()
        assert config.tasks == TASK_KINDS
        assert config.max_hops == 2
        assert config.max_negatives_per_start == 9
        assert config.max_examples_per_note == 84
        assert config.n_max == 6
        assert config.threshold == 0.7
        assert config.merge_lambda == 0.7
        assert config.instructions == DEFAULT_INSTRUCTIONS

    def test_comma_separated_lists_are_split(self):
        config = PipelineConfig(tasks="P10, p2", semantic_types="T047,T184")
        assert config.tasks == ["p10", "p2"]
        assert config.semantic_types == ["T047", "T184"]

    def test_paths_are_resolved(self, tmp_path):
        config = PipelineConfig(concepts_path=str(tmp_path / "c.tsv"), output_path="out")
        assert Path(config.concepts_path).is_absolute()
        assert Path(config.output_path).is_absolute()

    def test_default_paths_file_under_output(self, tmp_path):
        config = PipelineConfig(output_path=str(tmp_path))
        assert config.resolved_paths_file == tmp_path / "paths.jsonl"

    @patch.dict(
        os.environ,
        {"KGPF_SEED": "42", "KGPF_THREADS": "3", "KGPF_OUTPUT_PATH": "/tmp/env_output"},
    )
    def test_environment_variable_loading(self):
        config = PipelineConfig()
        assert config.seed == 42
        assert config.threads == 3
        assert config.output_path.endswith("env_output")

    def test_roundtrip_to_file_and_from_file(self, tmp_path):
        original = PipelineConfig(seed=7, tasks=["pc"], merge_exclude=["embed.*"])
        original.to_file(tmp_path / "config.json")
        loaded = PipelineConfig.from_file(tmp_path / "config.json")
        assert loaded.to_dict() == original.to_dict()

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 1, "api_token": "x"}))
        with pytest.raises(ConfigError, match="api_token"):
            PipelineConfig.from_file(path)

    def test_handles_nonexistent_file(self):
        with pytest.raises(FileNotFoundError):
            PipelineConfig.from_file("/path/that/does/not/exist.json")

    def test_load_config_wraps_file_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("invalid json content {")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(bad)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 1, "max_hops": 3}))
        config = load_config(path, seed=9, max_hops=None)
        assert config.seed == 9
        assert config.max_hops == 3

    def test_seed_required_for_seeded_commands(self):
        config = PipelineConfig(seed=None)
        errors = config.validate("build-paths")
        assert any("seed is required" in e for e in errors)
        assert not any("seed" in e for e in config.validate("evaluate"))

    def test_missing_inputs_reported(self, tmp_path):
        config = PipelineConfig(seed=0, concepts_path=str(tmp_path / "nope.tsv"))
        errors = config.validate("build-paths")
        assert any("concepts_path" in e and "does not exist" in e for e in errors)
        assert any("edges_path is required" in e for e in errors)

    def test_make_tasks_needs_paths_file(self, synthetic_dir, tmp_path):
        config = PipelineConfig(
            seed=0,
            concepts_path=str(synthetic_dir["concepts"]),
            edges_path=str(synthetic_dir["edges"]),
            notes_path=str(synthetic_dir["notes"]),
            output_path=str(tmp_path / "out"),
        )
        assert config.validate("build-paths") == []
        assert any("paths_file" in e for e in config.validate("make-tasks"))

    @pytest.mark.parametrize(
        "overrides, fragment",
        [
            ({"n_max": 0}, "n_max"),
            ({"threshold": 0.0}, "threshold"),
            ({"max_hops": 0}, "max_hops"),
            ({"max_negatives_per_start": -1}, "max_negatives_per_start"),
            ({"threads": 0}, "threads"),
            ({"merge_lambda": 1.5}, "merge_lambda"),
            ({"tasks": ["p10", "p11"]}, "Unknown task"),
            ({"tasks": ["p2", "p2"]}, "Duplicate tasks"),
            ({"semantic_types": ["X047"]}, "Invalid semantic type"),
        ],
    )
    def test_invalid_values(self, overrides, fragment):
        errors = PipelineConfig(**overrides).validate()
        assert any(fragment in e for e in errors)

    def test_semantic_wildcard_accepted(self):
        assert PipelineConfig(semantic_types=["*"]).validate() == []

    def test_string_values_in_file_are_coerced(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps({"threshold": "0.7", "seed": "1", "max_hops": "3", "audit_tasks": "false"})
        )
        config = load_config(path)
        assert config.threshold == 0.7 and config.seed == 1 and config.max_hops == 3
        assert config.audit_tasks is False
        assert not any("threshold" in e for e in config.validate("evaluate"))

    @pytest.mark.parametrize(
        "data, fragment",
        [
            ({"seed": "abc"}, "seed must be an integer"),
            ({"threads": 2.5}, "threads must be an integer"),
            ({"n_max": True}, "n_max must be an integer"),
            ({"threshold": "high"}, "threshold must be a number"),
            ({"undirected": "maybe"}, "undirected must be true or false"),
            ({"tasks": [1, 2]}, "tasks must be a list of strings"),
            ({"instructions": {"p2": 3}}, "instructions must map"),
            ({"notes_path": 12}, "invalid values"),
        ],
    )
    def test_badly_typed_file_values_are_config_errors(self, tmp_path, data, fragment):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match=fragment):
            load_config(path)

    @patch.dict(os.environ, {"KGPF_SEED": "not-a-number"})
    def test_bad_env_seed_is_config_error(self):
        with pytest.raises(ConfigError, match="KGPF_SEED must be an integer"):
            PipelineConfig()
