"""Configuration management for kg-path-forge."""

import json
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from ..core.errors import ConfigError
from ..logging.logging_config import get_logger

logger = get_logger(__name__)

# =============================================================================
# ENVIRONMENT CONFIGURATION
# =============================================================================

config_dir = Path(__file__).parent.resolve()
project_root = config_dir.parent.parent.parent
dotenv_path = project_root / ".env"

load_dotenv(dotenv_path)


# =============================================================================
# TASK AND FILTER DEFAULTS
# =============================================================================

# Canonical task order; also the order outputs are written in
TASK_KINDS = ["p10", "p2", "pn10", "nhp", "pc"]

# Diagnosis-relevant semantic types: Finding, Injury or Poisoning, Pathologic
# Function, Disease or Syndrome, Mental or Behavioral Dysfunction, Cell or
# Molecular Dysfunction, Sign or Symptom
DEFAULT_SEMANTIC_TYPES = ["T033", "T037", "T046", "T047", "T048", "T049", "T184"]

SEMANTIC_WILDCARD = "*"

DEFAULT_INSTRUCTIONS = {
    "p10": (
        "Given the patient progress note and the 10 candidate PATHs below, "
        "select the one PATH that leads to the correct diagnosis."
    ),
    "p2": (
        "Given the patient progress note and the 2 candidate PATHs below, "
        "select the PATH that leads to the correct diagnosis."
    ),
    "pn10": (
        "Given the patient progress note and the 10 candidate PATHs below, "
        "select every PATH that leads to a correct diagnosis."
    ),
    "nhp": "Given the PATH '{partial_path}', predict the next hop of the PATH",
    "pc": "Given the PATH '{partial_path}', complete the rest of the PATH.",
}

# Commands that draw random samples and therefore need a seed
SEEDED_COMMANDS = frozenset({"build-paths", "make-tasks"})

_SEMANTIC_CODE = re.compile(r"^T\d{3}$")


def _env_int(name: str, default: int | None) -> int | None:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    return _as_int(name, raw)


# Typed fields; JSON config values and env strings are coerced to these types
_INT_FIELDS = (
    "n_max",
    "max_hops",
    "max_negatives_per_start",
    "max_examples_per_note",
    "max_instances_per_note",
    "threads",
)
_FLOAT_FIELDS = ("threshold", "merge_lambda")
_BOOL_FIELDS = ("undirected", "emit_preference_pairs", "audit_tasks")
_STR_LIST_FIELDS = ("tasks", "semantic_types", "merge_exclude")

_TRUE_STRINGS = frozenset({"1", "true", "yes", "on"})
_FALSE_STRINGS = frozenset({"0", "false", "no", "off"})


def _as_int(name: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise ConfigError(f"{name} must be an integer, got {value!r}")


def _as_float(name: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if isinstance(value, int | float):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            pass
    raise ConfigError(f"{name} must be a number, got {value!r}")


def _as_bool(name: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in _TRUE_STRINGS | _FALSE_STRINGS:
        return value.strip().lower() in _TRUE_STRINGS
    raise ConfigError(f"{name} must be true or false, got {value!r}")


# =============================================================================
# PIPELINE CONFIGURATION DATACLASS
# =============================================================================


@dataclass
class PipelineConfig:
    """
    Full configuration of one pipeline run.

    Defaults come from the dataclass, then the environment (``KGPF_*``,
    ``.env`` supported), then a JSON config file, then CLI flags.
    """

    # --- Inputs ---
    concepts_path: str | None = field(default_factory=lambda: os.getenv("KGPF_CONCEPTS"))
    edges_path: str | None = field(default_factory=lambda: os.getenv("KGPF_EDGES"))
    notes_path: str | None = field(default_factory=lambda: os.getenv("KGPF_NOTES"))
    # PathSet JSONL consumed by make-tasks; defaults to <output_path>/paths.jsonl
    paths_file: str | None = None

    # --- Outputs ---
    output_path: str = field(
        default_factory=lambda: os.getenv("KGPF_OUTPUT_PATH", str(project_root / "output"))
    )

    # --- Reproducibility ---
    seed: int | None = field(default_factory=lambda: _env_int("KGPF_SEED", None))

    # --- Graph & matching ---
    semantic_types: list[str] | None = None
    undirected: bool = False
    n_max: int = 6
    threshold: float = 0.7

    # --- Path sampling ---
    max_hops: int = 2
    max_negatives_per_start: int = 9
    max_examples_per_note: int = 84

    # --- Task datasets ---
    tasks: list[str] = field(default_factory=lambda: list(TASK_KINDS))
    max_instances_per_note: int = 84
    instructions: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_INSTRUCTIONS))
    emit_preference_pairs: bool = False
    audit_tasks: bool = True

    # --- Merging ---
    merge_lambda: float = 0.7
    merge_exclude: list[str] = field(default_factory=list)

    # --- Runtime ---
    threads: int = field(default_factory=lambda: _env_int("KGPF_THREADS", 1) or 1)
    log_level: str = field(default_factory=lambda: os.getenv("KGPF_LOG_LEVEL", "INFO"))

    def __post_init__(self) -> None:
        """Path resolution and type coercion."""
        for name in ("concepts_path", "edges_path", "notes_path", "paths_file"):
            value = getattr(self, name)
            if value:
                setattr(self, name, str(Path(value).resolve()))
        if self.output_path:
            self.output_path = str(Path(self.output_path).resolve())

        for name in _STR_LIST_FIELDS:
            value = getattr(self, name)
            if isinstance(value, str):
                value = [t.strip() for t in value.split(",") if t.strip()]
            elif isinstance(value, tuple):
                value = list(value)
            elif value is None and name != "semantic_types":
                value = []
            if value is not None and (
                not isinstance(value, list) or not all(isinstance(t, str) for t in value)
            ):
                raise ConfigError(f"{name} must be a list of strings, got {value!r}")
            setattr(self, name, value)
        self.tasks = [t.lower() for t in self.tasks]

        if not isinstance(self.instructions, dict) or not all(
            isinstance(v, str) for v in self.instructions.values()
        ):
            raise ConfigError("instructions must map task names to template strings")

        for name in _INT_FIELDS:
            setattr(self, name, _as_int(name, getattr(self, name)))
        for name in _FLOAT_FIELDS:
            setattr(self, name, _as_float(name, getattr(self, name)))
        for name in _BOOL_FIELDS:
            setattr(self, name, _as_bool(name, getattr(self, name)))
        if self.seed is not None:
            self.seed = _as_int("seed", self.seed)

    @property
    def resolved_paths_file(self) -> Path:
        """PathSet JSONL location used by make-tasks."""
        if self.paths_file:
            return Path(self.paths_file)
        return Path(self.output_path) / "paths.jsonl"

    def to_dict(self) -> dict[str, Any]:
        """Converts the configuration to a dictionary."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_file(self, file_path: str | Path) -> None:
        """Saves configuration to a JSON file."""
        p = Path(file_path)
        with p.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.to_dict(), indent=4))

    @classmethod
    def from_file(cls, file_path: str | Path) -> "PipelineConfig":
        """Loads configuration from a JSON file."""
        p = Path(file_path)
        if not p.exists():
            raise FileNotFoundError(f"Config file not found: {p}")
        with p.open(encoding="utf-8") as fh:
            data = json.loads(fh.read())
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {p} must contain a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys in {p}: {', '.join(unknown)}")
        return cls(**data)

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        """Return a copy with every non-None override applied (flags win)."""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return type(self)(**data)

    def validate(self, command: str | None = None) -> list[str]:
        """
        Validates the configuration for *command* and returns a list of errors.
        An empty list indicates a valid configuration.
        """
        errors: list[str] = []

        if command in SEEDED_COMMANDS:
            if self.seed is None:
                errors.append(f"A seed is required for {command} (--seed or KGPF_SEED)")
            elif self.seed < 0:
                errors.append("seed must be an unsigned integer")

        required_inputs: dict[str, list[str]] = {
            "build-paths": ["concepts_path", "edges_path", "notes_path"],
            "make-tasks": ["concepts_path", "edges_path", "notes_path"],
        }
        for name in required_inputs.get(command or "", []):
            value = getattr(self, name)
            if not value:
                errors.append(f"{name} is required for {command}")
            elif not Path(value).is_file():
                errors.append(f"{name} '{value}' does not exist")
        if command == "make-tasks" and not self.resolved_paths_file.is_file():
            errors.append(f"paths_file '{self.resolved_paths_file}' does not exist")

        if not 1 <= self.n_max <= 10:
            errors.append("n_max must be between 1 and 10")
        if not 0 < self.threshold <= 1:
            errors.append("threshold must be in (0, 1]")
        if self.max_hops < 1:
            errors.append("max_hops must be at least 1")
        if self.max_negatives_per_start < 0:
            errors.append("max_negatives_per_start cannot be negative")
        if self.max_examples_per_note < 0:
            errors.append("max_examples_per_note cannot be negative")
        if self.max_instances_per_note < 0:
            errors.append("max_instances_per_note cannot be negative")
        if self.threads < 1:
            errors.append("threads must be at least 1")
        if not 0 <= self.merge_lambda <= 1:
            errors.append("merge_lambda must be in [0, 1]")

        unknown_tasks = [t for t in self.tasks if t not in TASK_KINDS]
        if unknown_tasks:
            errors.append(
                f"Unknown task(s): {', '.join(unknown_tasks)} "
                f"(expected a subset of {', '.join(TASK_KINDS)})"
            )
        if len(self.tasks) != len(set(self.tasks)):
            errors.append("Duplicate tasks found in configuration.")

        for code in self.semantic_types or []:
            if code != SEMANTIC_WILDCARD and not _SEMANTIC_CODE.match(code):
                errors.append(f"Invalid semantic type code '{code}'")

        return errors


# =============================================================================
# CONFIGURATION ACCESSOR FUNCTIONS
# =============================================================================

_ENV_VARS = (
    "KGPF_CONCEPTS",
    "KGPF_EDGES",
    "KGPF_NOTES",
    "KGPF_OUTPUT_PATH",
    "KGPF_SEED",
    "KGPF_THREADS",
    "KGPF_LOG_LEVEL",
)


def load_config(config_file: str | Path | None = None, **overrides: Any) -> PipelineConfig:
    """Build a config from env defaults, an optional JSON file and flag overrides."""
    set_vars = [v for v in _ENV_VARS if os.getenv(v)]
    logger.debug("Config env vars set: %s", ", ".join(set_vars) or "none")

    try:
        base = PipelineConfig.from_file(config_file) if config_file else PipelineConfig()
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {config_file} is not valid JSON: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Config file {config_file} has invalid values: {exc}") from exc
    return base.with_overrides(**overrides)
