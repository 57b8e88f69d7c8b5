"""
Task-formulation datasets built from labeled PathSets.

Five task kinds are produced from every note:

- ``p10``  – 10 candidate paths, exactly one positive
- ``p2``   – one positive and one negative
- ``pn10`` – 10 candidates, 1 to 5 positives; the target lists all of them
- ``nhp``  – next-hop prediction from a partial path ending in a relation
- ``pc``   – path completion from the start concept name

Builders are pure functions of (PathSet, seed).
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from jsonschema import Draft7Validator

from ..config.config_manager import DEFAULT_INSTRUCTIONS, TASK_KINDS
from ..io.jsonl import read_jsonl, write_jsonl
from ..logging.logging_config import get_logger
from ..utils.seeding import derive_seed
from .errors import DatasetFormatError
from .knowledge_graph import ARROW, BAR
from .path_engine import KgPath, PathSet, format_path

logger = get_logger(__name__)

NUM_CANDIDATES = 10
PN10_MAX_POSITIVES = 5
AMBIGUOUS_SKIP_KEY = "ambiguous_paths"


class TaskKind(str, Enum):
    P10 = "p10"
    P2 = "p2"
    PN10 = "pn10"
    NHP = "nhp"
    PC = "pc"

    @property
    def is_selection(self) -> bool:
        return self in (TaskKind.P10, TaskKind.P2, TaskKind.PN10)


@dataclass
class TaskInstance:
    """One dataset row. Field order is the serialized key order."""

    task: TaskKind
    note_id: str
    note_text: str
    candidates: list[str] = field(default_factory=list)
    partial_path: str | None = None
    target: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def positive_indices(self) -> list[int]:
        return list(self.meta.get("positive_indices", []))

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task.value,
            "note_id": self.note_id,
            "note_text": self.note_text,
            "candidates": list(self.candidates),
            "partial_path": self.partial_path,
            "target": self.target,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TaskInstance:
        return cls(
            task=TaskKind(data["task"]),
            note_id=data["note_id"],
            note_text=data["note_text"],
            candidates=list(data.get("candidates") or []),
            partial_path=data.get("partial_path"),
            target=data["target"],
            meta=dict(data.get("meta") or {}),
        )


DATASET_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["task", "note_id", "note_text", "candidates", "partial_path", "target", "meta"],
    "properties": {
        "task": {"enum": TASK_KINDS},
        "note_id": {"type": "string"},
        "note_text": {"type": "string"},
        "candidates": {"type": "array", "items": {"type": "string"}},
        "partial_path": {"type": ["string", "null"]},
        "target": {"type": "string"},
        "meta": {"type": "object"},
    },
}

_validator = Draft7Validator(DATASET_SCHEMA)


# ---------------------------------------------------------------------------
# Path-selection tasks
# ---------------------------------------------------------------------------


def build_p10(
    pathset: PathSet,
    seed: int,
    limit: int | None = None,
    skipped: Counter[str] | None = None,
) -> list[TaskInstance]:
    """One 10-candidate instance per positive path, 9 sampled negatives each."""
    positives = _limited(pathset.positives, limit)
    needed = NUM_CANDIDATES - 1
    if len(pathset.negatives) < needed:
        _count_skip(skipped, TaskKind.P10, len(positives))
        return []

    rng = np.random.default_rng(seed)
    instances = []
    for positive in positives:
        picks = rng.choice(len(pathset.negatives), size=needed, replace=False)
        pool = [positive, *(pathset.negatives[i] for i in picks)]
        instances.append(_selection_instance(TaskKind.P10, pathset, pool, 1, rng, seed))
    return instances


def build_p2(
    pathset: PathSet,
    seed: int,
    limit: int | None = None,
    skipped: Counter[str] | None = None,
) -> list[TaskInstance]:
    """Pair every positive with one sampled negative."""
    positives = _limited(pathset.positives, limit)
    if not pathset.negatives:
        _count_skip(skipped, TaskKind.P2, len(positives))
        return []

    rng = np.random.default_rng(seed)
    instances = []
    for positive in positives:
        negative = pathset.negatives[int(rng.integers(len(pathset.negatives)))]
        instances.append(
            _selection_instance(TaskKind.P2, pathset, [positive, negative], 1, rng, seed)
        )
    return instances


def build_pn10(
    pathset: PathSet,
    seed: int,
    limit: int | None = None,
    skipped: Counter[str] | None = None,
) -> list[TaskInstance]:
    """Multi-answer instances anchored on each positive.

    k = min(#positives, uniform integer in [1, 5]) positives are mixed with
    10 - k negatives. When negatives run short, k is raised to the smallest
    value that fills 10 slots, 10 - #negatives; if that exceeds
    min(#positives, 5) the anchor is skipped.
    """
    positives = pathset.positives
    negatives = pathset.negatives
    rng = np.random.default_rng(seed)
    instances = []
    for anchor_idx, anchor in enumerate(_limited(positives, limit)):
        k = min(len(positives), int(rng.integers(1, PN10_MAX_POSITIVES + 1)))
        # fewest positives that still fill every slot
        k = max(k, NUM_CANDIDATES - len(negatives))
        if k > min(len(positives), PN10_MAX_POSITIVES):
            _count_skip(skipped, TaskKind.PN10, 1)
            continue

        others = [i for i in range(len(positives)) if i != anchor_idx]
        extra = rng.choice(len(others), size=k - 1, replace=False) if k > 1 else []
        chosen = [anchor, *(positives[others[i]] for i in extra)]
        picks = rng.choice(len(negatives), size=NUM_CANDIDATES - k, replace=False)
        pool = chosen + [negatives[i] for i in picks]
        instances.append(_selection_instance(TaskKind.PN10, pathset, pool, k, rng, seed))
    return instances


def _selection_instance(
    kind: TaskKind,
    pathset: PathSet,
    pool: Sequence[KgPath],
    num_positives: int,
    rng: np.random.Generator,
    seed: int,
) -> TaskInstance:
    """Shuffle *pool*, whose first *num_positives* entries are positives."""
    order = rng.permutation(len(pool))
    candidates = [format_path(pool[i]) for i in order]
    positive_indices = [pos for pos, i in enumerate(order) if i < num_positives]
    target = "\n".join(candidates[i] for i in positive_indices)
    return TaskInstance(
        task=kind,
        note_id=pathset.note_id,
        note_text=pathset.note_text,
        candidates=candidates,
        partial_path=None,
        target=target,
        meta={
            "num_positives": num_positives,
            "seed": seed,
            "positive_indices": positive_indices,
        },
    )


# ---------------------------------------------------------------------------
# Generative tasks
# ---------------------------------------------------------------------------


def build_nhp(pathset: PathSet, seed: int, limit: int | None = None) -> list[TaskInstance]:
    """Truncate each positive right after a uniformly chosen relation."""
    rng = np.random.default_rng(seed)
    instances = []
    for path in _limited(pathset.positives, limit):
        j = int(rng.integers(path.hops))
        partial = path.names[0] + "".join(
            f"{ARROW}{path.relations[i]}{BAR}{path.names[i + 1]}" for i in range(j)
        )
        instances.append(
            TaskInstance(
                task=TaskKind.NHP,
                note_id=pathset.note_id,
                note_text=pathset.note_text,
                partial_path=f"{partial}{ARROW}{path.relations[j]}",
                target=f"{BAR}{path.names[j + 1]}",
                meta={"num_positives": 1, "seed": seed, "hop_index": j},
            )
        )
    return instances


def build_pc(pathset: PathSet, limit: int | None = None) -> list[TaskInstance]:
    """Start concept name as the prompt; the rest of the path as the target."""
    instances = []
    for path in _limited(pathset.positives, limit):
        start = path.names[0]
        instances.append(
            TaskInstance(
                task=TaskKind.PC,
                note_id=pathset.note_id,
                note_text=pathset.note_text,
                partial_path=start,
                target=format_path(path)[len(start) :],
                meta={"num_positives": 1, "seed": None},
            )
        )
    return instances


# ---------------------------------------------------------------------------
# Per-note orchestration
# ---------------------------------------------------------------------------


def drop_ambiguous_paths(
    pathset: PathSet, is_valid: Callable[[str], bool] | None = None
) -> tuple[PathSet, int]:
    """Keep one path per rendering and drop negatives that render as a valid path.

    Concepts may share a preferred name, so a negative can print exactly like a
    positive, or like some other gold-reaching walk that *is_valid* accepts.
    Such a negative cannot be told apart from a positive in a candidate list.
    Returns the cleaned PathSet and the number of paths removed.
    """
    positives: dict[str, KgPath] = {}
    for path in pathset.positives:
        positives.setdefault(format_path(path), path)

    negatives: dict[str, KgPath] = {}
    for path in pathset.negatives:
        text = format_path(path)
        if text in positives or text in negatives:
            continue
        if is_valid is not None and is_valid(text):
            continue
        negatives[text] = path

    removed = pathset.size - len(positives) - len(negatives)
    if removed:
        logger.debug("Note %s: dropped %d ambiguous path(s)", pathset.note_id, removed)
    cleaned = replace(
        pathset, positives=list(positives.values()), negatives=list(negatives.values())
    )
    return cleaned, removed


def split_instance_budget(total: int, kinds: Sequence[TaskKind]) -> dict[TaskKind, int]:
    """Even split of a per-note budget; the remainder goes to earlier kinds."""
    if not kinds:
        return {}
    base, remainder = divmod(total, len(kinds))
    return {kind: base + (1 if i < remainder else 0) for i, kind in enumerate(kinds)}


def build_note_tasks(
    pathset: PathSet,
    kinds: Sequence[TaskKind],
    root_seed: int,
    max_instances: int,
    skipped: Counter[str] | None = None,
    is_valid: Callable[[str], bool] | None = None,
) -> dict[TaskKind, list[TaskInstance]]:
    """Every requested task for one note, each from its own seed substream.

    Ambiguous paths are removed first (see ``drop_ambiguous_paths``) and
    counted in *skipped* under ``AMBIGUOUS_SKIP_KEY``.
    """
    pathset, removed = drop_ambiguous_paths(pathset, is_valid)
    if removed and skipped is not None:
        skipped[AMBIGUOUS_SKIP_KEY] += removed
    budget = split_instance_budget(max_instances, kinds)
    out: dict[TaskKind, list[TaskInstance]] = {}
    for kind in kinds:
        seed = derive_seed(root_seed, "tasks", kind.value, pathset.note_id)
        limit = budget[kind]
        if kind is TaskKind.P10:
            out[kind] = build_p10(pathset, seed, limit, skipped)
        elif kind is TaskKind.P2:
            out[kind] = build_p2(pathset, seed, limit, skipped)
        elif kind is TaskKind.PN10:
            out[kind] = build_pn10(pathset, seed, limit, skipped)
        elif kind is TaskKind.NHP:
            out[kind] = build_nhp(pathset, seed, limit)
        else:
            out[kind] = build_pc(pathset, limit)
    return out


# ---------------------------------------------------------------------------
# Supplementary views
# ---------------------------------------------------------------------------


def build_preference_pairs(instances: Iterable[TaskInstance]) -> list[dict[str, str]]:
    """Chosen/rejected rows from P2 instances, the shape preference training reads."""
    pairs = []
    for inst in instances:
        if inst.task is not TaskKind.P2:
            continue
        pos = inst.positive_indices[0]
        pairs.append(
            {
                "note_id": inst.note_id,
                "note_text": inst.note_text,
                "chosen": inst.candidates[pos],
                "rejected": inst.candidates[1 - pos],
            }
        )
    return pairs


def render_instruction(
    instance: TaskInstance, templates: Mapping[str, str] | None = None
) -> str:
    """Fill the instruction template of the instance's task."""
    templates = templates or DEFAULT_INSTRUCTIONS
    template = templates.get(instance.task.value, DEFAULT_INSTRUCTIONS[instance.task.value])
    return template.format(
        partial_path=instance.partial_path or "",
        num_candidates=len(instance.candidates),
    )


# ---------------------------------------------------------------------------
# Dataset I/O
# ---------------------------------------------------------------------------


def write_dataset(instances: Iterable[TaskInstance], out: str | Path) -> int:
    """Write instances as JSONL in fixed field order; returns lines written."""
    return write_jsonl((inst.to_dict() for inst in instances), out)


def read_dataset(path: str | Path) -> list[TaskInstance]:
    instances = []
    for lineno, record in enumerate(read_jsonl(path, DatasetFormatError), start=1):
        error = next(iter(sorted(_validator.iter_errors(record), key=str)), None)
        if error is not None:
            raise DatasetFormatError(f"{path}: instance #{lineno}: {error.message}")
        instances.append(TaskInstance.from_dict(record))
    return instances


def _limited(paths: Sequence[KgPath], limit: int | None) -> Sequence[KgPath]:
    return paths if limit is None else paths[:limit]


def _count_skip(skipped: Counter[str] | None, kind: TaskKind, n: int) -> None:
    if n and skipped is not None:
        skipped[kind.value] += n
