"""
PathSet JSONL serialization.

One line per labeled path::

    {"note_id", "path", "label", "hops", "start_cui", "terminal_cui",
     "concept_cuis", "relations"}

Positives of a note precede its negatives. Skipped notes produce no lines.
"""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path
from typing import Any

from jsonschema import Draft7Validator

from ..core.errors import DatasetFormatError, PathParseError
from ..core.path_engine import KgPath, PathLabel, PathSet, format_path, split_path
from ..logging.logging_config import get_logger
from .jsonl import read_jsonl, write_jsonl

logger = get_logger(__name__)

PATH_LINE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": [
        "note_id",
        "path",
        "label",
        "hops",
        "start_cui",
        "terminal_cui",
        "concept_cuis",
        "relations",
    ],
    "properties": {
        "note_id": {"type": "string"},
        "path": {"type": "string", "minLength": 1},
        "label": {"enum": [label.value for label in PathLabel]},
        "hops": {"type": "integer", "minimum": 1},
        "start_cui": {"type": "string"},
        "terminal_cui": {"type": "string"},
        "concept_cuis": {"type": "array", "items": {"type": "string"}, "minItems": 2},
        "relations": {"type": "array", "items": {"type": "string"}, "minItems": 1},
    },
}

_validator = Draft7Validator(PATH_LINE_SCHEMA)


def path_record(path: KgPath) -> dict[str, Any]:
    return {
        "note_id": path.note_id,
        "path": format_path(path),
        "label": path.label.value if path.label else None,
        "hops": path.hops,
        "start_cui": path.start,
        "terminal_cui": path.terminal,
        "concept_cuis": list(path.concepts),
        "relations": list(path.relations),
    }


def pathset_records(pathsets: Iterable[PathSet]) -> Iterable[dict[str, Any]]:
    for pathset in pathsets:
        for path in (*pathset.positives, *pathset.negatives):
            yield path_record(path)


def write_pathsets(pathsets: Iterable[PathSet], path: str | Path) -> int:
    """Write every labeled path of *pathsets*; returns the number of lines."""
    return write_jsonl(pathset_records(pathsets), path)


def load_pathsets(path: str | Path) -> dict[str, PathSet]:
    """Group the lines of a PathSet JSONL file back into PathSets by note id.

    Notes keep first-appearance order; start concepts are rebuilt from the
    paths in order. Note text and gold are not stored and stay empty.
    """
    pathsets: dict[str, PathSet] = {}
    for lineno, record in enumerate(read_jsonl(path, DatasetFormatError), start=1):
        error = next(iter(sorted(_validator.iter_errors(record), key=str)), None)
        if error is not None:
            raise DatasetFormatError(f"{path}: path #{lineno}: {error.message}")

        try:
            names, relations = split_path(record["path"])
        except PathParseError as exc:
            raise DatasetFormatError(f"{path}: path #{lineno}: {exc}") from exc
        concepts = tuple(record["concept_cuis"])
        if tuple(relations) != tuple(record["relations"]) or len(names) != len(concepts):
            raise DatasetFormatError(
                f"{path}: path #{lineno}: path string disagrees with concept_cuis/relations"
            )

        note_id = record["note_id"]
        pathset = pathsets.setdefault(note_id, PathSet(note_id=note_id))
        kg_path = KgPath(
            concepts=concepts,
            relations=tuple(relations),
            names=tuple(names),
            label=PathLabel(record["label"]),
            note_id=note_id,
        )
        if kg_path.label is PathLabel.POSITIVE:
            pathset.positives.append(kg_path)
        else:
            pathset.negatives.append(kg_path)
        if kg_path.start not in pathset.start_concepts:
            pathset.start_concepts.append(kg_path.start)

    logger.info("Loaded %d path sets from %s", len(pathsets), Path(path).name)
    return pathsets
