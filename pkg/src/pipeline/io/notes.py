"""Clinical note records: ``{"note_id", "text", "gold_diagnoses"}`` per JSONL line."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from jsonschema import Draft7Validator

from ..core.errors import NoteFormatError
from ..logging.logging_config import get_logger
from .jsonl import read_jsonl, write_jsonl

logger = get_logger(__name__)

NOTE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["note_id", "text", "gold_diagnoses"],
    "properties": {
        "note_id": {"type": "string", "minLength": 1},
        "text": {"type": "string"},
        "gold_diagnoses": {"type": "array", "items": {"type": "string", "minLength": 1}},
    },
}

_validator = Draft7Validator(NOTE_SCHEMA)


@dataclass(frozen=True, slots=True)
class ClinicalNote:
    note_id: str
    text: str
    gold_diagnoses: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "note_id": self.note_id,
            "text": self.text,
            "gold_diagnoses": list(self.gold_diagnoses),
        }


def load_notes(path: str | Path) -> list[ClinicalNote]:
    """Read and validate a notes JSONL file. Duplicate note ids are rejected."""
    notes: list[ClinicalNote] = []
    seen: set[str] = set()
    for lineno, record in enumerate(read_jsonl(path, NoteFormatError), start=1):
        error = next(iter(sorted(_validator.iter_errors(record), key=str)), None)
        if error is not None:
            where = "/".join(str(p) for p in error.absolute_path) or "record"
            raise NoteFormatError(f"{path}: note #{lineno}: {where}: {error.message}")
        note_id = record["note_id"]
        if note_id in seen:
            raise NoteFormatError(f"{path}: duplicate note_id '{note_id}'")
        seen.add(note_id)
        notes.append(
            ClinicalNote(
                note_id=note_id,
                text=record["text"],
                gold_diagnoses=tuple(record["gold_diagnoses"]),
            )
        )
    logger.info("Loaded %d notes from %s", len(notes), Path(path).name)
    return notes


def write_notes(notes: Iterable[ClinicalNote], path: str | Path) -> int:
    return write_jsonl((n.to_dict() for n in notes), path)
