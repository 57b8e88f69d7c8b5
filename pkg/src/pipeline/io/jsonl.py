"""
JSONL and JSON file helpers with atomic writes.

Every artifact is written to a temporary file in the destination directory
and renamed into place, so readers never observe a partial file.
"""

from __future__ import annotations

import json
import os
import tempfile
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

from ..core.errors import DataError
from ..logging.logging_config import get_logger

logger = get_logger(__name__)


@contextmanager
def atomic_open(path: str | Path, mode: str = "w") -> Iterator[IO[Any]]:
    """Open a temp file next to *path*; rename over *path* on clean exit."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    except OSError as exc:
        raise DataError(f"cannot write {target}: {exc}") from exc

    try:
        if "b" in mode:
            fh = os.fdopen(fd, mode)
        else:
            fh = os.fdopen(fd, mode, encoding="utf-8", newline="\n")
        with fh:
            yield fh
        os.replace(tmp_name, target)
    except OSError as exc:
        Path(tmp_name).unlink(missing_ok=True)
        raise DataError(f"cannot write {target}: {exc}") from exc
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def dumps_line(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False)


def write_jsonl(records: Iterable[dict[str, Any]], path: str | Path) -> int:
    """Write one JSON object per line; returns the number of lines."""
    count = 0
    with atomic_open(path) as fh:
        for record in records:
            fh.write(dumps_line(record))
            fh.write("\n")
            count += 1
    logger.debug("Wrote %d lines to %s", count, path)
    return count


def write_json(payload: Any, path: str | Path) -> Path:
    """Pretty JSON with sorted-insertion order preserved and a trailing newline."""
    with atomic_open(path) as fh:
        fh.write(json.dumps(payload, indent=2, ensure_ascii=False))
        fh.write("\n")
    return Path(path)


def iter_jsonl_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield (1-based line number, raw line) for non-blank lines."""
    p = Path(path)
    try:
        with p.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if stripped:
                    yield lineno, stripped
    except FileNotFoundError:
        raise DataError(f"file not found: {p}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {p}: {exc}") from exc


def read_jsonl(
    path: str | Path, error_cls: type[DataError] = DataError
) -> list[dict[str, Any]]:
    """Parse every line as a JSON object, raising *error_cls* with the line number."""
    records: list[dict[str, Any]] = []
    for lineno, line in iter_jsonl_lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise error_cls(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise error_cls(f"{path}:{lineno}: expected a JSON object")
        records.append(record)
    return records
