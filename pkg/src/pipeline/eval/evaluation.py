"""
Corpus evaluation of predictions against a task dataset.

Predictions are JSONL lines ``{"index": int, "prediction": str}`` or
``{"note_id": str, "prediction": str}``. A note id matches that note's
instances in dataset order (the k-th prediction for a note scores its k-th
instance). Lines that are not JSON objects with a string ``prediction`` are
malformed: they are counted and their slot is scored as an empty prediction.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from ..core.errors import PredictionFormatError
from ..core.task_builder import TaskInstance, read_dataset
from ..io.jsonl import iter_jsonl_lines
from ..logging.logging_config import get_logger
from .metrics import Metric, score

logger = get_logger(__name__)


@dataclass
class EvalReport:
    """Corpus means are percentages of the mean per-instance score."""

    metric: str
    corpus_f1: float
    corpus_precision: float
    corpus_recall: float
    n: int
    n_malformed: int = 0
    n_empty: int = 0
    per_instance: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "corpus_f1": self.corpus_f1,
            "corpus_precision": self.corpus_precision,
            "corpus_recall": self.corpus_recall,
            "n": self.n,
            "n_malformed": self.n_malformed,
            "n_empty": self.n_empty,
            "per_instance": self.per_instance,
        }


def score_predictions(
    instances: Sequence[TaskInstance],
    predictions: Sequence[str],
    metric: Metric | str,
    malformed: Sequence[bool] | None = None,
) -> EvalReport:
    """Score aligned predictions; newlines are flattened before scoring."""
    metric = Metric(metric)
    if len(predictions) != len(instances):
        raise PredictionFormatError(
            f"{len(predictions)} predictions for {len(instances)} dataset instances"
        )
    flags = list(malformed) if malformed is not None else [False] * len(instances)

    rows = []
    for i, (inst, pred) in enumerate(zip(instances, predictions, strict=True)):
        s = score(metric, _flatten(pred), _flatten(inst.target))
        rows.append(
            {
                "index": i,
                "note_id": inst.note_id,
                "task": inst.task.value,
                "precision": s.precision,
                "recall": s.recall,
                "f1": s.f1,
                "malformed": flags[i],
                "empty": not pred.strip(),
            }
        )

    df = pd.DataFrame(
        rows,
        columns=["index", "note_id", "task", "precision", "recall", "f1", "malformed", "empty"],
    )
    if df.empty:
        means = {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    else:
        means = {col: float(df[col].mean()) * 100.0 for col in ("precision", "recall", "f1")}

    return EvalReport(
        metric=metric.value,
        corpus_f1=means["f1"],
        corpus_precision=means["precision"],
        corpus_recall=means["recall"],
        n=len(df),
        n_malformed=int(df["malformed"].sum()),
        n_empty=int(df["empty"].sum()),
        per_instance=rows,
    )


def evaluate_predictions(
    dataset: str | Path, predictions: str | Path, metric: Metric | str
) -> EvalReport:
    """Align a predictions file with its dataset and score it."""
    instances = read_dataset(dataset)
    aligned, malformed = align_predictions(instances, predictions)
    report = score_predictions(instances, aligned, metric, malformed)
    logger.info(
        "Evaluated %d instances (%s): F1 %.2f, %d malformed",
        report.n,
        report.metric,
        report.corpus_f1,
        report.n_malformed,
    )
    return report


def align_predictions(
    instances: Sequence[TaskInstance], predictions: str | Path
) -> tuple[list[str], list[bool]]:
    """Map prediction lines onto dataset indices."""
    lines = list(iter_jsonl_lines(predictions))
    if len(lines) != len(instances):
        raise PredictionFormatError(
            f"{predictions}: {len(lines)} prediction lines for {len(instances)} dataset instances"
        )

    by_note: dict[str, deque[int]] = defaultdict(deque)
    for i, inst in enumerate(instances):
        by_note[inst.note_id].append(i)

    aligned: list[str | None] = [None] * len(instances)
    n_malformed = 0
    for lineno, line in lines:
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            record = None
        if not isinstance(record, dict) or not isinstance(record.get("prediction"), str):
            n_malformed += 1
            logger.warning("%s:%d: malformed prediction line", predictions, lineno)
            continue

        idx = _resolve_index(record, by_note, len(instances), predictions, lineno)
        if aligned[idx] is not None:
            raise PredictionFormatError(f"{predictions}:{lineno}: duplicate prediction for {idx}")
        aligned[idx] = record["prediction"]

    # Line count equals dataset size, so the unclaimed slots are the malformed lines
    malformed = [p is None for p in aligned]
    logger.debug("Aligned %d predictions, %d malformed", len(aligned), n_malformed)
    return [p or "" for p in aligned], malformed


def _resolve_index(
    record: dict[str, Any],
    by_note: dict[str, deque[int]],
    n: int,
    source: str | Path,
    lineno: int,
) -> int:
    if "index" in record:
        idx = record["index"]
        if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < n:
            raise PredictionFormatError(f"{source}:{lineno}: index {idx!r} out of range")
        return idx
    if "note_id" in record:
        queue = by_note.get(record["note_id"])
        if not queue:
            raise PredictionFormatError(
                f"{source}:{lineno}: no remaining instance for note_id {record['note_id']!r}"
            )
        return queue.popleft()
    raise PredictionFormatError(f"{source}:{lineno}: missing key ('index' or 'note_id')")


def _flatten(text: str) -> str:
    return text.replace("\n", " ")
