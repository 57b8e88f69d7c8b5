"""Lexical baseline judge for the path-selection tasks."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from ..core.errors import PathParseError, UnsupportedTaskError
from ..core.path_engine import split_path
from ..core.task_builder import TaskInstance, TaskKind
from .metrics import rouge_1


def candidate_scores(instance: TaskInstance) -> list[float]:
    """ROUGE-1 F1 of each candidate's concept names against the note text."""
    scores = []
    for candidate in instance.candidates:
        try:
            names, _ = split_path(candidate)
        except PathParseError:
            scores.append(0.0)
            continue
        scores.append(rouge_1(" ".join(names), instance.note_text).f1)
    return scores


def lexical_baseline_judge(instance: TaskInstance) -> str:
    """Pick candidates whose concept names overlap the note most.

    P10/P2 return the argmax candidate (lowest index on ties). PN10 returns,
    newline-joined in candidate order, every candidate scoring strictly above
    the median, or the argmax when none does.
    """
    if not instance.task.is_selection:
        raise UnsupportedTaskError(
            f"lexical baseline judge does not support task '{instance.task.value}'"
        )
    if not instance.candidates:
        return ""

    scores = np.asarray(candidate_scores(instance))
    best = int(np.argmax(scores))
    if instance.task is not TaskKind.PN10:
        return instance.candidates[best]

    median = float(np.median(scores))
    chosen = [c for c, s in zip(instance.candidates, scores, strict=True) if s > median]
    return "\n".join(chosen) if chosen else instance.candidates[best]


def judge_dataset(instances: Iterable[TaskInstance]) -> list[dict[str, object]]:
    """Prediction records ``{"index", "prediction"}`` for a whole dataset."""
    return [
        {"index": i, "prediction": lexical_baseline_judge(inst)}
        for i, inst in enumerate(instances)
    ]
