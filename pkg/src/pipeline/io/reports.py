"""
Run reports written next to the pipeline outputs.

Provides the JSON exports of each command:
1. Path statistics (build-paths)
2. Task manifest (make-tasks)
3. Evaluation report (evaluate)
4. Gradient-check report (gradcheck)

Reports carry no timestamps so identical runs produce identical bytes.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

from ..core.path_engine import PathSet
from ..logging.logging_config import get_logger
from .jsonl import write_json

logger = get_logger(__name__)

PATHS_FILE = "paths.jsonl"
PATH_STATS_FILE = "path_stats.json"
TASKS_DIR = "tasks"
TASKS_MANIFEST_FILE = "tasks_manifest.json"
PAIRS_FILE = "pairs.jsonl"
EVAL_REPORT_FILE = "eval_report.json"
BASELINE_PREDICTIONS_FILE = "baseline_predictions.jsonl"
GRADCHECK_REPORT_FILE = "gradcheck_report.json"


def compute_path_stats(pathsets: Iterable[PathSet]) -> dict[str, Any]:
    """Counts over a build-paths run."""
    pathsets = list(pathsets)
    kept = [ps for ps in pathsets if not ps.skipped]
    reasons = Counter(ps.skip_reason for ps in pathsets if ps.skipped)
    starts = {cui for ps in kept for cui in ps.start_concepts}
    positives = sum(len(ps.positives) for ps in kept)
    negatives = sum(len(ps.negatives) for ps in kept)
    return {
        "notes_total": len(pathsets),
        "notes_processed": len(kept),
        "notes_skipped": len(pathsets) - len(kept),
        "skip_reasons": dict(sorted(reasons.items())),
        "positives": positives,
        "negatives": negatives,
        "examples": positives + negatives,
        "unique_start_concepts": len(starts),
        "mean_examples_per_note": round((positives + negatives) / len(kept), 4) if kept else 0.0,
        "max_examples_per_note": max((ps.size for ps in kept), default=0),
    }


def export_path_stats(
    stats: Mapping[str, Any], output_dir: Path, config: Mapping[str, Any] | None = None
) -> Path:
    """Write path statistics (with the echoed configuration) as JSON."""
    payload = dict(stats)
    if config is not None:
        payload["config"] = dict(config)
    path = write_json(payload, output_dir / PATH_STATS_FILE)
    logger.info(
        "Exported path stats: %d notes processed, %d skipped",
        stats.get("notes_processed", 0),
        stats.get("notes_skipped", 0),
    )
    return path


def export_tasks_manifest(manifest: Mapping[str, Any], output_dir: Path) -> Path:
    path = write_json(dict(manifest), output_dir / TASKS_MANIFEST_FILE)
    logger.info("Exported task manifest to %s", path.name)
    return path


def export_eval_report(report: Mapping[str, Any], path: Path) -> Path:
    """Write an evaluation report JSON."""
    written = write_json(dict(report), path)
    logger.info("Exported evaluation report to %s", written.name)
    return written


def export_gradcheck_report(report: Mapping[str, Any], path: Path) -> Path:
    written = write_json(dict(report), path)
    logger.info("Exported gradcheck report to %s", written.name)
    return written
