"""
Pipeline execution.

One entry point per command, each returning a plain dict with the results:

    run_build_paths   graph + notes → paths.jsonl, path_stats.json
    run_make_tasks    paths.jsonl → tasks/<kind>.jsonl, tasks_manifest.json
    run_evaluate      dataset + predictions → eval report JSON
    run_baseline_judge  dataset → lexical baseline predictions
    run_merge         two tensor bundles → merged bundle
    run_gradcheck     finite-difference sweep over one objective
    run_synth_corpus  synthetic graph + notes

Failures are reported through ``success`` / ``error`` / ``exit_code`` rather
than raised, so callers (the CLI) map them to process exit codes.

Per-note work runs on a thread pool; ``Executor.map`` keeps results in note
order and every note draws from its own seed substream, so outputs do not
depend on the thread count.
"""

from __future__ import annotations

import time
from collections import Counter
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from ..config.config_manager import TASK_KINDS, PipelineConfig
from ..logging.logging_config import get_logger
from ..utils.seeding import derive_seed
from .errors import ConfigError, ExitCode, KgpfError

logger = get_logger(__name__)

GRADCHECK_VOCABS = (2, 4, 8)
GRADCHECK_CONTEXTS = (1, 3)


def _guarded(stage: str, body: Callable[[], dict[str, Any]]) -> dict[str, Any]:
    """Run *body*, turning errors into a failed result dict."""
    t0 = time.time()
    try:
        result = body()
    except KgpfError as exc:
        logger.error("%s failed: %s", stage, exc)
        return _failure(str(exc), exc.exit_code, t0)
    except Exception as exc:  # noqa: BLE001
        logger.exception("%s failed unexpectedly: %s", stage, exc)
        return _failure(str(exc), ExitCode.INTERNAL, t0)
    total = time.time() - t0
    logger.info("%s complete (%.2fs)", stage, total)
    return {
        **result,
        "success": True,
        "error": None,
        "exit_code": int(ExitCode.OK),
        "execution_time": total,
    }


def _failure(error: str, exit_code: ExitCode, t0: float) -> dict[str, Any]:
    return {
        "success": False,
        "error": error,
        "exit_code": int(exit_code),
        "execution_time": time.time() - t0,
    }


def _require_valid(config: PipelineConfig, command: str) -> None:
    errors = config.validate(command)
    if errors:
        raise ConfigError("; ".join(errors))


def _map_notes(config: PipelineConfig, fn: Callable[[Any], Any], items: Sequence[Any]) -> list[Any]:
    if config.threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        return list(executor.map(fn, items))


# ---------------------------------------------------------------------------
# build-paths
# ---------------------------------------------------------------------------


def run_build_paths(config: PipelineConfig) -> dict[str, Any]:
    """Build labeled PathSets for every note.

    Returns a dict with:
        output_dir  – Path to the output folder
        paths_file  – Path of paths.jsonl
        stats_file  – Path of path_stats.json
        stats       – the statistics dict
    """
    from ..io.notes import load_notes
    from ..io.pathsets import write_pathsets
    from ..io.reports import PATHS_FILE, compute_path_stats, export_path_stats
    from .concept_matcher import build_index
    from .knowledge_graph import SemanticTypeFilter, load_graph
    from .path_engine import SamplingCaps, build_note_paths

    def body() -> dict[str, Any]:
        _require_valid(config, "build-paths")
        assert config.seed is not None
        output_dir = Path(config.output_path)
        logger.info("Building paths (seed=%d, threads=%d)", config.seed, config.threads)

        # ── Stage 1: Inputs ──────────────────────────────────────────────
        t0 = time.time()
        graph = load_graph(config.concepts_path, config.edges_path, undirected=config.undirected)
        index = build_index(graph, config.n_max, config.threshold)
        type_filter = SemanticTypeFilter.from_codes(config.semantic_types)
        notes = load_notes(config.notes_path)
        logger.info("Inputs ready: %d notes (%.2fs)", len(notes), time.time() - t0)

        # ── Stage 2: Per-note enumeration ────────────────────────────────
        t0 = time.time()
        caps = SamplingCaps(config.max_negatives_per_start, config.max_examples_per_note)
        root_seed = config.seed

        def one(note: Any) -> Any:
            return build_note_paths(
                graph,
                index,
                type_filter,
                note,
                derive_seed(root_seed, "paths", note.note_id),
                caps,
                config.max_hops,
            )

        pathsets = _map_notes(config, one, notes)
        stats = compute_path_stats(pathsets)
        logger.info(
            "Paths built: %d positives, %d negatives over %d notes (%.2fs)",
            stats["positives"],
            stats["negatives"],
            stats["notes_processed"],
            time.time() - t0,
        )
        if notes and stats["notes_processed"] == 0:
            logger.warning("No note produced paths; all %d notes were skipped", len(notes))

        # ── Stage 3: Export ──────────────────────────────────────────────
        paths_file = output_dir / PATHS_FILE
        write_pathsets(pathsets, paths_file)
        stats_file = export_path_stats(stats, output_dir, config.to_dict())
        return {
            "output_dir": output_dir,
            "paths_file": paths_file,
            "stats_file": stats_file,
            "stats": stats,
        }

    return _guarded("build-paths", body)


# ---------------------------------------------------------------------------
# make-tasks
# ---------------------------------------------------------------------------


def run_make_tasks(config: PipelineConfig) -> dict[str, Any]:
    """Emit one dataset per requested task kind plus a manifest.

    Returns a dict with output_dir, manifest_file, files ({kind: Path}) and
    counts ({kind: int}).
    """
    from ..eval.oracle import PathValidity, audit_dataset, verify_path_validity
    from ..io.jsonl import write_jsonl
    from ..io.notes import load_notes
    from ..io.pathsets import load_pathsets
    from ..io.reports import PAIRS_FILE, TASKS_DIR, export_tasks_manifest
    from .knowledge_graph import load_graph
    from .path_engine import PathSet
    from .task_builder import (
        AMBIGUOUS_SKIP_KEY,
        TaskKind,
        build_note_tasks,
        build_preference_pairs,
        write_dataset,
    )

    def body() -> dict[str, Any]:
        _require_valid(config, "make-tasks")
        assert config.seed is not None
        output_dir = Path(config.output_path)
        kinds = [TaskKind(t) for t in TASK_KINDS if t in config.tasks]
        logger.info("Making tasks %s (seed=%d)", ",".join(k.value for k in kinds), config.seed)

        graph = load_graph(config.concepts_path, config.edges_path, undirected=config.undirected)
        notes = load_notes(config.notes_path)
        pathsets = load_pathsets(config.resolved_paths_file)
        unknown = sorted(set(pathsets) - {n.note_id for n in notes})
        if unknown:
            logger.warning("Ignoring paths of %d note(s) absent from the notes file", len(unknown))
        if not pathsets:
            logger.warning("PathSet input is empty; task files will be empty")

        work = []
        for note in notes:
            ps = pathsets.get(note.note_id) or PathSet(note_id=note.note_id)
            ps.note_text = note.text
            ps.gold = [c for c in note.gold_diagnoses if c in graph]
            work.append(ps)

        root_seed = config.seed

        def one(ps: PathSet) -> tuple[dict[TaskKind, list[Any]], Counter[str]]:
            skipped: Counter[str] = Counter()
            gold = set(ps.gold)

            def is_valid(text: str) -> bool:
                return verify_path_validity(graph, gold, text) is PathValidity.VALID

            built = build_note_tasks(
                ps, kinds, root_seed, config.max_instances_per_note, skipped, is_valid
            )
            return built, skipped

        results = _map_notes(config, one, work)

        datasets: dict[TaskKind, list[Any]] = {kind: [] for kind in kinds}
        skipped_total: Counter[str] = Counter()
        for built, skipped in results:
            for kind in kinds:
                datasets[kind].extend(built[kind])
            skipped_total.update(skipped)

        audit: dict[str, Any] = {"enabled": config.audit_tasks}
        if config.audit_tasks:
            gold_by_note = {n.note_id: set(n.gold_diagnoses) for n in notes}
            report = audit_dataset(
                graph, (i for kind in kinds for i in datasets[kind]), gold_by_note
            )
            audit.update(checked=report.checked, disagreements=len(report.disagreements))

        tasks_dir = output_dir / TASKS_DIR
        files: dict[str, Path] = {}
        counts: dict[str, int] = {}
        for kind in kinds:
            path = tasks_dir / f"{kind.value}.jsonl"
            counts[kind.value] = write_dataset(datasets[kind], path)
            files[kind.value] = path
            logger.info("%s: %d instances", kind.value, counts[kind.value])

        pairs_count = None
        if config.emit_preference_pairs and TaskKind.P2 in datasets:
            pairs_count = write_jsonl(
                build_preference_pairs(datasets[TaskKind.P2]), tasks_dir / PAIRS_FILE
            )
            files["pairs"] = tasks_dir / PAIRS_FILE

        manifest = {
            "seed": config.seed,
            "notes": len(notes),
            "tasks": {
                kind.value: {
                    "file": f"{TASKS_DIR}/{kind.value}.jsonl",
                    "count": counts[kind.value],
                    "skipped": skipped_total.get(kind.value, 0),
                }
                for kind in kinds
            },
            "ambiguous_paths_dropped": skipped_total.get(AMBIGUOUS_SKIP_KEY, 0),
            "preference_pairs": pairs_count,
            "audit": audit,
            "instructions": {k.value: config.instructions.get(k.value) for k in kinds},
            "config": config.to_dict(),
        }
        manifest_file = export_tasks_manifest(manifest, output_dir)
        return {
            "output_dir": output_dir,
            "manifest_file": manifest_file,
            "files": files,
            "counts": counts,
            "manifest": manifest,
        }

    return _guarded("make-tasks", body)


# ---------------------------------------------------------------------------
# evaluate / baseline-judge
# ---------------------------------------------------------------------------


def run_baseline_judge(dataset: str | Path, out: str | Path) -> dict[str, Any]:
    """Write lexical baseline predictions for a selection-task dataset."""
    from ..eval.judge import judge_dataset
    from ..io.jsonl import write_jsonl
    from .task_builder import read_dataset

    def body() -> dict[str, Any]:
        instances = read_dataset(dataset)
        count = write_jsonl(judge_dataset(instances), out)
        logger.info("Baseline judged %d instances", count)
        return {"predictions_file": Path(out), "count": count}

    return _guarded("baseline-judge", body)


def run_evaluate(
    dataset: str | Path,
    predictions: str | Path | None,
    metric: str,
    out: str | Path,
    *,
    baseline: bool = False,
) -> dict[str, Any]:
    """Score predictions (or the lexical baseline's) and write the report.

    Returns a dict with report (the EvalReport dict) and report_file.
    """
    from ..eval.evaluation import evaluate_predictions
    from ..io.reports import BASELINE_PREDICTIONS_FILE, export_eval_report

    def body() -> dict[str, Any]:
        preds = predictions
        if baseline:
            preds = Path(out).parent / BASELINE_PREDICTIONS_FILE
            judged = run_baseline_judge(dataset, preds)
            if not judged["success"]:
                raise _reraise(judged)
        if preds is None:
            raise ConfigError("predictions are required unless --baseline is given")

        report = evaluate_predictions(dataset, preds, metric).to_dict()
        report_file = export_eval_report(report, Path(out))
        return {"report": report, "report_file": report_file, "predictions_file": Path(preds)}

    return _guarded("evaluate", body)


# ---------------------------------------------------------------------------
# merge
# ---------------------------------------------------------------------------


def run_merge(
    a: str | Path,
    b: str | Path,
    out: str | Path,
    lam: float,
    *,
    doge: bool = False,
    exclude: Sequence[str] = (),
) -> dict[str, Any]:
    """Merge two bundles; labels in the provenance are the file stems."""
    from ..io.tensor_store import load_bundle, save_bundle
    from ..merge.model_merge import doge_merge, weighted_merge

    def body() -> dict[str, Any]:
        bundle_a, bundle_b = load_bundle(a), load_bundle(b)
        labels = (Path(a).stem, Path(b).stem)
        if doge:
            merged = doge_merge(bundle_a, bundle_b, exclude=exclude, labels=labels)
        else:
            merged = weighted_merge(bundle_a, bundle_b, lam, exclude=exclude, labels=labels)
        save_bundle(merged, out)
        return {"output": Path(out), "tensors": len(merged), "metadata": dict(merged.metadata)}

    return _guarded("merge", body)


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def run_gradcheck(
    op: str,
    seeds: int = 20,
    tol: float = 1e-4,
    h: float = 1e-5,
    beta: float = 0.1,
    out: str | Path | None = None,
) -> dict[str, Any]:
    """Sweep seeds × vocab {2,4,8} × contexts {1,3}; report the worst case."""
    from ..io.reports import export_gradcheck_report
    from ..objectives.gradcheck import finite_diff_gradcheck, make_loss_problem

    def body() -> dict[str, Any]:
        worst: dict[str, Any] | None = None
        checks = failures = 0
        for seed in range(seeds):
            for vocab in GRADCHECK_VOCABS:
                for contexts in GRADCHECK_CONTEXTS:
                    rng = np.random.default_rng(derive_seed(seed, "gradcheck", op, vocab, contexts))
                    problem = make_loss_problem(op, rng, vocab, contexts, beta=beta)
                    rep = finite_diff_gradcheck(problem.loss_fn, problem.policy, h, tol, op=op)
                    checks += 1
                    failures += not rep.passed
                    if worst is None or rep.max_rel_err > worst["max_rel_err"]:
                        worst = {
                            **rep.to_dict(),
                            "seed": seed,
                            "vocab": vocab,
                            "contexts": contexts,
                        }
        report = {
            "op": op,
            "max_rel_err": worst["max_rel_err"] if worst else 0.0,
            "worst_index": worst["worst_index"] if worst else None,
            "pass": failures == 0,
            "checks": checks,
            "failures": failures,
            "tol": tol,
            "worst_case": worst,
        }
        logger.info(
            "gradcheck %s: %d checks, %d failures, max rel err %.3e",
            op,
            checks,
            failures,
            report["max_rel_err"],
        )
        report_file = export_gradcheck_report(report, Path(out)) if out else None
        return {"report": report, "report_file": report_file}

    return _guarded("gradcheck", body)


# ---------------------------------------------------------------------------
# synth-corpus
# ---------------------------------------------------------------------------


def run_synth_corpus(out_dir: str | Path, seed: int, num_notes: int) -> dict[str, Any]:
    from ..utils.synthetic import write_synthetic_corpus

    def body() -> dict[str, Any]:
        return {"files": write_synthetic_corpus(out_dir, seed, num_notes)}

    return _guarded("synth-corpus", body)


def _reraise(result: dict[str, Any]) -> KgpfError:
    err = KgpfError(result["error"])
    err.exit_code = ExitCode(result["exit_code"])
    return err
