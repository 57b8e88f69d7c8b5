#!/usr/bin/env python3
"""
KG Path Forge - command line interface

Builds knowledge-graph path supervision from clinical notes, emits the task
datasets, scores predictions, merges tensor bundles and verifies objective
gradients. Every command is reproducible from one config file plus a seed.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal
invariant violation.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import click
from rich.console import Console

from src.__version__ import __version__
from src.pipeline.config.config_manager import TASK_KINDS, PipelineConfig, load_config
from src.pipeline.core.errors import ConfigError, ExitCode
from src.pipeline.core.pipeline import (
    run_baseline_judge,
    run_build_paths,
    run_evaluate,
    run_gradcheck,
    run_make_tasks,
    run_merge,
    run_synth_corpus,
)
from src.pipeline.io.reports import (
    BASELINE_PREDICTIONS_FILE,
    EVAL_REPORT_FILE,
    GRADCHECK_REPORT_FILE,
)
from src.pipeline.logging.logging_config import get_logger, setup_logging
from src.pipeline.objectives.gradcheck import GRADCHECK_OPS

console = Console(stderr=True)
logger = get_logger("cli")

CLI_HELP = f"""KG Path Forge: diagnostic path supervision toolkit (v{__version__}).

Typical flow: build-paths → make-tasks → evaluate. Global options apply to
every subcommand; flags override the --config file, which overrides KGPF_*
environment variables.
"""


class KgpfGroup(click.Group):
    """Click group whose usage errors exit with status 1."""

    def make_context(self, *args: Any, **kwargs: Any) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = int(ExitCode.USAGE)
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = int(ExitCode.USAGE)
            raise


@click.group(
    cls=KgpfGroup,
    context_settings={"help_option_names": ["-h", "--help"]},
    no_args_is_help=True,
    help=CLI_HELP,
)
@click.version_option(__version__, prog_name="kgpf")
@click.option(
    "--config",
    "config_file",
    type=click.Path(dir_okay=False),
    help="JSON config file (keys mirror PipelineConfig fields).",
)
@click.option("--seed", type=click.IntRange(min=0), help="Root seed for every random choice.")
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, dir_okay=True, resolve_path=True),
    help="Output directory (default: KGPF_OUTPUT_PATH or ./output).",
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    envvar="KGPF_THREADS",
    help="Worker threads for per-note work [env: KGPF_THREADS].",
)
@click.option("--quiet", "-q", is_flag=True, help="Only log warnings and errors.")
@click.option("--log-file", type=click.Path(dir_okay=False), help="Also write DEBUG logs here.")
@click.pass_context
def cli(
    ctx: click.Context,
    config_file: str | None,
    seed: int | None,
    out_dir: str | None,
    threads: int | None,
    quiet: bool,
    log_file: str | None,
) -> None:
    setup_logging(log_level="WARNING" if quiet else None, log_file=log_file)
    ctx.obj = {
        "config_file": config_file,
        "seed": seed,
        "output_path": out_dir,
        "threads": threads,
        "quiet": quiet,
        "log_file": log_file,
    }


def _config(ctx: click.Context, **overrides: Any) -> PipelineConfig:
    """Resolve the full config; config errors exit with status 1."""
    try:
        config = load_config(
            ctx.obj["config_file"],
            seed=ctx.obj["seed"],
            output_path=ctx.obj["output_path"],
            threads=ctx.obj["threads"],
            **overrides,
        )
    except ConfigError as exc:
        console.print(f"[red]Configuration error:[/red] {exc}")
        ctx.exit(int(ExitCode.USAGE))
        raise  # unreachable; ctx.exit raises
    if not ctx.obj["quiet"]:
        # a config file may set log_level
        setup_logging(log_level=config.log_level, log_file=ctx.obj["log_file"])
    return config


def _finish(ctx: click.Context, result: dict[str, Any]) -> None:
    if not result["success"]:
        console.print(f"[red]Failed:[/red] {result['error']}")
        ctx.exit(result["exit_code"])


def _csv_list(value: str | None) -> list[str] | None:
    if value is None:
        return None
    return [v.strip() for v in value.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# build-paths / make-tasks
# ---------------------------------------------------------------------------


@cli.command("build-paths")
@click.option("--concepts", "concepts_path", type=click.Path(), help="concepts.tsv")
@click.option("--edges", "edges_path", type=click.Path(), help="edges.tsv")
@click.option("--notes", "notes_path", type=click.Path(), help="notes.jsonl")
@click.option("--max-hops", type=click.IntRange(min=1), help="Maximum hops per path.")
@click.option("--max-negatives-per-start", type=click.IntRange(min=0))
@click.option("--max-examples-per-note", type=click.IntRange(min=0))
@click.option("--semantic-types", help="Comma-separated Txxx codes, or '*' for all.")
@click.option("--undirected/--directed", default=None, help="Also traverse edges in reverse.")
@click.option("--n-max", type=click.IntRange(1, 10), help="Longest matcher window in tokens.")
@click.option("--threshold", type=click.FloatRange(0, 1, min_open=True), help="Jaccard cutoff.")
@click.pass_context
def build_paths(ctx: click.Context, semantic_types: str | None, **options: Any) -> None:
    """Enumerate and label KG paths for every note (paths.jsonl, path_stats.json)."""
    config = _config(ctx, semantic_types=_csv_list(semantic_types), **options)
    result = run_build_paths(config)
    _finish(ctx, result)

    stats = result["stats"]
    console.print(
        f"Paths: {stats['positives']} positive, {stats['negatives']} negative "
        f"from {stats['notes_processed']} notes ({stats['notes_skipped']} skipped)"
    )
    console.print(f"Written to {result['paths_file']}")


@cli.command("make-tasks")
@click.option("--concepts", "concepts_path", type=click.Path(), help="concepts.tsv")
@click.option("--edges", "edges_path", type=click.Path(), help="edges.tsv")
@click.option("--notes", "notes_path", type=click.Path(), help="notes.jsonl")
@click.option(
    "--paths", "paths_file", type=click.Path(), help="PathSet JSONL (default: OUT/paths.jsonl)."
)
@click.option("--tasks", help=f"Comma-separated subset of {','.join(TASK_KINDS)}.")
@click.option("--max-instances-per-note", type=click.IntRange(min=0))
@click.option(
    "--pairs/--no-pairs",
    "emit_preference_pairs",
    default=None,
    help="Write pairs.jsonl from P2.",
)
@click.option(
    "--audit/--no-audit",
    "audit_tasks",
    default=None,
    help="Re-verify candidates with the oracle.",
)
@click.pass_context
def make_tasks(ctx: click.Context, tasks: str | None, **options: Any) -> None:
    """Emit the five task datasets under OUT/tasks/ plus tasks_manifest.json."""
    config = _config(ctx, tasks=_csv_list(tasks), **options)
    result = run_make_tasks(config)
    _finish(ctx, result)

    for kind, count in result["counts"].items():
        console.print(f"{kind:>5}: {count} instances")
    console.print(f"Manifest: {result['manifest_file']}")


# ---------------------------------------------------------------------------
# evaluate / baseline-judge
# ---------------------------------------------------------------------------


@cli.command()
@click.option(
    "--dataset", required=True, type=click.Path(dir_okay=False), help="Task dataset JSONL."
)
@click.option("--predictions", type=click.Path(dir_okay=False), help="Predictions JSONL.")
@click.option(
    "--metric",
    type=click.Choice(["rouge1", "rougeL", "exact"]),
    default="rougeL",
    show_default=True,
)
@click.option("--baseline", is_flag=True, help="Score the lexical baseline judge instead.")
@click.option(
    "--report",
    type=click.Path(dir_okay=False),
    help="Report path (default: OUT/eval_report.json).",
)
@click.pass_context
def evaluate(
    ctx: click.Context,
    dataset: str,
    predictions: str | None,
    metric: str,
    baseline: bool,
    report: str | None,
) -> None:
    """Score predictions against a dataset (ROUGE-1, ROUGE-L or exact match)."""
    if not baseline and not predictions:
        raise click.UsageError("--predictions is required unless --baseline is given")
    config = _config(ctx)
    out = Path(report) if report else Path(config.output_path) / EVAL_REPORT_FILE
    result = run_evaluate(dataset, predictions, metric, out, baseline=baseline)
    _finish(ctx, result)

    rep = result["report"]
    console.print(
        f"{rep['metric']}: F1 {rep['corpus_f1']:.2f}  P {rep['corpus_precision']:.2f}  "
        f"R {rep['corpus_recall']:.2f}  (n={rep['n']}, malformed={rep['n_malformed']})"
    )
    console.print(f"Report: {result['report_file']}")


@cli.command("baseline-judge")
@click.option(
    "--dataset", required=True, type=click.Path(dir_okay=False), help="P10, P2 or PN10 dataset."
)
@click.option("--output", type=click.Path(dir_okay=False), help="Predictions path.")
@click.pass_context
def baseline_judge(ctx: click.Context, dataset: str, output: str | None) -> None:
    """Predict with the lexical overlap judge (selection tasks only)."""
    config = _config(ctx)
    out = Path(output) if output else Path(config.output_path) / BASELINE_PREDICTIONS_FILE
    result = run_baseline_judge(dataset, out)
    _finish(ctx, result)
    console.print(f"{result['count']} predictions written to {out}")


# ---------------------------------------------------------------------------
# merge / gradcheck
# ---------------------------------------------------------------------------


@cli.command()
@click.argument("bundle_a", type=click.Path(dir_okay=False))
@click.argument("bundle_b", type=click.Path(dir_okay=False))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--lambda", "lam", type=click.FloatRange(0, 1), help="Weight of BUNDLE_A (default 0.7)."
)
@click.option("--doge", is_flag=True, help="Plain 0.5/0.5 average.")
@click.option("--exclude", multiple=True, help="Glob of tensor names copied from BUNDLE_A.")
@click.pass_context
def merge(
    ctx: click.Context,
    bundle_a: str,
    bundle_b: str,
    output: str,
    lam: float | None,
    doge: bool,
    exclude: tuple[str, ...],
) -> None:
    """Weighted parameter average: λ·A + (1-λ)·B."""
    if doge and lam is not None:
        raise click.UsageError("--doge and --lambda are mutually exclusive")
    config = _config(ctx, merge_lambda=lam, merge_exclude=list(exclude) or None)
    result = run_merge(
        bundle_a,
        bundle_b,
        output,
        config.merge_lambda,
        doge=doge,
        exclude=config.merge_exclude,
    )
    _finish(ctx, result)
    label = result["metadata"]["merge"]
    console.print(f"Merged {result['tensors']} tensors ({label}) → {output}")


@cli.command()
@click.argument("op", type=click.Choice(GRADCHECK_OPS))
@click.option("--seeds", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-4, show_default=True)
@click.option(
    "--step",
    "h",
    type=click.FloatRange(min=0, min_open=True),
    default=1e-5,
    show_default=True,
)
@click.option("--beta", type=click.FloatRange(min=0), default=0.1, show_default=True)
@click.option(
    "--report",
    type=click.Path(dir_okay=False),
    help="Report path (default: OUT/gradcheck_report.json).",
)
@click.pass_context
def gradcheck(
    ctx: click.Context,
    op: str,
    seeds: int,
    tol: float,
    h: float,
    beta: float,
    report: str | None,
) -> None:
    """Finite-difference check of an objective's analytic gradient."""
    config = _config(ctx)
    out = Path(report) if report else Path(config.output_path) / GRADCHECK_REPORT_FILE
    result = run_gradcheck(op, seeds=seeds, tol=tol, h=h, beta=beta, out=out)
    _finish(ctx, result)

    rep = result["report"]
    status = "[green]pass[/green]" if rep["pass"] else "[red]FAIL[/red]"
    console.print(
        f"{op}: {status}  max rel err {rep['max_rel_err']:.3e} over {rep['checks']} checks"
    )
    if not rep["pass"]:
        ctx.exit(int(ExitCode.INTERNAL))


# ---------------------------------------------------------------------------
# synth-corpus / config
# ---------------------------------------------------------------------------


@cli.command("synth-corpus")
@click.option("--num-notes", type=click.IntRange(min=1), default=20, show_default=True)
@click.pass_context
def synth_corpus(ctx: click.Context, num_notes: int) -> None:
    """Write a deterministic synthetic graph and notes to OUT."""
    config = _config(ctx)
    result = run_synth_corpus(config.output_path, config.seed or 0, num_notes)
    _finish(ctx, result)
    for name, path in result["files"].items():
        console.print(f"{name:>8}: {path}")


@cli.command("config")
@click.option("--command", "command", type=click.Choice(["build-paths", "make-tasks"]))
@click.option("--json-output", is_flag=True, help="Output configuration as JSON.")
@click.pass_context
def show_config(ctx: click.Context, command: str | None, json_output: bool) -> None:
    """Show the resolved configuration and any validation problems."""
    config = _config(ctx)
    errors = config.validate(command)
    status = {"valid": not errors, "errors": errors, "config": config.to_dict()}

    if json_output:
        click.echo(json.dumps(status, indent=2))
    else:
        console.print(f"Configuration: {'valid' if status['valid'] else 'issues found'}")
        for key, value in status["config"].items():
            if key != "instructions":
                console.print(f"  {key}: {value}")
        for error in errors:
            console.print(f"  [red]-[/red] {error}")
    if errors:
        ctx.exit(int(ExitCode.USAGE))


if __name__ == "__main__":
    cli()
