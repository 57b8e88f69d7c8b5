"""End-to-end tests for the run_* pipeline entry points on the synthetic corpus."""

import json
import math
from pathlib import Path

import pytest

from src.pipeline.config.config_manager import PipelineConfig
from src.pipeline.core.pipeline import (
    run_build_paths,
    run_evaluate,
    run_make_tasks,
    run_merge,
    run_synth_corpus,
)
from src.pipeline.io.notes import ClinicalNote, load_notes, write_notes
from src.pipeline.utils.synthetic import UNMAPPABLE_CUI, make_synthetic_corpus
from tests.conftest import write_graph_files


def _config(corpus: dict[str, Path], out: Path, **overrides) -> PipelineConfig:
    return PipelineConfig(
        concepts_path=str(corpus["concepts"]),
        edges_path=str(corpus["edges"]),
        notes_path=str(corpus["notes"]),
        output_path=str(out),
        seed=overrides.pop("seed", 7),
        **overrides,
    )


def _build_all(config: PipelineConfig) -> None:
    built = run_build_paths(config)
    assert built["success"], built["error"]
    made = run_make_tasks(config)
    assert made["success"], made["error"]


def _run_all(config: PipelineConfig) -> dict[str, bytes]:
    """build-paths, make-tasks, then a baseline evaluation of P2; returns every artifact."""
    _build_all(config)
    out = Path(config.output_path)
    evaluated = run_evaluate(
        out / "tasks" / "p2.jsonl", None, "rougeL", out / "eval_report.json", baseline=True
    )
    assert evaluated["success"], evaluated["error"]
    return _outputs(out)


def _outputs(out: Path, *, drop_config: bool = False) -> dict[str, bytes]:
    """Every file under *out*, keyed by relative path.

    Reports embed the resolved config (output path, threads); *drop_config*
    removes it so runs in different directories can be compared.
    """
    files = {}
    for f in sorted(out.rglob("*")):
        if not f.is_file():
            continue
        data = f.read_bytes()
        if drop_config and f.suffix == ".json":
            report = json.loads(data)
            report.pop("config", None)
            data = json.dumps(report, sort_keys=True).encode()
        files[f.relative_to(out).as_posix()] = data
    return files


class TestSyntheticCorpus:
    def test_writes_three_files(self, tmp_path):
        result = run_synth_corpus(tmp_path, seed=0, num_notes=5)
        assert result["success"]
        assert {p.name for p in result["files"].values()} == {
            "concepts.tsv",
            "edges.tsv",
            "notes.jsonl",
        }
        assert len(load_notes(result["files"]["notes"])) == 5

    def test_same_seed_same_corpus(self):
        assert make_synthetic_corpus(3, 10) == make_synthetic_corpus(3, 10)

    def test_last_note_gold_is_unmappable(self):
        corpus = make_synthetic_corpus(0, 4)
        assert corpus.notes[-1].gold_diagnoses == (UNMAPPABLE_CUI,)
        assert UNMAPPABLE_CUI not in {c.cui for c in corpus.concepts}


class TestBuildPaths:
    def test_stats_and_files(self, synthetic_dir, tmp_path):
        result = run_build_paths(_config(synthetic_dir, tmp_path / "out"))
        assert result["success"] and result["exit_code"] == 0
        stats = result["stats"]
        assert stats["notes_total"] == 20
        assert stats["positives"] > 0 and stats["negatives"] > 0
        assert stats["skip_reasons"].get("gold unmappable", 0) >= 1
        assert json.loads(result["stats_file"].read_text())["positives"] == stats["positives"]

    def test_examples_per_note_capped(self, synthetic_dir, tmp_path):
        stats = run_build_paths(_config(synthetic_dir, tmp_path / "out"))["stats"]
        assert stats["mean_examples_per_note"] <= 84
        assert stats["max_examples_per_note"] <= 84

    def test_all_skipped_corpus_succeeds(self, synthetic_dir, tmp_path):
        notes = [
            ClinicalNote(n.note_id, n.text, (UNMAPPABLE_CUI,))
            for n in load_notes(synthetic_dir["notes"])
        ]
        skipped_notes = tmp_path / "skipped.jsonl"
        write_notes(notes, skipped_notes)
        corpus = {**synthetic_dir, "notes": skipped_notes}
        result = run_build_paths(_config(corpus, tmp_path / "out"))
        assert result["success"] and result["exit_code"] == 0
        assert result["stats"]["positives"] == 0
        assert result["stats"]["negatives"] == 0
        assert result["stats"]["notes_processed"] == 0

    def test_missing_seed_is_config_error(self, synthetic_dir, tmp_path):
        result = run_build_paths(_config(synthetic_dir, tmp_path / "out", seed=None))
        assert not result["success"]
        assert result["exit_code"] == 1

    def test_malformed_edges_is_data_error(self, synthetic_dir, tmp_path):
        bad = tmp_path / "edges.tsv"
        bad.write_text("src\trelation\tdst\nC0000001\tr\n")
        result = run_build_paths(_config({**synthetic_dir, "edges": bad}, tmp_path / "out"))
        assert not result["success"]
        assert result["exit_code"] == 2


class TestDeterminism:
    def test_same_seed_byte_identical(self, synthetic_dir, tmp_path):
        _run_all(_config(synthetic_dir, tmp_path / "a"))
        _run_all(_config(synthetic_dir, tmp_path / "b"))
        first = _outputs(tmp_path / "a", drop_config=True)
        expected = {"paths.jsonl", "path_stats.json", "tasks_manifest.json", "eval_report.json"}
        assert expected <= set(first)
        assert first == _outputs(tmp_path / "b", drop_config=True)

    def test_rerun_in_same_directory_is_byte_identical(self, synthetic_dir, tmp_path):
        config = _config(synthetic_dir, tmp_path / "out")
        first = _run_all(config)
        assert _run_all(config) == first

    def test_thread_count_does_not_change_outputs(self, synthetic_dir, tmp_path):
        _build_all(_config(synthetic_dir, tmp_path / "one", threads=1))
        _build_all(_config(synthetic_dir, tmp_path / "four", threads=4))
        one = _outputs(tmp_path / "one", drop_config=True)
        assert one == _outputs(tmp_path / "four", drop_config=True)

    def test_different_seed_changes_tasks(self, synthetic_dir, tmp_path):
        _build_all(_config(synthetic_dir, tmp_path / "a", seed=1))
        _build_all(_config(synthetic_dir, tmp_path / "b", seed=2))
        a, b = _outputs(tmp_path / "a"), _outputs(tmp_path / "b")
        assert a["tasks/p10.jsonl"] != b["tasks/p10.jsonl"]


class TestMakeTasks:
    def test_task_subset(self, synthetic_dir, tmp_path):
        config = _config(synthetic_dir, tmp_path / "out", tasks=["p10", "p2"])
        assert run_build_paths(config)["success"]
        result = run_make_tasks(config)
        assert result["success"], result["error"]
        written = sorted(p.name for p in (tmp_path / "out" / "tasks").iterdir())
        assert written == ["p10.jsonl", "p2.jsonl"]

        manifest = json.loads(result["manifest_file"].read_text())
        for kind, entry in manifest["tasks"].items():
            lines = (tmp_path / "out" / "tasks" / f"{kind}.jsonl").read_text().splitlines()
            assert entry["count"] == len(lines) == result["counts"][kind]

    def test_audit_finds_no_disagreements(self, synthetic_dir, tmp_path):
        config = _config(synthetic_dir, tmp_path / "out")
        _build_all(config)
        manifest = json.loads((tmp_path / "out" / "tasks_manifest.json").read_text())
        assert manifest["audit"]["enabled"] is True
        assert manifest["audit"]["disagreements"] == 0

    def test_preference_pairs(self, synthetic_dir, tmp_path):
        config = _config(synthetic_dir, tmp_path / "out", emit_preference_pairs=True)
        _build_all(config)
        pairs = (tmp_path / "out" / "tasks" / "pairs.jsonl").read_text().splitlines()
        p2 = (tmp_path / "out" / "tasks" / "p2.jsonl").read_text().splitlines()
        assert len(pairs) == len(p2)

    def test_shared_preferred_names(self, tmp_path):
        concepts, edges = write_graph_files(
            tmp_path / "kg",
            [
                "S\tStart finding\tT033\t",
                "X1\tHyper k\tT047\t",
                "X2\tHyper k\tT047\t",
                "Y\tLow sodium\tT047\t",
            ],
            ["S\tassoc\tX1", "S\tassoc\tX2", "S\tassoc\tY"],
        )
        notes = tmp_path / "notes.jsonl"
        write_notes([ClinicalNote("n1", "Patient with start finding today.", ("X1",))], notes)
        corpus = {"concepts": concepts, "edges": edges, "notes": notes}
        _build_all(_config(corpus, tmp_path / "out", tasks=["p2"]))

        manifest = json.loads((tmp_path / "out" / "tasks_manifest.json").read_text())
        assert manifest["audit"]["disagreements"] == 0
        assert manifest["ambiguous_paths_dropped"] == 1
        (line,) = (tmp_path / "out" / "tasks" / "p2.jsonl").read_text().splitlines()
        assert sorted(json.loads(line)["candidates"]) == [
            "Start finding->assoc|Hyper k",
            "Start finding->assoc|Low sodium",
        ]

    def test_missing_paths_file(self, synthetic_dir, tmp_path):
        result = run_make_tasks(_config(synthetic_dir, tmp_path / "out"))
        assert not result["success"] and result["exit_code"] == 1


class TestBaseline:
    @pytest.mark.slow
    def test_p2_baseline_beats_chance(self, tmp_path):
        files = run_synth_corpus(tmp_path / "corpus", seed=0, num_notes=240)["files"]
        config = _config(files, tmp_path / "out", tasks=["p2"])
        _build_all(config)
        result = run_evaluate(
            tmp_path / "out" / "tasks" / "p2.jsonl",
            None,
            "exact",
            tmp_path / "out" / "eval_report.json",
            baseline=True,
        )
        assert result["success"], result["error"]
        report = result["report"]
        n = report["n"]
        assert n >= 1000
        sigma = 100.0 * math.sqrt(0.25 / n)
        assert report["corpus_f1"] > 50.0 + 3 * sigma

    @pytest.mark.slow
    def test_audit_over_large_corpus(self, tmp_path):
        files = run_synth_corpus(tmp_path / "corpus", seed=0, num_notes=120)["files"]
        _build_all(_config(files, tmp_path / "out"))
        audit = json.loads((tmp_path / "out" / "tasks_manifest.json").read_text())["audit"]
        assert audit["checked"] >= 5000
        assert audit["disagreements"] == 0


class TestMerge:
    def test_missing_bundle_is_data_error(self, tmp_path):
        result = run_merge(tmp_path / "a", tmp_path / "b", tmp_path / "m", 0.7)
        assert not result["success"] and result["exit_code"] == 2
        assert not (tmp_path / "m").exists()

    def test_malformed_header_is_data_error(self, tmp_path):
        header = json.dumps({"w": {"dtype": "F32", "shape": "ab", "data_offsets": [0, 4]}})
        bad = tmp_path / "bad.safetensors"
        bad.write_bytes(len(header).to_bytes(8, "little") + header.encode() + b"\x00" * 4)
        result = run_merge(bad, bad, tmp_path / "m", 0.7)
        assert not result["success"] and result["exit_code"] == 2
