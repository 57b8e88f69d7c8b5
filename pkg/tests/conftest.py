"""
Pytest configuration and shared fixtures for the test suite.

Provides small hand-built graphs (a 3-node chain and the hyperkalemia
example graph), the synthetic corpus on disk, and a PathSet factory for the
task builders.
"""

from pathlib import Path

import pytest

from src.pipeline.core.knowledge_graph import Concept, RelationEdge, build_graph
from src.pipeline.core.path_engine import KgPath, PathLabel, PathSet
from src.pipeline.utils.synthetic import write_synthetic_corpus

FIGURE_PATH = "Elevated k->has_member|Chronic kidney disease (smq)->member_of|K excess"


def write_graph_files(directory: Path, concepts: list[str], edges: list[str]) -> tuple[Path, Path]:
    """Write concepts.tsv / edges.tsv from raw TSV lines (no header)."""
    directory.mkdir(parents=True, exist_ok=True)
    concept_file = directory / "concepts.tsv"
    edge_file = directory / "edges.tsv"
    concept_file.write_text("".join(line + "\n" for line in concepts), encoding="utf-8")
    edge_file.write_text("".join(line + "\n" for line in edges), encoding="utf-8")
    return concept_file, edge_file


@pytest.fixture
def chain_graph():
    """A -r1-> B -r2-> C, all disease-typed."""
    return build_graph(
        [
            Concept("A", "A", "T047"),
            Concept("B", "B", "T047"),
            Concept("C", "C", "T047"),
        ],
        [RelationEdge("A", "r1", "B"), RelationEdge("B", "r2", "C")],
    )


@pytest.fixture
def figure_graph():
    """Elevated k -has_member-> CKD (smq) -member_of-> K excess, plus a look-alike."""
    return build_graph(
        [
            Concept("C0151825", "Elevated k", "T033", ("raised potassium",)),
            Concept("C9000001", "Chronic kidney disease (smq)", "T170"),
            Concept("C0020461", "K excess", "T047", ("hyperkalemia",)),
            Concept("C0020462", "Hyperkalemia", "T047"),
            Concept("C0012345", "Spironolactone", "T121"),
        ],
        [
            RelationEdge("C0151825", "has_member", "C9000001"),
            RelationEdge("C9000001", "member_of", "C0020461"),
            RelationEdge("C0151825", "associated_with", "C0020462"),
            RelationEdge("C0151825", "may_be_treated_by", "C0012345"),
        ],
    )


@pytest.fixture
def synthetic_dir(tmp_path):
    """The 20-note synthetic corpus written under tmp_path/corpus."""
    paths = write_synthetic_corpus(tmp_path / "corpus", seed=0, num_notes=20)
    return paths


@pytest.fixture
def make_pathset():
    """Factory: PathSet with n_pos positives and n_neg negatives over unique names."""

    def factory(n_pos: int, n_neg: int, note_id: str = "n1", hops: int = 1) -> PathSet:
        def path(prefix: str, i: int, label: PathLabel) -> KgPath:
            names = tuple(f"{prefix}{i} c{k}" for k in range(hops + 1))
            return KgPath(
                concepts=tuple(f"{prefix.upper()}{i}_{k}" for k in range(hops + 1)),
                relations=tuple(f"r{k}" for k in range(hops)),
                names=names,
                label=label,
                note_id=note_id,
            )

        return PathSet(
            note_id=note_id,
            positives=[path("pos", i, PathLabel.POSITIVE) for i in range(n_pos)],
            negatives=[path("neg", i, PathLabel.NEGATIVE) for i in range(n_neg)],
            note_text=f"note {note_id}",
            gold=["GOLD"],
        )

    return factory


def pytest_configure(config):
    """Configure pytest."""
    config.addinivalue_line("markers", "graph: Knowledge graph and matcher tests")
    config.addinivalue_line("markers", "paths: Path engine tests")
    config.addinivalue_line("markers", "tasks: Task builder tests")
    config.addinivalue_line("markers", "eval: Metric and evaluation tests")
    config.addinivalue_line("markers", "objectives: Objective and gradient tests")
    config.addinivalue_line("markers", "pipeline: End-to-end pipeline tests")


def pytest_collection_modifyitems(config, items):
    """Add markers based on test file names."""
    by_file = {
        "test_knowledge_graph": pytest.mark.graph,
        "test_concept_matcher": pytest.mark.graph,
        "test_path_engine": pytest.mark.paths,
        "test_task_builder": pytest.mark.tasks,
        "test_eval": pytest.mark.eval,
        "test_objectives": pytest.mark.objectives,
        "test_pipeline": pytest.mark.pipeline,
        "test_cli": pytest.mark.pipeline,
    }
    for item in items:
        for stem, marker in by_file.items():
            if stem in item.nodeid:
                item.add_marker(marker)
                break
