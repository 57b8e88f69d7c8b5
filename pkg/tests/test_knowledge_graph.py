"""Tests for graph loading, validation, neighbor ordering and the semantic filter."""

import pytest

from src.pipeline.config.config_manager import DEFAULT_SEMANTIC_TYPES
from src.pipeline.core.errors import ConceptLookupError, GraphLoadError
from src.pipeline.core.knowledge_graph import (
    Concept,
    RelationEdge,
    SemanticTypeFilter,
    build_graph,
    load_graph,
    neighbors,
    passes_filter,
)
from tests.conftest import write_graph_files

CHAIN_CONCEPTS = ["A\tA\tT047\t", "B\tB\tT047\t", "C\tC\tT047\t"]
CHAIN_EDGES = ["A\tr1\tB", "B\tr2\tC"]


class TestLoadGraph:
    def test_chain_fixture_counts(self, tmp_path):
        graph = load_graph(*write_graph_files(tmp_path, CHAIN_CONCEPTS, CHAIN_EDGES))
        assert graph.node_count == 3
        assert graph.edge_count == 2

    def test_header_rows_are_skipped(self, tmp_path):
        concepts = ["cui\tpreferred_name\tsemantic_type\tsynonyms", *CHAIN_CONCEPTS]
        edges = ["src\trelation\tdst", *CHAIN_EDGES]
        graph = load_graph(*write_graph_files(tmp_path, concepts, edges))
        assert graph.node_count == 3
        assert "cui" not in graph

    def test_synonyms_are_split(self, tmp_path):
        concepts = ["X1\tChronic kidney disease\tT047\tCKD;Chronic renal disease"]
        graph = load_graph(*write_graph_files(tmp_path, concepts, []))
        assert graph.concept("X1").synonyms == ("CKD", "Chronic renal disease")

    def test_duplicate_cui_rejected(self, tmp_path):
        concepts = ["X1\tOne\tT047\t", "X1\tTwo\tT047\t"]
        with pytest.raises(GraphLoadError, match="duplicate cui X1"):
            load_graph(*write_graph_files(tmp_path, concepts, []))

    def test_dangling_edge_names_triple(self, tmp_path):
        with pytest.raises(GraphLoadError, match=r"\('A', 'r9', 'Z9'\)"):
            load_graph(*write_graph_files(tmp_path, CHAIN_CONCEPTS, ["A\tr9\tZ9"]))

    def test_reserved_character_in_name_rejected(self, tmp_path):
        concepts = ["X1\tA->B\tT047\t"]
        with pytest.raises(GraphLoadError, match="reserved character"):
            load_graph(*write_graph_files(tmp_path, concepts, []))

    def test_reserved_character_in_relation_rejected(self, tmp_path):
        with pytest.raises(GraphLoadError, match="reserved character"):
            load_graph(*write_graph_files(tmp_path, CHAIN_CONCEPTS, ["A\tr|1\tB"]))

    def test_invalid_semantic_type_rejected(self, tmp_path):
        with pytest.raises(GraphLoadError, match="invalid semantic_type"):
            load_graph(*write_graph_files(tmp_path, ["X1\tOne\tdisease\t"], []))

    def test_self_loop_rejected(self, tmp_path):
        with pytest.raises(GraphLoadError, match="self-loop"):
            load_graph(*write_graph_files(tmp_path, CHAIN_CONCEPTS, ["A\tr1\tA"]))

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(GraphLoadError, match="nope.tsv"):
            load_graph(tmp_path / "nope.tsv", tmp_path / "edges.tsv")

    def test_undirected_adds_reverse_edges(self, tmp_path):
        files = write_graph_files(tmp_path, CHAIN_CONCEPTS, CHAIN_EDGES)
        graph = load_graph(*files, undirected=True)
        assert graph.edge_count == 4
        assert graph.has_edge("B", "r1", "A")


class TestNeighbors:
    def test_out_edges_of_start(self, chain_graph):
        assert neighbors(chain_graph, "A") == [RelationEdge("A", "r1", "B")]

    def test_sink_has_no_neighbors(self, chain_graph):
        assert neighbors(chain_graph, "C") == []

    def test_ordered_by_relation_then_dst(self):
        graph = build_graph(
            [Concept(c, c, "T047") for c in ("N", "X", "Y")],
            [RelationEdge("N", "r2", "X"), RelationEdge("N", "r1", "Y")],
        )
        assert [(e.relation, e.dst) for e in neighbors(graph, "N")] == [("r1", "Y"), ("r2", "X")]

    def test_unknown_cui_raises_lookup_error(self, chain_graph):
        with pytest.raises(ConceptLookupError, match="unknown cui Q"):
            neighbors(chain_graph, "Q")


class TestSemanticFilter:
    def test_default_set_is_diagnosis_relevant_types(self):
        assert SemanticTypeFilter().allowed == frozenset(
            {"T033", "T037", "T046", "T047", "T048", "T049", "T184"}
        )
        assert sorted(DEFAULT_SEMANTIC_TYPES) == sorted(SemanticTypeFilter().allowed)

    def test_disease_passes_default(self):
        assert passes_filter(Concept("X", "x", "T047"), SemanticTypeFilter())

    def test_drug_fails_default(self):
        assert not passes_filter(Concept("X", "x", "T121"), SemanticTypeFilter())

    def test_wildcard_admits_everything(self):
        wildcard = SemanticTypeFilter.from_codes(["*"])
        assert passes_filter(Concept("X", "x", "T121"), wildcard)

    def test_from_codes_none_is_default(self):
        assert SemanticTypeFilter.from_codes(None) == SemanticTypeFilter()


class TestNameLookup:
    def test_shared_preferred_name_resolves_to_first_loaded(self):
        graph = build_graph(
            [Concept("X2", "Same", "T047"), Concept("X1", "Same", "T047")],
            [],
        )
        assert graph.cuis_for_name("Same") == ("X2", "X1")
        assert graph.cui_for_name("Same") == "X2"
        assert graph.cui_for_name("Other") is None
