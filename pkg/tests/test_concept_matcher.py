"""Tests for term indexing and Jaccard mention extraction."""

import numpy as np
import pytest

from src.pipeline.core.concept_matcher import (
    TermIndex,
    build_index,
    extract_mentions,
    jaccard,
    normalize,
)
from src.pipeline.core.knowledge_graph import Concept, build_graph


def _index(*concepts: Concept, threshold: float = 0.7) -> TermIndex:
    return build_index(build_graph(list(concepts), []), threshold=threshold)


class TestBuildIndex:
    def test_preferred_name_is_normalized(self):
        index = _index(Concept("X1", "Elevated K", "T033"))
        assert index.entries == {"elevated k": frozenset({"X1"})}

    def test_synonyms_map_to_same_cui(self):
        index = _index(Concept("X1", "CKD stage 3", "T047", ("CKD", "Chronic kidney disease")))
        assert index.entries["ckd"] == frozenset({"X1"})
        assert index.entries["chronic kidney disease"] == frozenset({"X1"})

    def test_empty_graph_gives_empty_index(self):
        assert len(build_index(build_graph([], []))) == 0

    def test_normalize_strips_punctuation(self):
        assert normalize("  Chronic-kidney   disease (SMQ) ") == "chronic kidney disease smq"

    @pytest.mark.parametrize("n_max, threshold", [(0, 0.7), (11, 0.7), (6, 0.0), (6, 1.5)])
    def test_invalid_settings_rejected(self, n_max, threshold):
        with pytest.raises(ValueError):
            TermIndex(entries={}, n_max=n_max, threshold=threshold)


class TestExtractMentions:
    def test_exact_containment(self):
        index = _index(Concept("X1", "elevated k", "T033"))
        mentions = extract_mentions(index, "pt with elevated k today")
        assert len(mentions) == 1
        assert mentions[0].cui == "X1"
        assert mentions[0].surface == "elevated k"
        assert mentions[0].score == 1.0

    def test_partial_name_below_threshold(self):
        index = _index(Concept("X1", "chronic kidney disease", "T047"))
        window, key = frozenset({"chronic", "kidney"}), frozenset({"chronic", "kidney", "disease"})
        assert jaccard(window, key) == pytest.approx(2 / 3)
        assert extract_mentions(index, "chronic kidney") == []

    def test_identical_text_scores_one(self):
        index = _index(Concept("X1", "Chronic kidney disease", "T047"))
        (mention,) = extract_mentions(index, "Chronic kidney disease")
        assert mention.score == 1.0
        assert mention.span == (0, len("Chronic kidney disease"))

    def test_empty_text(self):
        assert extract_mentions(_index(Concept("X1", "a", "T047")), "") == []

    def test_overlap_keeps_longest_exact_match(self):
        index = _index(
            Concept("X1", "kidney disease", "T047"),
            Concept("X2", "chronic kidney disease", "T047"),
        )
        mentions = extract_mentions(index, "has chronic kidney disease.")
        assert [m.cui for m in mentions] == ["X2"]

    def test_sorted_by_span_start(self):
        index = _index(Concept("X1", "fever", "T184"), Concept("X2", "cough", "T184"))
        mentions = extract_mentions(index, "cough then fever")
        assert [m.cui for m in mentions] == ["X2", "X1"]


class TestMentionProperties:
    WORDS = ["renal", "failure", "acute", "chronic", "pain", "chest", "high", "k", "sodium"]

    def _random_case(self, rng):
        concepts = []
        for i in range(6):
            n = int(rng.integers(1, 4))
            name = " ".join(rng.choice(self.WORDS, size=n, replace=False))
            concepts.append(Concept(f"X{i}", name, "T047"))
        text = " ".join(rng.choice(self.WORDS, size=12))
        return concepts, text

    def test_scores_offsets_and_monotonicity(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            concepts, text = self._random_case(rng)
            graph = build_graph(concepts, [])
            strict = extract_mentions(build_index(graph, threshold=0.7), text)
            loose = extract_mentions(build_index(graph, threshold=0.5), text)

            for m in strict:
                assert text[m.start : m.end] == m.surface
                window = frozenset(normalize(m.surface).split())
                assert m.score == pytest.approx(jaccard(window, frozenset(m.term.split())))
                assert m.score >= 0.7

            # every strict cui is still found at the lower threshold
            assert {m.cui for m in strict} <= {m.cui for m in loose}
