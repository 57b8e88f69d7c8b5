"""
Diagnostic path supervision: DFS enumeration, labeling, sampling and the
path string grammar.

Path strings render concepts by preferred name::

    path := NAME ( "->" REL "|" NAME )*

e.g. ``Elevated k->has_member|Chronic kidney disease (smq)->member_of|K excess``.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ..io.notes import ClinicalNote
from ..logging.logging_config import get_logger
from .concept_matcher import Mention, TermIndex, extract_mentions
from .errors import ConceptLookupError, PathParseError, PathResolutionError
from .knowledge_graph import ARROW, BAR, KnowledgeGraph, SemanticTypeFilter, passes_filter

logger = get_logger(__name__)

DEFAULT_MAX_HOPS = 2
DEFAULT_MAX_NEGATIVES_PER_START = 9
DEFAULT_MAX_EXAMPLES_PER_NOTE = 84


class PathLabel(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True, slots=True)
class KgPath:
    """Alternating concept/relation sequence.

    ``names`` mirrors ``concepts`` with preferred names so a path renders
    without the graph. ``label`` is None until the path is labeled.
    """

    concepts: tuple[str, ...]
    relations: tuple[str, ...]
    names: tuple[str, ...]
    label: PathLabel | None = None
    note_id: str | None = None
    start_mention: Mention | None = None

    @property
    def hops(self) -> int:
        return len(self.relations)

    @property
    def start(self) -> str:
        return self.concepts[0]

    @property
    def terminal(self) -> str:
        return self.concepts[-1]

    def same_walk(self, other: KgPath) -> bool:
        return self.concepts == other.concepts and self.relations == other.relations


@dataclass(frozen=True, slots=True)
class SamplingCaps:
    max_negatives_per_start: int = DEFAULT_MAX_NEGATIVES_PER_START
    max_examples_per_note: int = DEFAULT_MAX_EXAMPLES_PER_NOTE


@dataclass
class PathSet:
    """Labeled paths of one note.

    ``skip_reason`` is set (and the path lists empty) when the note could not
    contribute supervision.
    """

    note_id: str
    positives: list[KgPath] = field(default_factory=list)
    negatives: list[KgPath] = field(default_factory=list)
    start_concepts: list[str] = field(default_factory=list)
    note_text: str = ""
    gold: list[str] = field(default_factory=list)
    skip_reason: str | None = None

    @property
    def skipped(self) -> bool:
        return self.skip_reason is not None

    @property
    def size(self) -> int:
        return len(self.positives) + len(self.negatives)


# ---------------------------------------------------------------------------
# Enumeration & labeling
# ---------------------------------------------------------------------------


def enumerate_paths(
    graph: KnowledgeGraph, start: str, max_hops: int = DEFAULT_MAX_HOPS
) -> list[KgPath]:
    """All simple directed paths of 1..max_hops hops from *start*.

    Paths come out in DFS pre-order, so every prefix precedes its extensions.
    """
    if start not in graph:
        raise ConceptLookupError(f"unknown cui {start}")
    if max_hops < 1:
        raise ValueError(f"max_hops must be at least 1, got {max_hops}")

    found: list[KgPath] = []
    concepts = [start]
    relations: list[str] = []
    on_path = {start}

    def visit(cui: str) -> None:
        if len(relations) == max_hops:
            return
        for edge in graph.neighbors(cui):
            if edge.dst in on_path:
                continue
            concepts.append(edge.dst)
            relations.append(edge.relation)
            on_path.add(edge.dst)
            found.append(_make_path(graph, concepts, relations))
            visit(edge.dst)
            on_path.discard(edge.dst)
            relations.pop()
            concepts.pop()

    visit(start)
    return found


def label_paths(
    paths: Iterable[KgPath], gold: Iterable[str]
) -> tuple[list[KgPath], list[KgPath]]:
    """Split paths into (positives, negatives) by whether the terminal is gold."""
    gold_set = set(gold)
    positives: list[KgPath] = []
    negatives: list[KgPath] = []
    for path in paths:
        if path.terminal in gold_set:
            positives.append(replace(path, label=PathLabel.POSITIVE))
        else:
            negatives.append(replace(path, label=PathLabel.NEGATIVE))
    return positives, negatives


def build_note_paths(
    graph: KnowledgeGraph,
    index: TermIndex,
    type_filter: SemanticTypeFilter,
    note: ClinicalNote,
    seed: int,
    caps: SamplingCaps = SamplingCaps(),
    max_hops: int = DEFAULT_MAX_HOPS,
) -> PathSet:
    """Build the labeled, down-sampled PathSet of one note.

    Start concepts are the deduplicated filtered mentions; paths are kept only
    when their terminal passes the semantic filter. Negatives are sampled per
    start, then the note total is capped keeping positives first.
    """
    pathset = PathSet(note_id=note.note_id, note_text=note.text)

    gold = [
        cui
        for cui in dict.fromkeys(note.gold_diagnoses)
        if cui in graph and passes_filter(graph.concept(cui), type_filter)
    ]
    pathset.gold = gold
    if not gold:
        pathset.skip_reason = "gold unmappable"
        return pathset

    first_mention: dict[str, Mention] = {}
    for mention in extract_mentions(index, note.text):
        if mention.cui in first_mention:
            continue
        if passes_filter(graph.concept(mention.cui), type_filter):
            first_mention[mention.cui] = mention
    if not first_mention:
        pathset.skip_reason = "no valid start concepts"
        return pathset

    pathset.start_concepts = list(first_mention)
    rng = np.random.default_rng(seed)

    for start, mention in first_mention.items():
        paths = [
            replace(p, note_id=note.note_id, start_mention=mention)
            for p in enumerate_paths(graph, start, max_hops)
            if passes_filter(graph.concept(p.terminal), type_filter)
        ]
        positives, negatives = label_paths(paths, gold)
        pathset.positives.extend(positives)
        pathset.negatives.extend(_sample_in_order(negatives, caps.max_negatives_per_start, rng))

    if pathset.size > caps.max_examples_per_note:
        budget = caps.max_examples_per_note
        pathset.positives = pathset.positives[:budget]
        pathset.negatives = _sample_in_order(
            pathset.negatives, budget - len(pathset.positives), rng
        )

    return pathset


def _sample_in_order(items: Sequence[KgPath], k: int, rng: np.random.Generator) -> list[KgPath]:
    """Uniform sample of k items without replacement, original order kept."""
    if k <= 0:
        return []
    if len(items) <= k:
        return list(items)
    chosen = np.sort(rng.choice(len(items), size=k, replace=False))
    return [items[i] for i in chosen]


def _make_path(graph: KnowledgeGraph, concepts: Sequence[str], relations: Sequence[str]) -> KgPath:
    return KgPath(
        concepts=tuple(concepts),
        relations=tuple(relations),
        names=tuple(graph.concept(c).preferred_name for c in concepts),
    )


# ---------------------------------------------------------------------------
# Path grammar
# ---------------------------------------------------------------------------


def format_path(path: KgPath) -> str:
    """Render a path as ``NAME->REL|NAME...``."""
    parts = [path.names[0]]
    for relation, name in zip(path.relations, path.names[1:], strict=True):
        parts.append(f"{ARROW}{relation}{BAR}{name}")
    return "".join(parts)


def split_path(s: str) -> tuple[list[str], list[str]]:
    """Tokenize a path string into (names, relations) without a graph.

    Raises PathParseError with the 1-based column of the offending segment.
    """
    if not s:
        raise PathParseError("empty path", 1)

    names: list[str] = []
    relations: list[str] = []

    segments = s.split(ARROW)
    pos = 0
    head = segments[0]
    _check_name(head, pos)
    names.append(head)
    pos += len(head) + len(ARROW)

    for segment in segments[1:]:
        if BAR not in segment:
            if not segment:
                raise PathParseError("expected relation after '->'", pos + 1)
            raise PathParseError("expected '|' after relation", pos + 1)
        relation, _, name = segment.partition(BAR)
        if not relation:
            raise PathParseError("expected relation after '->'", pos + 1)
        _check_name(name, pos + len(relation) + len(BAR))
        relations.append(relation)
        names.append(name)
        pos += len(segment) + len(ARROW)

    return names, relations


def parse_path(s: str, graph: KnowledgeGraph) -> KgPath:
    """Parse a path string and resolve names to cuis (first-loaded cui wins)."""
    names, relations = split_path(s)
    concepts: list[str] = []
    for name in names:
        cui = graph.cui_for_name(name)
        if cui is None:
            raise PathResolutionError(f"unknown concept name '{name}'")
        concepts.append(cui)
    return KgPath(concepts=tuple(concepts), relations=tuple(relations), names=tuple(names))


def _check_name(name: str, pos: int) -> None:
    if not name:
        raise PathParseError("empty concept name", pos + 1)
    bar = name.find(BAR)
    if bar >= 0:
        raise PathParseError(f"reserved character '{BAR}' in concept name", pos + bar + 1)
