"""
Typed directed knowledge graph with semantic-type metadata.

Graphs are read from two TSV files:

    concepts.tsv   cui <TAB> preferred_name <TAB> semantic_type <TAB> syn1;syn2;...
    edges.tsv      src <TAB> relation <TAB> dst

A header row (first field ``cui`` / ``src``) is tolerated. A loaded graph is
immutable and safe to share between worker threads.
"""

from __future__ import annotations

import csv
import re
import time
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import pandas as pd

from ..config.config_manager import DEFAULT_SEMANTIC_TYPES, SEMANTIC_WILDCARD
from ..logging.logging_config import get_logger
from .errors import ConceptLookupError, GraphLoadError

logger = get_logger(__name__)

# Reserved by the path grammar: NAME ( "->" REL "|" NAME )*
ARROW = "->"
BAR = "|"

_SEMANTIC_TYPE = re.compile(r"^T\d{3}$")

_CONCEPT_COLUMNS = ["cui", "preferred_name", "semantic_type", "synonyms"]
_EDGE_COLUMNS = ["src", "relation", "dst"]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Concept:
    """A graph node."""

    cui: str
    preferred_name: str
    semantic_type: str
    synonyms: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True, order=True)
class RelationEdge:
    """A directed, labeled edge. Ordering is (src, relation, dst)."""

    src: str
    relation: str
    dst: str


@dataclass(frozen=True)
class SemanticTypeFilter:
    """Allowed semantic types; ``allowed=None`` admits every type."""

    allowed: frozenset[str] | None = field(
        default_factory=lambda: frozenset(DEFAULT_SEMANTIC_TYPES)
    )

    @classmethod
    def all_types(cls) -> SemanticTypeFilter:
        return cls(allowed=None)

    @classmethod
    def from_codes(cls, codes: Iterable[str] | None) -> SemanticTypeFilter:
        """Build from config: None → default set, ``["*"]`` → wildcard."""
        if codes is None:
            return cls()
        codes = list(codes)
        if SEMANTIC_WILDCARD in codes:
            return cls.all_types()
        return cls(allowed=frozenset(codes))


@dataclass(frozen=True)
class KnowledgeGraph:
    """Validated, immutable graph.

    ``out_edges`` holds every concept (sinks map to an empty tuple) with
    neighbors sorted by relation, then dst.
    """

    concepts: Mapping[str, Concept]
    out_edges: Mapping[str, tuple[RelationEdge, ...]]
    name_index: Mapping[str, tuple[str, ...]]

    @property
    def node_count(self) -> int:
        return len(self.concepts)

    @property
    def edge_count(self) -> int:
        return sum(len(edges) for edges in self.out_edges.values())

    def __contains__(self, cui: object) -> bool:
        return cui in self.concepts

    def concept(self, cui: str) -> Concept:
        try:
            return self.concepts[cui]
        except KeyError:
            raise ConceptLookupError(f"unknown cui {cui}") from None

    def neighbors(self, cui: str) -> tuple[RelationEdge, ...]:
        try:
            return self.out_edges[cui]
        except KeyError:
            raise ConceptLookupError(f"unknown cui {cui}") from None

    def has_edge(self, src: str, relation: str, dst: str) -> bool:
        return RelationEdge(src, relation, dst) in self.out_edges.get(src, ())

    def cuis_for_name(self, name: str) -> tuple[str, ...]:
        """All cuis with this exact preferred name, in load order."""
        return self.name_index.get(name, ())

    def cui_for_name(self, name: str) -> str | None:
        """First-loaded cui with this preferred name."""
        cuis = self.name_index.get(name)
        return cuis[0] if cuis else None


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def neighbors(graph: KnowledgeGraph, cui: str) -> list[RelationEdge]:
    """Out-edges of *cui*, ordered by relation then dst."""
    return list(graph.neighbors(cui))


def passes_filter(concept: Concept, type_filter: SemanticTypeFilter) -> bool:
    """True iff the concept's semantic type is admitted by the filter."""
    if type_filter.allowed is None:
        return True
    return concept.semantic_type in type_filter.allowed


def build_graph(
    concepts: Iterable[Concept],
    edges: Iterable[RelationEdge],
    *,
    undirected: bool = False,
) -> KnowledgeGraph:
    """Validate concepts and edges and assemble an immutable graph.

    With ``undirected`` every edge is also admitted in reverse under the same
    relation label, unless that triple already exists.
    """
    concept_map: dict[str, Concept] = {}
    name_index: dict[str, list[str]] = defaultdict(list)

    for concept in concepts:
        _check_concept(concept)
        if concept.cui in concept_map:
            raise GraphLoadError(f"duplicate cui {concept.cui}")
        concept_map[concept.cui] = concept
        name_index[concept.preferred_name].append(concept.cui)

    for name, cuis in name_index.items():
        if len(cuis) > 1:
            logger.warning(
                "Preferred name '%s' shared by %d cuis (%s); paths resolve it to %s",
                name,
                len(cuis),
                ", ".join(cuis),
                cuis[0],
            )

    adjacency: dict[str, set[RelationEdge]] = {cui: set() for cui in concept_map}
    for edge in edges:
        triple = (edge.src, edge.relation, edge.dst)
        _check_relation(edge)
        missing = [c for c in (edge.src, edge.dst) if c not in concept_map]
        if missing:
            raise GraphLoadError(
                f"dangling edge {triple}: unknown cui {', '.join(missing)}"
            )
        if edge.src == edge.dst:
            raise GraphLoadError(f"self-loop edge {triple} rejected")
        if edge in adjacency[edge.src]:
            raise GraphLoadError(f"duplicate edge {triple}")
        adjacency[edge.src].add(edge)

    if undirected:
        reversed_edges = [
            RelationEdge(e.dst, e.relation, e.src) for edges_ in adjacency.values() for e in edges_
        ]
        for rev in reversed_edges:
            adjacency[rev.src].add(rev)

    out_edges = {
        cui: tuple(sorted(edges_, key=lambda e: (e.relation, e.dst)))
        for cui, edges_ in adjacency.items()
    }

    return KnowledgeGraph(
        concepts=MappingProxyType(concept_map),
        out_edges=MappingProxyType(out_edges),
        name_index=MappingProxyType({k: tuple(v) for k, v in name_index.items()}),
    )


def load_graph(
    concept_file: str | Path,
    edge_file: str | Path,
    *,
    undirected: bool = False,
) -> KnowledgeGraph:
    """Load and validate a graph from its concept and edge TSV files."""
    t0 = time.time()
    concept_rows = _read_tsv(concept_file, _CONCEPT_COLUMNS, header_token="cui")
    edge_rows = _read_tsv(edge_file, _EDGE_COLUMNS, header_token="src")

    concepts = [
        Concept(
            cui=row.cui,
            preferred_name=row.preferred_name,
            semantic_type=row.semantic_type,
            synonyms=tuple(s.strip() for s in row.synonyms.split(";") if s.strip()),
        )
        for row in concept_rows.itertuples(index=False)
    ]
    edges = [
        RelationEdge(src=row.src, relation=row.relation, dst=row.dst)
        for row in edge_rows.itertuples(index=False)
    ]

    graph = build_graph(concepts, edges, undirected=undirected)
    logger.info(
        "Loaded graph: %d concepts, %d edges%s (%.2fs)",
        graph.node_count,
        graph.edge_count,
        " (undirected)" if undirected else "",
        time.time() - t0,
    )
    return graph


# ---------------------------------------------------------------------------
# Internals
# ---------------------------------------------------------------------------


def _read_tsv(path: str | Path, columns: list[str], header_token: str) -> pd.DataFrame:
    p = Path(path)
    if not p.is_file():
        raise GraphLoadError(f"graph file not found: {p}")
    try:
        df = pd.read_csv(
            p,
            sep="\t",
            header=None,
            names=columns,
            dtype=str,
            keep_default_na=False,
            quoting=csv.QUOTE_NONE,
            encoding="utf-8",
            skip_blank_lines=True,
        )
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise GraphLoadError(f"cannot parse {p}: {exc}") from exc
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)

    df = df.fillna("")
    if not df.empty and df.iloc[0, 0] == header_token:
        df = df.iloc[1:]
    for col in columns:
        df[col] = df[col].str.strip()
    return df.reset_index(drop=True)


def _check_concept(concept: Concept) -> None:
    if not concept.cui:
        raise GraphLoadError(f"empty cui for concept '{concept.preferred_name}'")
    for text in (concept.preferred_name, *concept.synonyms):
        if ARROW in text or BAR in text:
            raise GraphLoadError(
                f"reserved character ('{ARROW}' or '{BAR}') in name '{text}' of {concept.cui}"
            )
    if not concept.preferred_name:
        raise GraphLoadError(f"empty preferred_name for {concept.cui}")
    if not _SEMANTIC_TYPE.match(concept.semantic_type):
        raise GraphLoadError(
            f"invalid semantic_type '{concept.semantic_type}' for {concept.cui}"
        )


def _check_relation(edge: RelationEdge) -> None:
    if not edge.relation:
        raise GraphLoadError(f"empty relation in edge {(edge.src, edge.relation, edge.dst)}")
    if ARROW in edge.relation or BAR in edge.relation:
        raise GraphLoadError(
            f"reserved character in relation of edge {(edge.src, edge.relation, edge.dst)}"
        )
