"""
Approximate dictionary matching of concept names against clinical notes.

Token windows of 1..n_max tokens are compared to every normalized concept
name or synonym by token-set Jaccard similarity. Windows at or above the
threshold become mention candidates; overlapping candidates are resolved
greedily by score, then span length, then leftmost start.
"""

from __future__ import annotations

import re
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from ..logging.logging_config import get_logger
from .knowledge_graph import KnowledgeGraph

logger = get_logger(__name__)

DEFAULT_N_MAX = 6
DEFAULT_THRESHOLD = 0.7

# Letters and digits; underscore counts as punctuation
_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercased runs of Unicode letters and digits."""
    return _TOKEN.findall(text.lower())


def normalize(text: str) -> str:
    """Lowercase, punctuation to spaces, whitespace collapsed."""
    return " ".join(tokenize(text))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


@dataclass(frozen=True)
class TermIndex:
    """Normalized term → cuis, plus the matcher settings."""

    entries: Mapping[str, frozenset[str]]
    n_max: int = DEFAULT_N_MAX
    threshold: float = DEFAULT_THRESHOLD
    _postings: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _key_tokens: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 1 <= self.n_max <= 10:
            raise ValueError(f"n_max must be in [1, 10], got {self.n_max}")
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        # token → keys sharing it; a window with no shared token scores 0
        postings: dict[str, set[str]] = defaultdict(set)
        for key in self.entries:
            for token in key.split():
                postings[token].add(key)
        object.__setattr__(
            self, "_postings", {t: tuple(sorted(keys)) for t, keys in postings.items()}
        )
        object.__setattr__(
            self, "_key_tokens", {key: frozenset(key.split()) for key in self.entries}
        )

    def __len__(self) -> int:
        return len(self.entries)

    def candidate_keys(self, tokens: frozenset[str]) -> set[str]:
        found: set[str] = set()
        for token in tokens:
            found.update(self._postings.get(token, ()))
        return found

    def key_tokens(self, key: str) -> frozenset[str]:
        return self._key_tokens[key]


@dataclass(frozen=True, slots=True)
class Mention:
    """A matched concept occurrence; ``span`` is [start, end) into the note."""

    cui: str
    span: tuple[int, int]
    surface: str
    score: float
    term: str

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def end(self) -> int:
        return self.span[1]


def build_index(
    graph: KnowledgeGraph,
    n_max: int = DEFAULT_N_MAX,
    threshold: float = DEFAULT_THRESHOLD,
) -> TermIndex:
    """Index every preferred name and synonym of the graph."""
    entries: dict[str, set[str]] = defaultdict(set)
    for concept in graph.concepts.values():
        for text in (concept.preferred_name, *concept.synonyms):
            key = normalize(text)
            if key:
                entries[key].add(concept.cui)

    index = TermIndex(
        entries=MappingProxyType({k: frozenset(v) for k, v in entries.items()}),
        n_max=n_max,
        threshold=threshold,
    )
    logger.debug(
        "Built term index: %d keys (n_max=%d, threshold=%.2f)", len(index), n_max, threshold
    )
    return index


def extract_mentions(index: TermIndex, note_text: str) -> list[Mention]:
    """Find concept mentions in *note_text*, sorted by span start."""
    tokens = [(m.start(), m.end(), m.group().lower()) for m in _TOKEN.finditer(note_text)]
    if not tokens or not index.entries:
        return []

    # span → {cui: (score, term)}
    by_span: dict[tuple[int, int], dict[str, tuple[float, str]]] = defaultdict(dict)

    for i in range(len(tokens)):
        for n in range(1, index.n_max + 1):
            if i + n > len(tokens):
                break
            window = frozenset(tok for _, _, tok in tokens[i : i + n])
            span = (tokens[i][0], tokens[i + n - 1][1])
            for key in sorted(index.candidate_keys(window)):
                score = jaccard(window, index.key_tokens(key))
                if score < index.threshold:
                    continue
                for cui in index.entries[key]:
                    best = by_span[span].get(cui)
                    if best is None or score > best[0]:
                        by_span[span][cui] = (score, key)

    ranked = sorted(
        by_span.items(),
        key=lambda item: (
            -max(score for score, _ in item[1].values()),
            -(item[0][1] - item[0][0]),
            item[0][0],
        ),
    )

    taken: list[tuple[int, int]] = []
    mentions: list[Mention] = []
    for span, matches in ranked:
        if any(span[0] < end and start < span[1] for start, end in taken):
            continue
        taken.append(span)
        surface = note_text[span[0] : span[1]]
        for cui, (score, key) in sorted(matches.items()):
            mentions.append(Mention(cui=cui, span=span, surface=surface, score=score, term=key))

    mentions.sort(key=lambda m: (m.start, m.end, m.cui))
    return mentions
