"""
Deterministic synthetic corpus: a small concept graph plus clinical notes.

Concepts get made-up two-word names whose words occur nowhere else, so a
note mentions exactly the concepts it was written from. Graph shape:

    finding -associated_with|manifestation_of-> disease
    finding -has_member-> hub -member_of-> disease
    finding -may_be_treated_by-> drug

Diseases are sinks. Hubs (T170) and drugs (T121) fall outside the default
semantic filter, so they only ever appear as intermediates. Each note names
its gold disease, the findings supporting it, hubs on its positive paths,
some distractor findings and a drug. The last note's gold cui is not in the
graph.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..core.knowledge_graph import Concept, RelationEdge
from ..io.jsonl import atomic_open
from ..io.notes import ClinicalNote, write_notes
from ..logging.logging_config import get_logger
from .seeding import substream

logger = get_logger(__name__)

DEFAULT_NUM_NOTES = 20
UNMAPPABLE_CUI = "C9999999"

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

N_DISEASES = 12
FINDINGS_PER_DISEASE = 3
N_HUBS = 4
N_DRUGS = 6
SUPPORTING_PER_NOTE = 3
DISTRACTORS_PER_NOTE = 3


@dataclass
class SyntheticCorpus:
    concepts: list[Concept]
    edges: list[RelationEdge]
    notes: list[ClinicalNote]


def make_synthetic_corpus(seed: int = 0, num_notes: int = DEFAULT_NUM_NOTES) -> SyntheticCorpus:
    rng = substream(seed, "synthetic")
    n_findings = N_DISEASES * FINDINGS_PER_DISEASE
    words = iter(_unique_words(rng, 2 * (N_DISEASES + n_findings + N_HUBS + N_DRUGS)))
    serial = iter(range(1, 10_000))

    def new_concept(semantic_type: str, synonym: bool = False) -> Concept:
        first, second = next(words), next(words)
        return Concept(
            cui=f"C{next(serial):07d}",
            preferred_name=f"{first.capitalize()} {second}",
            semantic_type=semantic_type,
            synonyms=(f"{second} {first}",) if synonym else (),
        )

    diseases = [new_concept("T047") for _ in range(N_DISEASES)]
    hubs = [new_concept("T170") for _ in range(N_HUBS)]
    drugs = [new_concept("T121") for _ in range(N_DRUGS)]
    findings = [
        new_concept("T033" if i % 2 == 0 else "T184", synonym=True) for i in range(n_findings)
    ]

    edges: set[RelationEdge] = set()
    for h, hub in enumerate(hubs):
        for d in range(h, N_DISEASES, N_HUBS):
            edges.add(RelationEdge(hub.cui, "member_of", diseases[d].cui))
    for i, finding in enumerate(findings):
        d = i // FINDINGS_PER_DISEASE
        relation = "associated_with" if rng.random() < 0.5 else "manifestation_of"
        edges.add(RelationEdge(finding.cui, relation, diseases[d].cui))
        other = int(rng.integers(N_DISEASES - 1))
        other = other + 1 if other >= d else other
        edges.add(RelationEdge(finding.cui, "associated_with", diseases[other].cui))
        if rng.random() < 0.5:
            edges.add(RelationEdge(finding.cui, "has_member", hubs[d % N_HUBS].cui))
        if rng.random() < 0.5:
            edges.add(RelationEdge(finding.cui, "may_be_treated_by", drugs[d % N_DRUGS].cui))

    by_cui = {c.cui: c for c in (*diseases, *hubs, *drugs, *findings)}
    out_edges: dict[str, list[RelationEdge]] = {}
    for edge in edges:
        out_edges.setdefault(edge.src, []).append(edge)

    notes = []
    for n in range(num_notes):
        d = n % N_DISEASES
        gold = diseases[d]
        own = findings[d * FINDINGS_PER_DISEASE : (d + 1) * FINDINGS_PER_DISEASE]
        supporting = [own[i] for i in rng.permutation(len(own))[:SUPPORTING_PER_NOTE]]
        others = [f for i, f in enumerate(findings) if i // FINDINGS_PER_DISEASE != d]
        distractors = [others[i] for i in rng.choice(len(others), DISTRACTORS_PER_NOTE, False)]

        mentioned = [*supporting, *distractors]
        hub_cuis = sorted(
            {
                e.dst
                for f in mentioned
                for e in out_edges.get(f.cui, [])
                if e.relation == "has_member"
                and RelationEdge(e.dst, "member_of", gold.cui) in edges
            }
        )
        drug = drugs[int(rng.integers(N_DRUGS))]

        text = " ".join(
            [
                f"Patient presents with {_names(supporting[:2])}.",
                f"Exam notable for {supporting[2].preferred_name.lower()}."
                if len(supporting) > 2
                else "",
                f"Also reports {_names(distractors)}.",
                f"Workup reviewed under {_names([by_cui[c] for c in hub_cuis])}."
                if hub_cuis
                else "",
                f"Started on {drug.preferred_name.lower()}.",
                f"Assessment: {gold.preferred_name}.",
            ]
        )
        gold_cui = UNMAPPABLE_CUI if n == num_notes - 1 and num_notes > 1 else gold.cui
        notes.append(
            ClinicalNote(
                note_id=f"note-{n + 1:03d}",
                text=" ".join(text.split()),
                gold_diagnoses=(gold_cui,),
            )
        )

    concepts = [*diseases, *hubs, *drugs, *findings]
    return SyntheticCorpus(concepts=concepts, edges=sorted(edges), notes=notes)


def write_synthetic_corpus(
    out_dir: str | Path, seed: int = 0, num_notes: int = DEFAULT_NUM_NOTES
) -> dict[str, Path]:
    """Write concepts.tsv, edges.tsv and notes.jsonl under *out_dir*."""
    corpus = make_synthetic_corpus(seed, num_notes)
    out = Path(out_dir)
    paths = {
        "concepts": out / "concepts.tsv",
        "edges": out / "edges.tsv",
        "notes": out / "notes.jsonl",
    }

    concepts_df = pd.DataFrame(
        [
            {
                "cui": c.cui,
                "preferred_name": c.preferred_name,
                "semantic_type": c.semantic_type,
                "synonyms": ";".join(c.synonyms),
            }
            for c in corpus.concepts
        ]
    )
    edges_df = pd.DataFrame(
        [{"src": e.src, "relation": e.relation, "dst": e.dst} for e in corpus.edges]
    )
    for df, key in ((concepts_df, "concepts"), (edges_df, "edges")):
        with atomic_open(paths[key]) as fh:
            df.to_csv(fh, sep="\t", index=False, quoting=csv.QUOTE_NONE, lineterminator="\n")
    write_notes(corpus.notes, paths["notes"])

    logger.info(
        "Wrote synthetic corpus: %d concepts, %d edges, %d notes to %s",
        len(corpus.concepts),
        len(corpus.edges),
        len(corpus.notes),
        out,
    )
    return paths


def _unique_words(rng: np.random.Generator, n: int) -> list[str]:
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    seen: set[str] = set()
    words: list[str] = []
    while len(words) < n:
        word = "".join(syllables[i] for i in rng.integers(len(syllables), size=3))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _names(concepts: list[Concept]) -> str:
    names = [c.preferred_name.lower() for c in concepts]
    if len(names) <= 1:
        return "".join(names)
    return ", ".join(names[:-1]) + " and " + names[-1]
