"""
Graph validity oracle for path strings, and the dataset audit built on it.

A path string is VALID for a note when some assignment of its names to cuis
forms an existing simple directed path that ends at one of the note's gold
cuis. Names shared by several cuis are tried in turn.
"""

from __future__ import annotations

from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

from ..core.errors import InvariantViolation, PathParseError
from ..core.knowledge_graph import KnowledgeGraph
from ..core.path_engine import split_path
from ..core.task_builder import TaskInstance
from ..logging.logging_config import get_logger

logger = get_logger(__name__)


class PathValidity(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    MALFORMED = "malformed"


def verify_path_validity(
    graph: KnowledgeGraph, note_gold: Collection[str], path_string: str
) -> PathValidity:
    """Re-apply the positive-path rule to a rendered path."""
    try:
        names, relations = split_path(path_string)
    except PathParseError:
        return PathValidity.MALFORMED

    if not relations:
        return PathValidity.INVALID
    choices = [graph.cuis_for_name(name) for name in names]
    if any(not c for c in choices):
        return PathValidity.INVALID

    gold = set(note_gold)
    last = len(names) - 1

    def extend(i: int, cui: str, used: set[str]) -> bool:
        if i == last:
            return cui in gold
        for nxt in choices[i + 1]:
            if nxt in used or not graph.has_edge(cui, relations[i], nxt):
                continue
            used.add(nxt)
            if extend(i + 1, nxt, used):
                return True
            used.discard(nxt)
        return False

    for first in choices[0]:
        if extend(0, first, {first}):
            return PathValidity.VALID
    return PathValidity.INVALID


@dataclass
class AuditReport:
    checked: int = 0
    disagreements: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements


def audit_dataset(
    graph: KnowledgeGraph,
    instances: Iterable[TaskInstance],
    gold_by_note: Mapping[str, Collection[str]],
    *,
    raise_on_disagreement: bool = True,
) -> AuditReport:
    """Check every candidate (and every NHP/PC completion) against the oracle.

    Candidates at ``meta.positive_indices`` must be VALID and all others
    INVALID; ``partial_path + target`` must be VALID.
    """
    report = AuditReport()
    for n, inst in enumerate(instances):
        gold = gold_by_note.get(inst.note_id, ())
        if inst.task.is_selection:
            positives = set(inst.positive_indices)
            checks = [
                (c, PathValidity.VALID if i in positives else PathValidity.INVALID)
                for i, c in enumerate(inst.candidates)
            ]
        else:
            checks = [((inst.partial_path or "") + inst.target, PathValidity.VALID)]

        for path_string, expected in checks:
            report.checked += 1
            got = verify_path_validity(graph, gold, path_string)
            if got is not expected:
                report.disagreements.append(
                    f"{inst.task.value} instance {n} (note {inst.note_id}): "
                    f"'{path_string}' expected {expected.value}, oracle says {got.value}"
                )

    if report.disagreements:
        for line in report.disagreements[:10]:
            logger.error("Audit: %s", line)
        if raise_on_disagreement:
            raise InvariantViolation(
                f"dataset audit found {len(report.disagreements)} oracle disagreement(s) "
                f"in {report.checked} checks"
            )
    else:
        logger.debug("Audit passed: %d checks", report.checked)
    return report
