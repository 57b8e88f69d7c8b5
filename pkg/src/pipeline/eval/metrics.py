"""
Text metrics: ROUGE-1, ROUGE-L (F-measure, no stemming) and exact match.

Scoring uses ``rouge_score`` with the concept matcher's tokenizer (lowercased
runs of Unicode letters and digits), so non-ASCII notes score like ASCII ones.
Empty against empty scores 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from rouge_score import rouge_scorer
from rouge_score.tokenizers import Tokenizer

from ..core.concept_matcher import tokenize


class UnicodeTokenizer(Tokenizer):
    def tokenize(self, text: str) -> list[str]:
        return tokenize(text)


_SCORER = rouge_scorer.RougeScorer(
    ["rouge1", "rougeL"], use_stemmer=False, tokenizer=UnicodeTokenizer()
)


class Metric(str, Enum):
    ROUGE1 = "rouge1"
    ROUGEL = "rougeL"
    EXACT = "exact"


@dataclass(frozen=True, slots=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def zero(cls) -> RougeScore:
        return cls(0.0, 0.0, 0.0)


def rouge_1(candidate: str, reference: str) -> RougeScore:
    """Clipped unigram overlap; P over the candidate, R over the reference."""
    return _score("rouge1", candidate, reference)


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest common token subsequence."""
    return _score("rougeL", candidate, reference)


def normalize_answer(text: str) -> str:
    return text.strip().casefold()


def exact_match(prediction: str, gold: str) -> int:
    return int(normalize_answer(prediction) == normalize_answer(gold))


def score(metric: Metric, candidate: str, reference: str) -> RougeScore:
    """Dispatch on *metric*; exact match reports its 0/1 in all three fields."""
    if metric is Metric.EXACT:
        em = float(exact_match(candidate, reference))
        return RougeScore(em, em, em)
    if metric is Metric.ROUGE1:
        return rouge_1(candidate, reference)
    return rouge_l(candidate, reference)


def _score(kind: str, candidate: str, reference: str) -> RougeScore:
    # rouge_score takes (target, prediction)
    s = _SCORER.score(reference, candidate)[kind]
    return RougeScore(precision=s.precision, recall=s.recall, f1=s.fmeasure)
