"""Discourse classification of cited-paper sentences and claim selection.

Sentences labeled "results" or "conclusions" are the candidate claims that
citing sentences get matched against.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from .corpus import Paper

DISCOURSE_CATEGORIES = ("methods", "background", "objective", "results", "conclusions")
CLAIM_CATEGORIES = frozenset({"results", "conclusions"})

# Cue phrases per category; first match wins in _PRIORITY order, default is
# background. Substring match on the lowercased sentence.
_CUES = {
    "conclusions": ("in conclusion", "we conclude", "these findings suggest", "overall"),
    "results": ("we find", "results show", "was associated with", "significantly"),
    "methods": ("we used", "recruited", "was measured"),
    "objective": ("we aim", "the goal of"),
}
_PRIORITY = ("conclusions", "results", "methods", "objective")


@dataclass
class ClaimSentence:
    paper_id: str
    sentence_index: int
    sentence_text: str
    category: str
    confidence: float


class DiscourseClassifier(Protocol):
    """Maps each sentence to one of the five discourse categories."""

    def classify(self, sentences: Sequence[str]) -> list[tuple[str, float]]: ...


class BaselineDiscourseClassifier:
    """Deterministic cue-phrase stand-in with the model classifier's interface."""

    name = "baseline-discourse-cues"
    version = "1"

    def classify(self, sentences: Sequence[str]) -> list[tuple[str, float]]:
        out = []
        for sentence in sentences:
            lowered = sentence.lower()
            category = "background"
            for candidate in _PRIORITY:
                if any(cue in lowered for cue in _CUES[candidate]):
                    category = candidate
                    break
            out.append((category, 1.0))
        return out


def classify_discourse(
    sentences: Sequence[str], classifier: DiscourseClassifier
) -> list[tuple[str, float]]:
    """One (category, confidence) per sentence, order preserved."""
    results = classifier.classify(sentences)
    for category, confidence in results:
        if category not in DISCOURSE_CATEGORIES:
            raise ValueError(f"unknown discourse category {category!r}")
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence out of range: {confidence}")
    return results


def select_claims(
    paper: Paper,
    classifier: DiscourseClassifier,
    counters: Counter | None = None,
) -> list[ClaimSentence]:
    """Keep exactly the results/conclusions sentences, in document order."""
    counters = counters if counters is not None else Counter()
    counters["sentences_total"] += len(paper.body_sentences)
    if not paper.body_sentences:
        return []
    labels = classify_discourse(paper.body_sentences, classifier)
    claims = []
    for index, (sentence, (category, confidence)) in enumerate(
        zip(paper.body_sentences, labels)
    ):
        if category in CLAIM_CATEGORIES:
            counters["claims_emitted"] += 1
            claims.append(
                ClaimSentence(
                    paper_id=paper.paper_id,
                    sentence_index=index,
                    sentence_text=sentence,
                    category=category,
                    confidence=confidence,
                )
            )
        else:
            counters["non_claim_sentences"] += 1
    return claims


def claim_to_record(claim: ClaimSentence) -> dict:
    return {
        "paper_id": claim.paper_id,
        "sentence_index": claim.sentence_index,
        "sentence_text": claim.sentence_text,
        "category": claim.category,
        "confidence": claim.confidence,
    }


def claim_from_record(record: dict) -> ClaimSentence:
    return ClaimSentence(
        paper_id=str(record["paper_id"]),
        sentence_index=int(record["sentence_index"]),
        sentence_text=str(record["sentence_text"]),
        category=str(record["category"]),
        confidence=float(record["confidence"]),
    )
