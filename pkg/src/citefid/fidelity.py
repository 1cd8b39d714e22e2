"""Sentence-pair fidelity scoring on the 1-5 information-change scale.

A citation's fidelity is the best (highest) score between the citing sentence
and any candidate claim of the cited paper. Scorers are pluggable; the
baseline is a deterministic token-overlap scorer with the same interface and
range as the learned model, so the whole pipeline runs model-free.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Protocol, Sequence

from .claims import ClaimSentence
from .extract import CitationInstance

SCORE_MIN = 1.0
SCORE_MAX = 5.0

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class ScorerId:
    name: str
    version: str


@dataclass
class PairRecord:
    """Citing sentence x best-matched cited claim, with the winning score."""

    citing_paper_id: str
    citing_sentence_index: int
    cited_paper_id: str
    matched_claim_index: int
    fidelity: float
    n_candidates: int
    scorer: ScorerId

    def __post_init__(self):
        if not SCORE_MIN <= self.fidelity <= SCORE_MAX:
            raise ValueError(f"fidelity {self.fidelity} outside [{SCORE_MIN}, {SCORE_MAX}]")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")


class Scorer(Protocol):
    id: ScorerId

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


def clamp_score(value: float) -> float:
    return min(SCORE_MAX, max(SCORE_MIN, value))


def _tokens(text: str) -> frozenset[str]:
    # Maximal runs of Latin letters/digits, lowercased, length-1 tokens dropped.
    return frozenset(t for t in _TOKEN.findall(text.lower()) if len(t) > 1)


class BaselineScorer:
    """Jaccard token-overlap scorer mapped onto [1, 5].

    score = 1 + 4 * |A intersect B| / |A union B|. Two empty token sets are
    identical (5.0); exactly one empty set is disjoint (1.0). Symmetric,
    bounded, and monotone in the overlap by construction.
    """

    id = ScorerId(name="baseline-jaccard", version="1")

    def score_pair(self, a: str, b: str) -> float:
        ta, tb = _tokens(a), _tokens(b)
        if not ta and not tb:
            return SCORE_MAX
        if not ta or not tb:
            return SCORE_MIN
        jaccard = len(ta & tb) / len(ta | tb)
        return 1.0 + 4.0 * jaccard

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.score_pair(a, b) for a, b in pairs]


def score_pair(a: str, b: str, scorer: Scorer) -> float:
    return scorer.score_batch([(a, b)])[0]


def score_batch(pairs: Sequence[tuple[str, str]], scorer: Scorer) -> list[float]:
    """Elementwise score_pair over the batch; never drops a partial batch."""
    scores = scorer.score_batch(list(pairs))
    if len(scores) != len(pairs):
        raise ValueError(f"scorer returned {len(scores)} scores for {len(pairs)} pairs")
    return scores


def best_match(
    citing: str, claims: Sequence[ClaimSentence], scorer: Scorer
) -> tuple[int, float]:
    """Arg-max claim for a citing sentence.

    Returns (claim sentence_index, score); ties go to the smallest
    sentence_index. Raises ValueError on an empty claim list (the caller
    skips that citation and counts it).
    """
    if not claims:
        raise ValueError("best_match requires at least one candidate claim")
    scores = score_batch([(citing, c.sentence_text) for c in claims], scorer)
    best_index = claims[0].sentence_index
    best_score = scores[0]
    for claim, score in zip(claims[1:], scores[1:]):
        if score > best_score or (score == best_score and claim.sentence_index < best_index):
            best_index = claim.sentence_index
            best_score = score
    return best_index, best_score


def build_pair_records(
    instances: Iterable[CitationInstance],
    claims_by_paper: Mapping[str, Sequence[ClaimSentence]],
    scorer: Scorer,
    counters: Counter | None = None,
) -> Iterator[PairRecord]:
    """One PairRecord per citation whose cited paper has candidate claims.

    Instances are normalized to (citing_paper_id, sentence_index) order, so
    output is deterministic under any input sharding. Citations without
    claims are skipped and counted.
    """
    counters = counters if counters is not None else Counter()
    ordered = sorted(instances, key=lambda i: (i.citing_paper_id, i.sentence_index))
    for instance in ordered:
        counters["instances_read"] += 1
        claims = claims_by_paper.get(instance.cited_paper_id)
        if not claims:
            counters["skipped_no_claims"] += 1
            continue
        index, score = best_match(instance.sentence_text, claims, scorer)
        counters["records_emitted"] += 1
        yield PairRecord(
            citing_paper_id=instance.citing_paper_id,
            citing_sentence_index=instance.sentence_index,
            cited_paper_id=instance.cited_paper_id,
            matched_claim_index=index,
            fidelity=score,
            n_candidates=len(claims),
            scorer=scorer.id,
        )


def pair_to_record(pair: PairRecord) -> dict:
    return {
        "citing_paper_id": pair.citing_paper_id,
        "citing_sentence_index": pair.citing_sentence_index,
        "cited_paper_id": pair.cited_paper_id,
        "matched_claim_index": pair.matched_claim_index,
        "fidelity": pair.fidelity,
        "n_candidates": pair.n_candidates,
        "scorer": {"name": pair.scorer.name, "version": pair.scorer.version},
    }


def pair_from_record(record: dict) -> PairRecord:
    return PairRecord(
        citing_paper_id=str(record["citing_paper_id"]),
        citing_sentence_index=int(record["citing_sentence_index"]),
        cited_paper_id=str(record["cited_paper_id"]),
        matched_claim_index=int(record["matched_claim_index"]),
        fidelity=float(record["fidelity"]),
        n_candidates=int(record["n_candidates"]),
        scorer=ScorerId(str(record["scorer"]["name"]), str(record["scorer"]["version"])),
    )
