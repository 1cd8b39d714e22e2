"""Reporting-citation extraction.

Three gates turn body sentences into citation instances: marker parsing
(numeric brackets and author-year parentheticals), the single-source
terminal-marker rule, and the background-citation classifier.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from .corpus import Paper

NUMERIC_BRACKET = "numeric_bracket"
AUTHOR_YEAR_PAREN = "author_year_paren"

BACKGROUND_THRESHOLD = 0.5

# Word forms that signal a sentence reports a finding. Exact token matches
# only: "finding" must not match "find".
BACKGROUND_CUES = frozenset(
    {
        "show", "shown", "showed",
        "found", "find",
        "demonstrate", "demonstrated",
        "report", "reported",
        "reveal", "revealed",
        "suggest", "suggested",
        "indicate", "indicated",
        "observe", "observed",
        "estimate", "estimated",
    }
)

_TERMINAL_TRAILING = set(".!?\"'”’") | set(" \t\n\r\f\v")

_BRACKET = re.compile(r"\[([^\[\]]*)\]")
_PAREN = re.compile(r"\(([^()]*)\)")
_NUMERIC_PART = re.compile(r"^\s*(\d+)\s*(?:[-–]\s*(\d+)\s*)?$")
_AUTHOR_YEAR = re.compile(
    r"^\s*(?P<name>[^\d;]+?),?\s+(?P<year>[12][0-9]{3})[a-z]?\s*$"
)
_WORD = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class CitationMarker:
    span: tuple[int, int]
    style: str
    keys: tuple[str, ...]


@dataclass
class CitationInstance:
    citing_paper_id: str
    sentence_index: int
    sentence_text: str
    cited_paper_id: str
    marker: CitationMarker
    is_background: bool
    background_confidence: float


def normalize_marker_key(key: str) -> str:
    """Canonical form used to match in-text keys against bibliography keys."""
    text = key.strip()
    if text.isdigit():
        return str(int(text))
    text = text.lower()
    text = re.sub(r"\bet\s+al\.?", " ", text)
    text = re.sub(r"[.,]", " ", text)
    return " ".join(text.split())


def _expand_numeric(content: str) -> tuple[str, ...] | None:
    keys: list[str] = []
    for part in content.split(","):
        match = _NUMERIC_PART.match(part)
        if not match:
            return None
        lo = int(match.group(1))
        if match.group(2) is None:
            keys.append(str(lo))
        else:
            hi = int(match.group(2))
            if hi < lo:
                return None
            keys.extend(str(k) for k in range(lo, hi + 1))
    return tuple(keys) if keys else None


def _parse_author_year_group(group: str) -> str | None:
    match = _AUTHOR_YEAR.match(group)
    if not match:
        return None
    name = match.group("name").strip().rstrip(",")
    if not name or not name[0].isupper():
        return None
    if any(ch.isdigit() for ch in name):
        return None
    return normalize_marker_key(f"{name} {match.group('year')}")


def parse_markers(sentence: str) -> list[CitationMarker]:
    """Find citation markers, ordered by span start.

    Numeric bracket lists and ranges expand to one key per reference;
    author-year parentheticals yield one key per semicolon-separated group.
    Unparseable bracketed or parenthesized spans yield no marker.
    """
    markers: list[CitationMarker] = []
    for match in _BRACKET.finditer(sentence):
        keys = _expand_numeric(match.group(1))
        if keys:
            markers.append(CitationMarker(span=match.span(), style=NUMERIC_BRACKET, keys=keys))
    for match in _PAREN.finditer(sentence):
        groups = match.group(1).split(";")
        keys = []
        for group in groups:
            key = _parse_author_year_group(group)
            if key is None:
                keys = []
                break
            keys.append(key)
        if keys:
            markers.append(
                CitationMarker(span=match.span(), style=AUTHOR_YEAR_PAREN, keys=tuple(keys))
            )
    markers.sort(key=lambda m: m.span)
    return markers


def is_terminal(sentence: str, marker: CitationMarker) -> bool:
    """True when only sentence-final punctuation, whitespace, or closing
    quotes follow the marker."""
    return all(ch in _TERMINAL_TRAILING for ch in sentence[marker.span[1] :])


def is_single_source_reporting_candidate(sentence: str) -> CitationMarker | None:
    """Return the marker iff the sentence has exactly one marker, terminal,
    resolving to exactly one key."""
    markers = parse_markers(sentence)
    if len(markers) != 1:
        return None
    marker = markers[0]
    if len(marker.keys) != 1 or not is_terminal(sentence, marker):
        return None
    return marker


class BackgroundClassifier(Protocol):
    """Supplies the probability that each sentence is a background citation."""

    def confidences(self, sentences: Sequence[str]) -> list[float]: ...


class BaselineBackgroundClassifier:
    """Deterministic cue-lexicon stand-in with the model classifier's interface."""

    name = "baseline-cue-lexicon"
    version = "1"

    def confidences(self, sentences: Sequence[str]) -> list[float]:
        out = []
        for sentence in sentences:
            tokens = _WORD.findall(sentence.lower())
            out.append(1.0 if any(t in BACKGROUND_CUES for t in tokens) else 0.0)
        return out


def classify_background(
    sentences: Sequence[str], classifier: BackgroundClassifier
) -> list[tuple[bool, float]]:
    """Label each sentence, order preserved; label = confidence >= 0.5."""
    confidences = classifier.confidences(sentences)
    return [(c >= BACKGROUND_THRESHOLD, c) for c in confidences]


def rule_filter_candidates(paper: Paper) -> list[tuple[int, str, CitationMarker]]:
    """Apply the single-source terminal-marker rule to every body sentence."""
    candidates = []
    for index, sentence in enumerate(paper.body_sentences):
        if not sentence:
            continue
        marker = is_single_source_reporting_candidate(sentence)
        if marker is not None:
            candidates.append((index, sentence, marker))
    return candidates


def resolve_reference_map(paper: Paper) -> dict[str, str]:
    """Normalized marker key -> cited paper id, for resolvable entries."""
    table = {}
    for ref in paper.references:
        if ref.cited_paper_id is not None:
            table[normalize_marker_key(ref.marker_key)] = ref.cited_paper_id
    return table


def assemble_instances(
    paper: Paper,
    candidates: Sequence[tuple[int, str, CitationMarker]],
    labels: Sequence[tuple[bool, float]],
    counters: Counter | None = None,
) -> list[CitationInstance]:
    """Turn rule-filtered candidates plus background labels into instances,
    resolving marker keys against the bibliography. Drops are counted,
    never silent."""
    counters = counters if counters is not None else Counter()
    table = resolve_reference_map(paper)
    instances: list[CitationInstance] = []
    for (index, sentence, marker), (is_bg, confidence) in zip(candidates, labels):
        if not is_bg:
            counters["background_rejected"] += 1
            continue
        cited = table.get(marker.keys[0])
        if cited is None:
            counters["skipped_unresolved_reference"] += 1
            continue
        if cited == paper.paper_id:
            counters["skipped_self_reference"] += 1
            continue
        counters["instances_emitted"] += 1
        instances.append(
            CitationInstance(
                citing_paper_id=paper.paper_id,
                sentence_index=index,
                sentence_text=sentence,
                cited_paper_id=cited,
                marker=marker,
                is_background=True,
                background_confidence=confidence,
            )
        )
    return instances


def extract_reporting_citations(
    paper: Paper,
    classifier: BackgroundClassifier,
    counters: Counter | None = None,
) -> list[CitationInstance]:
    """Full per-paper extraction: rule filter, background gate, key resolution."""
    counters = counters if counters is not None else Counter()
    counters["sentences_total"] += len(paper.body_sentences)
    candidates = rule_filter_candidates(paper)
    counters["rule_candidates"] += len(candidates)
    counters["rule_rejected"] += len(paper.body_sentences) - len(candidates)
    if not candidates:
        return []
    labels = classify_background([s for _, s, _ in candidates], classifier)
    return assemble_instances(paper, candidates, labels, counters)


# --- line-delimited record form ------------------------------------------------


def instance_to_record(instance: CitationInstance) -> dict:
    return {
        "citing_paper_id": instance.citing_paper_id,
        "sentence_index": instance.sentence_index,
        "sentence_text": instance.sentence_text,
        "cited_paper_id": instance.cited_paper_id,
        "marker_span": list(instance.marker.span),
        "marker_style": instance.marker.style,
        "background_confidence": instance.background_confidence,
    }


def instance_from_record(record: dict) -> CitationInstance:
    span = (int(record["marker_span"][0]), int(record["marker_span"][1]))
    sentence = str(record["sentence_text"])
    marker = None
    for candidate in parse_markers(sentence):
        if candidate.span == span:
            marker = candidate
            break
    if marker is None:
        # Span written by us always re-parses; tolerate hand-edited files.
        marker = CitationMarker(span=span, style=str(record["marker_style"]), keys=("?",))
    return CitationInstance(
        citing_paper_id=str(record["citing_paper_id"]),
        sentence_index=int(record["sentence_index"]),
        sentence_text=sentence,
        cited_paper_id=str(record["cited_paper_id"]),
        marker=marker,
        is_background=True,
        background_confidence=float(record["background_confidence"]),
    )
