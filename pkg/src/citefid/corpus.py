"""Document model, streaming corpus loader, sentence segmentation, citation graph.

Corpus files are UTF-8 line-delimited JSON, one paper per line. Records carry
either pre-segmented ``body_sentences`` or raw ``body_text`` that gets
segmented on load. Malformed records are skipped and counted, never fatal.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

PUBLICATION_TYPES = ("review", "journal", "conference", "other")

YEAR_MIN = 1500
YEAR_MAX = 2100


@dataclass(frozen=True)
class AuthorRef:
    author_id: str
    h_index: int
    position: int


@dataclass(frozen=True)
class ReferenceEntry:
    """One bibliography entry: the in-text marker key and, when the link
    resolved, the cited paper's id."""

    marker_key: str
    cited_paper_id: str | None = None


@dataclass
class Paper:
    paper_id: str
    title: str
    year: int
    field: str
    publication_type: str
    is_open_access: bool
    citation_count: int
    authors: list[AuthorRef]
    body_sentences: list[str]
    references: list[ReferenceEntry]


class RecordError(ValueError):
    """A single corpus line failed validation; the loader skips and counts it."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


# --- sentence segmentation ---------------------------------------------------

# Fixed abbreviation guard list; a terminator immediately after one of these
# (or after a lone capital letter initial) never ends a sentence.
_ABBREVIATIONS = ("et al.", "e.g.", "i.e.", "Fig.", "Eq.", "vs.", "Dr.", "No.")

_WS = re.compile(r"\s+")


def _is_guarded(text: str, dot_index: int) -> bool:
    prefix = text[: dot_index + 1]
    for abbr in _ABBREVIATIONS:
        if prefix.endswith(abbr):
            start = len(prefix) - len(abbr)
            if start == 0 or not prefix[start - 1].isalnum():
                return True
    # Initials such as "J." in "J. Smith".
    if dot_index >= 1 and prefix[-2].isupper() and prefix[-2].isalpha():
        if dot_index == 1 or not text[dot_index - 2].isalnum():
            return True
    return False


def segment_sentences(body: str) -> list[str]:
    """Split plain text into sentences.

    Splits after ".", "!" or "?" followed by whitespace and an uppercase
    letter or digit, unless the terminator closes a guarded abbreviation.
    Joining the output with single spaces reconstructs the input modulo
    collapsed whitespace; no output sentence is empty.
    """
    text = _WS.sub(" ", body).strip()
    if not text:
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?" and i + 1 < n and text[i + 1] == " ":
            nxt = text[i + 2] if i + 2 < n else ""
            if nxt and (nxt.isupper() or nxt.isdigit()):
                if not (ch == "." and _is_guarded(text, i)):
                    sentences.append(text[start : i + 1])
                    start = i + 2
                    i += 2
                    continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# --- loading -----------------------------------------------------------------

_REQUIRED_KEYS = (
    "paper_id",
    "title",
    "year",
    "field",
    "publication_type",
    "is_open_access",
    "citation_count",
    "authors",
    "references",
)


def _parse_authors(raw: object) -> list[AuthorRef]:
    if not isinstance(raw, list):
        raise RecordError("invalid_authors", "authors must be a list")
    authors = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise RecordError("invalid_authors", "author entry must be an object")
        try:
            ref = AuthorRef(
                author_id=str(entry["author_id"]),
                h_index=int(entry["h_index"]),
                position=int(entry["position"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordError("invalid_authors", str(exc)) from exc
        if ref.h_index < 0:
            raise RecordError("invalid_authors", f"negative h_index for {ref.author_id}")
        authors.append(ref)
    authors.sort(key=lambda a: a.position)
    if [a.position for a in authors] != list(range(len(authors))):
        raise RecordError("invalid_authors", "positions must be 0..n-1 with no gaps")
    return authors


def _parse_references(raw: object) -> list[ReferenceEntry]:
    if not isinstance(raw, list):
        raise RecordError("invalid_references", "references must be a list")
    refs = []
    seen: set[str] = set()
    for entry in raw:
        if not isinstance(entry, dict) or "marker_key" not in entry:
            raise RecordError("invalid_references", "reference entry needs marker_key")
        key = str(entry["marker_key"])
        if key in seen:
            raise RecordError("invalid_references", f"duplicate marker_key {key!r}")
        seen.add(key)
        cited = entry.get("cited_paper_id")
        refs.append(ReferenceEntry(marker_key=key, cited_paper_id=None if cited is None else str(cited)))
    return refs


def paper_from_record(record: dict, schema_mode: str = "sentences") -> Paper:
    """Build a Paper from one decoded corpus record. Unknown keys are ignored."""
    for key in _REQUIRED_KEYS:
        if key not in record:
            raise RecordError("missing_field", key)
    year = record["year"]
    if not isinstance(year, int) or not (YEAR_MIN <= year <= YEAR_MAX):
        raise RecordError("invalid_year", repr(year))
    raw_field = record["field"]
    if isinstance(raw_field, list):
        if not raw_field:
            raise RecordError("missing_field", "field")
        raw_field = raw_field[0]
    pub_type = str(record["publication_type"]).lower()
    if pub_type not in PUBLICATION_TYPES:
        pub_type = "other"
    if schema_mode == "sentences":
        body = record.get("body_sentences")
        if body is None:
            raise RecordError("missing_field", "body_sentences")
        sentences = [str(s) for s in body]
    elif schema_mode == "raw_text":
        body = record.get("body_text")
        if body is None:
            raise RecordError("missing_field", "body_text")
        sentences = segment_sentences(str(body))
    else:
        raise ValueError(f"unknown schema_mode {schema_mode!r}")
    citation_count = record["citation_count"]
    if not isinstance(citation_count, int) or citation_count < 0:
        raise RecordError("invalid_citation_count", repr(citation_count))
    return Paper(
        paper_id=str(record["paper_id"]),
        title=str(record["title"]),
        year=year,
        field=str(raw_field),
        publication_type=pub_type,
        is_open_access=bool(record["is_open_access"]),
        citation_count=citation_count,
        authors=_parse_authors(record["authors"]),
        references=_parse_references(record["references"]),
        body_sentences=sentences,
    )


def paper_to_record(paper: Paper) -> dict:
    return {
        "paper_id": paper.paper_id,
        "title": paper.title,
        "year": paper.year,
        "field": paper.field,
        "publication_type": paper.publication_type,
        "is_open_access": paper.is_open_access,
        "citation_count": paper.citation_count,
        "authors": [
            {"author_id": a.author_id, "h_index": a.h_index, "position": a.position}
            for a in paper.authors
        ],
        "body_sentences": list(paper.body_sentences),
        "references": [
            {"marker_key": r.marker_key, "cited_paper_id": r.cited_paper_id}
            for r in paper.references
        ],
    }


def load_corpus(
    path: str,
    schema_mode: str = "sentences",
    counters: Counter | None = None,
) -> Iterator[Paper]:
    """Stream papers from a line-delimited corpus file in file order.

    Malformed lines are skipped and counted under ``skipped_<reason>`` in
    ``counters`` (when given), alongside ``corpus_lines`` and ``papers_loaded``.
    """
    counters = counters if counters is not None else Counter()
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            counters["corpus_lines"] += 1
            if not line:
                counters["skipped_blank"] += 1
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                counters["skipped_malformed_json"] += 1
                logger.warning("%s:%d: skipped malformed JSON", path, lineno)
                continue
            if not isinstance(record, dict):
                counters["skipped_malformed_json"] += 1
                logger.warning("%s:%d: skipped non-object record", path, lineno)
                continue
            try:
                paper = paper_from_record(record, schema_mode=schema_mode)
            except RecordError as exc:
                counters[f"skipped_{exc.reason}"] += 1
                logger.warning("%s:%d: skipped record (%s)", path, lineno, exc)
                continue
            if paper.paper_id in seen_ids:
                counters["skipped_duplicate_paper_id"] += 1
                logger.warning(
                    "%s:%d: skipped duplicate paper_id %s", path, lineno, paper.paper_id
                )
                continue
            seen_ids.add(paper.paper_id)
            counters["papers_loaded"] += 1
            yield paper


def write_corpus(papers: Iterable[Paper], path: str) -> int:
    """Write papers as canonical line-delimited JSON; returns the line count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for paper in papers:
            fh.write(dump_record(paper_to_record(paper)))
            fh.write("\n")
            n += 1
    return n


def dump_record(record: dict) -> str:
    """Canonical single-line JSON used for every line-delimited output."""
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


# --- citation graph ----------------------------------------------------------


@dataclass
class CitationGraph:
    """Resolved citation edges and their exact transpose.

    Adjacency lists are sorted and deduplicated; a paper never links to itself.
    """

    edges: dict[str, list[str]] = field(default_factory=dict)
    reverse: dict[str, list[str]] = field(default_factory=dict)

    def cites(self, citing: str, cited: str) -> bool:
        return cited in self.edges.get(citing, ())

    def cited_by(self, paper_id: str) -> list[str]:
        return self.reverse.get(paper_id, [])


def build_citation_graph(
    papers: Iterable[Paper], counters: Counter | None = None
) -> CitationGraph:
    """Build the citation graph from resolved references.

    Unresolved bibliography entries and self-loops are excluded and counted.
    Duplicate (citing, cited) pairs collapse to one edge.
    """
    counters = counters if counters is not None else Counter()
    edge_sets: dict[str, set[str]] = {}
    seen_ids: set[str] = set()
    for paper in papers:
        if paper.paper_id in seen_ids:
            counters["skipped_duplicate_paper_id"] += 1
            continue
        seen_ids.add(paper.paper_id)
        targets = edge_sets.setdefault(paper.paper_id, set())
        for ref in paper.references:
            if ref.cited_paper_id is None:
                counters["unresolved_references"] += 1
                continue
            if ref.cited_paper_id == paper.paper_id:
                counters["self_loop_references"] += 1
                continue
            targets.add(ref.cited_paper_id)
    graph = CitationGraph()
    for citing in sorted(edge_sets):
        targets = sorted(edge_sets[citing])
        if targets:
            graph.edges[citing] = targets
        for cited in targets:
            graph.reverse.setdefault(cited, []).append(citing)
    for cited in graph.reverse:
        graph.reverse[cited].sort()
    counters["graph_edges"] += sum(len(v) for v in graph.edges.values())
    return graph
