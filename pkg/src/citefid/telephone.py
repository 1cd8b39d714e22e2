"""Intermediary-citation quasi-experiment.

Finds (original, intermediary, treated) triples in the citation graph, pairs
each treated paper with an exactly matched direct-citation control, and
estimates how intermediary engagement shifts fidelity, overall and within
intermediary-fidelity strata.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .corpus import CitationGraph, Paper
from .errors import InsufficientDataError
from .fidelity import PairRecord

STRATA = ("low", "medium", "high")


def stratum_for(fidelity: float) -> str:
    """Intermediary-fidelity stratum; 3.0 and 4.0 are both medium."""
    if fidelity > 4.0:
        return "high"
    if fidelity < 3.0:
        return "low"
    return "medium"


@dataclass
class TelephoneTriple:
    original_a: str
    intermediary_b: str
    treated_c: str
    c_to_a: PairRecord
    b_to_a: PairRecord
    b_fidelity_stratum: str


@dataclass
class MatchedPair:
    triple: TelephoneTriple
    control_d: str
    d_to_a: PairRecord


@dataclass
class EffectEstimate:
    n_pairs: int
    mean_treatment: float
    mean_control: float
    difference: float
    standard_error: float


def index_pairs(records: Iterable[PairRecord]) -> dict[tuple[str, str], PairRecord]:
    """Index records by (citing, cited); a paper citing the same source in
    several sentences keeps the earliest sentence's record."""
    index: dict[tuple[str, str], PairRecord] = {}
    for record in records:
        key = (record.citing_paper_id, record.cited_paper_id)
        kept = index.get(key)
        if kept is None or record.citing_sentence_index < kept.citing_sentence_index:
            index[key] = record
    return index


def find_intermediary_triples(
    graph: CitationGraph,
    pairs: Mapping[tuple[str, str], PairRecord],
    counters: Counter | None = None,
) -> Iterator[TelephoneTriple]:
    """Every (A, B, C) with edges B->A, C->A, C->B and both scored records,
    streamed in sorted (A, B, C) order. Edges lacking records are counted."""
    counters = counters if counters is not None else Counter()
    for original in sorted(graph.reverse):
        citers = graph.reverse[original]
        citer_set = set(citers)
        found: list[tuple[str, str]] = []
        for treated in citers:
            for intermediary in graph.edges.get(treated, ()):
                if intermediary not in citer_set:
                    continue
                if (treated, original) not in pairs or (intermediary, original) not in pairs:
                    counters["triples_skipped_unscored"] += 1
                    continue
                found.append((intermediary, treated))
        for intermediary, treated in sorted(found):
            b_to_a = pairs[(intermediary, original)]
            counters["triples_found"] += 1
            yield TelephoneTriple(
                original_a=original,
                intermediary_b=intermediary,
                treated_c=treated,
                c_to_a=pairs[(treated, original)],
                b_to_a=b_to_a,
                b_fidelity_stratum=stratum_for(b_to_a.fidelity),
            )


def match_controls(
    triples: Iterable[TelephoneTriple],
    pairs: Mapping[tuple[str, str], PairRecord],
    papers: Mapping[str, Paper],
    graph: CitationGraph,
    counters: Counter | None = None,
) -> Iterator[MatchedPair]:
    """Match each triple to at most one control, greedily in input order.

    A control D cites the original directly, has no edge to any paper citing
    the original, matches the treated paper's publication year and field,
    cites the same claim, and is used at most once per original.
    """
    counters = counters if counters is not None else Counter()
    used_by_original: dict[str, set[str]] = {}
    for triple in triples:
        original = triple.original_a
        used = used_by_original.setdefault(original, set())
        citer_set = set(graph.reverse.get(original, ()))
        treated_paper = papers.get(triple.treated_c)
        if treated_paper is None:
            counters["triples_unmatched"] += 1
            continue
        match = None
        for candidate in graph.reverse.get(original, ()):
            if candidate == triple.treated_c or candidate in used:
                continue
            record = pairs.get((candidate, original))
            if record is None:
                continue
            if set(graph.edges.get(candidate, ())) & citer_set:
                continue
            candidate_paper = papers.get(candidate)
            if candidate_paper is None:
                continue
            if candidate_paper.year != treated_paper.year:
                continue
            if candidate_paper.field != treated_paper.field:
                continue
            if record.matched_claim_index != triple.c_to_a.matched_claim_index:
                continue
            match = (candidate, record)
            break
        if match is None:
            counters["triples_unmatched"] += 1
            continue
        used.add(match[0])
        counters["pairs_matched"] += 1
        yield MatchedPair(triple=triple, control_d=match[0], d_to_a=match[1])


def estimate_effect(pairs: list[MatchedPair]) -> EffectEstimate:
    """Mean treated minus mean control fidelity with the paired-difference
    standard error sd(differences) / sqrt(n)."""
    n = len(pairs)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 matched pairs, have {n}")
    treatment = [p.triple.c_to_a.fidelity for p in pairs]
    control = [p.d_to_a.fidelity for p in pairs]
    differences = [t - c for t, c in zip(treatment, control)]
    mean_t = sum(treatment) / n
    mean_c = sum(control) / n
    mean_d = sum(differences) / n
    variance = sum((d - mean_d) ** 2 for d in differences) / (n - 1)
    return EffectEstimate(
        n_pairs=n,
        mean_treatment=mean_t,
        mean_control=mean_c,
        difference=mean_t - mean_c,
        standard_error=math.sqrt(variance / n),
    )


@dataclass
class StratumSummary:
    stratum: str
    n_pairs: int
    mean_treatment_fidelity: float | None
    estimate: EffectEstimate | None


def stratify_by_intermediary_fidelity(
    pairs: list[MatchedPair],
) -> dict[str, StratumSummary]:
    """Group matched pairs by the intermediary's fidelity stratum.

    Strata are reported low, medium, high; an empty stratum reports n=0 and
    no estimate; a singleton stratum reports its mean but no estimate.
    """
    grouped: dict[str, list[MatchedPair]] = {s: [] for s in STRATA}
    for pair in pairs:
        grouped[pair.triple.b_fidelity_stratum].append(pair)
    out: dict[str, StratumSummary] = {}
    for stratum in STRATA:
        members = grouped[stratum]
        if not members:
            out[stratum] = StratumSummary(stratum, 0, None, None)
            continue
        mean_c = sum(p.triple.c_to_a.fidelity for p in members) / len(members)
        estimate = estimate_effect(members) if len(members) >= 2 else None
        out[stratum] = StratumSummary(stratum, len(members), mean_c, estimate)
    return out


def matched_pair_to_record(pair: MatchedPair) -> dict:
    return {
        "original_a": pair.triple.original_a,
        "intermediary_b": pair.triple.intermediary_b,
        "treated_c": pair.triple.treated_c,
        "control_d": pair.control_d,
        "treatment_fidelity": pair.triple.c_to_a.fidelity,
        "control_fidelity": pair.d_to_a.fidelity,
        "intermediary_fidelity": pair.triple.b_to_a.fidelity,
        "stratum": pair.triple.b_fidelity_stratum,
    }


def effects_table(
    overall: EffectEstimate | None,
    strata: dict[str, StratumSummary],
    n_overall: int,
) -> str:
    """Effects TSV: overall row then one row per stratum."""
    lines = ["group\tn_pairs\tmean_treatment\tmean_control\tdifference\tstandard_error"]

    def fmt(estimate: EffectEstimate | None, label: str, n: int) -> str:
        if estimate is None:
            return f"{label}\t{n}\t\t\t\t"
        return (
            f"{label}\t{estimate.n_pairs}\t{estimate.mean_treatment:.6f}"
            f"\t{estimate.mean_control:.6f}\t{estimate.difference:.6f}"
            f"\t{estimate.standard_error:.6f}"
        )

    lines.append(fmt(overall, "overall", n_overall))
    for stratum in STRATA:
        summary = strata[stratum]
        lines.append(fmt(summary.estimate, stratum, summary.n_pairs))
    return "\n".join(lines) + "\n"
