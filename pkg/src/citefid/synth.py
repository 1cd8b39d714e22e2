"""Seeded synthetic fixtures.

Three generators: a full-text corpus for end-to-end runs, feature rows with
planted regression coefficients, and a citation-graph fixture with a planted
intermediary treatment effect and monotone strata means.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .corpus import AuthorRef, CitationGraph, Paper, ReferenceEntry, build_citation_graph
from .fidelity import PairRecord, ScorerId, clamp_score
from .regression import FeatureRow, RegressionSpec, encode_design_matrix

FIELDS = ("Physics", "Biology", "Medicine", "Computer Science", "Psychology")
PUB_TYPES = ("other", "review", "journal", "conference")

_TOPICS = (
    ("gamma", "radiation", "lattice", "crystal", "growth"),
    ("protein", "folding", "membrane", "transport", "kinetics"),
    ("graphene", "conductivity", "thermal", "phonon", "scattering"),
    ("glucose", "insulin", "metabolic", "signaling", "uptake"),
    ("attention", "memory", "working", "recall", "interference"),
    ("network", "latency", "routing", "congestion", "throughput"),
    ("soil", "nitrogen", "microbial", "respiration", "carbon"),
    ("antibody", "binding", "affinity", "epitope", "neutralization"),
    ("polymer", "viscosity", "shear", "entanglement", "relaxation"),
    ("coral", "bleaching", "symbiont", "temperature", "recovery"),
    ("dopamine", "reward", "prediction", "learning", "striatum"),
    ("turbulence", "vortex", "boundary", "reynolds", "dissipation"),
    ("vaccine", "immunity", "titer", "booster", "response"),
    ("battery", "electrode", "lithium", "capacity", "cycling"),
    ("sleep", "circadian", "melatonin", "phase", "duration"),
    ("enzyme", "catalysis", "substrate", "inhibition", "turnover"),
    ("galaxy", "redshift", "luminosity", "cluster", "halo"),
    ("language", "syntax", "parsing", "comprehension", "ambiguity"),
    ("alloy", "fatigue", "fracture", "hardness", "annealing"),
    ("microbiome", "diversity", "abundance", "taxa", "colonization"),
)

_SURNAMES = (
    "Keller", "Navarro", "Okafor", "Lindqvist", "Moreau",
    "Tanaka", "Petrov", "Silva", "Haddad", "Bergstrom",
)

_REPORT_CUES = (
    "shown", "found", "demonstrated", "reported",
    "revealed", "suggested", "indicated", "observed",
)


def _cap(sentence: str) -> str:
    return sentence[0].upper() + sentence[1:]


def _claim_sentence(rng: random.Random, words: tuple[str, ...]) -> str:
    w = rng.sample(words, 2)
    templates = (
        f"we find that {w[0]} increases {w[1]} under controlled conditions.",
        f"the {w[0]} treatment was associated with reduced {w[1]}.",
        f"{w[0]} levels were significantly higher in the {w[1]} condition.",
        f"in conclusion, {w[0]} modulates {w[1]} in this setting.",
        f"overall, these data support a central role for {w[0]} in {w[1]}.",
    )
    return _cap(templates[rng.randrange(len(templates))])


def _filler_sentence(rng: random.Random, words: tuple[str, ...], category: str) -> str:
    w = rng.sample(words, 2)
    if category == "methods":
        templates = (
            f"we used a {w[0]} assay to quantify {w[1]}.",
            f"samples were recruited from {w[0]} cohorts across sites.",
            f"{w[0]} was measured at baseline and at follow-up.",
        )
    elif category == "objective":
        templates = (
            f"we aim to characterize {w[0]} across {w[1]} regimes.",
            f"the goal of this study is to map {w[0]} onto {w[1]}.",
        )
    else:
        templates = (
            f"prior literature on {w[0]} spans several decades.",
            f"interest in {w[1]} has grown across subfields.",
            f"{w[0]} remains a debated topic among practitioners.",
            f"research on {w[0]} draws on diverse traditions.",
        )
    return _cap(templates[rng.randrange(len(templates))])


def _marker_text(entry: ReferenceEntry, style: str) -> str:
    if style == "numeric":
        return f"[{entry.marker_key}]"
    surname, _, year = entry.marker_key.partition(",")
    return f"({surname.strip()}, {year.strip()})"


def _citing_sentence(
    rng: random.Random,
    form: str,
    marker: str,
    cited_words: tuple[str, ...],
    own_words: tuple[str, ...],
    second_marker: str | None = None,
) -> str:
    shared = rng.sample(cited_words, rng.randint(1, 4))
    own = rng.sample(own_words, 1)
    content = " ".join(shared + own)
    if form == "valid":
        cue = _REPORT_CUES[rng.randrange(len(_REPORT_CUES))]
        return _cap(f"past work has {cue} that {content} {marker}.")
    if form == "multi" and second_marker is not None:
        return _cap(
            f"several studies examined {shared[0]} {marker}, as well as {own[0]} {second_marker}."
        )
    if form == "mid":
        return _cap(f"we build on the {shared[0]} approach {marker}, extending it to {own[0]} settings.")
    return _cap(f"the outcome resembles earlier accounts of {content} {marker}.")


_CATEGORY_MIX = (
    ("results", 0.15),
    ("conclusions", 0.09),
    ("methods", 0.25),
    ("objective", 0.09),
    ("background", 0.42),
)


def _draw_category(rng: random.Random) -> str:
    roll = rng.random()
    acc = 0.0
    for category, p in _CATEGORY_MIX:
        acc += p
        if roll < acc:
            return category
    return "background"


def generate_corpus(seed: int = 42, n_papers: int = 200) -> list[Paper]:
    """Deterministic full-text corpus with embedded citation markers.

    A year-2000 cluster guarantees rows at every regression reference level;
    injected A-B-C chains guarantee intermediary triples; a mix of valid,
    multi-source, mid-sentence, and cue-free citing sentences exercises every
    extraction counter.
    """
    rng = random.Random(seed)
    pool = {f"a{i:03d}": rng.randint(0, 60) for i in range(120)}
    pool_ids = sorted(pool)
    cluster = min(12, n_papers)

    years: list[int] = []
    fields: list[str] = []
    ptypes: list[str] = []
    open_access: list[bool] = []
    topics: list[tuple[str, ...]] = []
    authors: list[list[AuthorRef]] = []
    for i in range(n_papers):
        if i < cluster:
            years.append(2000)
            fields.append(FIELDS[i % len(FIELDS)])
            ptypes.append(PUB_TYPES[i % len(PUB_TYPES)])
            open_access.append(i % 2 == 0)
            names = [f"a{i:03d}", f"a{i + 1:03d}"]
        else:
            years.append(rng.randint(2000, 2019))
            fields.append(rng.choice(FIELDS))
            roll = rng.random()
            ptypes.append("journal" if roll < 0.5 else "conference" if roll < 0.75 else "review" if roll < 0.9 else "other")
            open_access.append(rng.random() < 0.5)
            names = rng.sample(pool_ids, rng.randint(1, 8))
        topics.append(_TOPICS[i % len(_TOPICS)])
        authors.append([AuthorRef(a, pool[a], pos) for pos, a in enumerate(names)])

    # Claims first so citing sentences can reuse cited content words.
    claim_texts: list[list[str]] = []
    for i in range(n_papers):
        claim_texts.append([_claim_sentence(rng, topics[i]) for _ in range(rng.randint(2, 3))])

    # Reference lists, with A-B-C chain injection for intermediary structure.
    refs: list[list[int]] = []
    force_valid: set[tuple[int, int]] = set()
    for i in range(n_papers):
        if i < cluster:
            chosen = [i - 1] if i > 0 else []
            if i > 0:
                force_valid.add((i, i - 1))
        else:
            eligible = [j for j in range(n_papers) if j != i and years[j] <= years[i]]
            chosen = sorted(rng.sample(eligible, min(len(eligible), rng.randint(0, 6))))
        if i >= cluster and chosen and rng.random() < 0.35:
            candidates = [b for b in chosen if b < i and refs[b]]
            if candidates:
                b = rng.choice(candidates)
                a_options = [a for a in refs[b] if years[a] <= years[i]]
                if a_options:
                    a = rng.choice(a_options)
                    if a not in chosen and a != i:
                        chosen.append(a)
                    force_valid.update({(i, a), (i, b), (b, a)})
        refs.append(chosen)

    papers: list[Paper] = []
    for i in range(n_papers):
        entries: list[ReferenceEntry] = []
        styles: list[str] = []
        used_keys: set[str] = set()
        for pos, j in enumerate(refs[i]):
            style = "author_year" if rng.random() < 0.2 else "numeric"
            if style == "author_year":
                key = f"{_SURNAMES[j % len(_SURNAMES)]}, {years[j]}"
                if key in used_keys:
                    style = "numeric"
            if style == "numeric":
                key = str(pos + 1)
            used_keys.add(key)
            entries.append(ReferenceEntry(marker_key=key, cited_paper_id=f"p{j:04d}"))
            styles.append(style)
        if rng.random() < 0.15:
            entries.append(ReferenceEntry(marker_key=str(len(entries) + 1), cited_paper_id=None))
            styles.append("numeric")

        citing_sentences: list[str] = []
        for pos, entry in enumerate(entries):
            j = refs[i][pos] if pos < len(refs[i]) else None
            cited_words = topics[j] if j is not None else _TOPICS[(i + 7) % len(_TOPICS)]
            marker = _marker_text(entry, styles[pos])
            if j is not None and (i, j) in force_valid:
                form = "valid"
            else:
                roll = rng.random()
                form = "valid" if roll < 0.55 else "multi" if roll < 0.7 else "mid" if roll < 0.85 else "nocue"
            second = None
            if form == "multi":
                if len(entries) >= 2:
                    other = entries[(pos + 1) % len(entries)]
                    second = _marker_text(other, styles[(pos + 1) % len(entries)])
                else:
                    form = "mid"
            citing_sentences.append(
                _citing_sentence(rng, form, marker, cited_words, topics[i], second)
            )
            # A second mention of the same source varies reference frequency.
            if form == "valid" and rng.random() < 0.3:
                citing_sentences.append(
                    _citing_sentence(rng, "valid", marker, cited_words, topics[i])
                )

        base: list[str] = list(claim_texts[i])
        for _ in range(rng.randint(12, 18)):
            category = _draw_category(rng)
            if category in ("results", "conclusions"):
                base.append(_claim_sentence(rng, topics[i]))
            else:
                base.append(_filler_sentence(rng, topics[i], category))
        rng.shuffle(base)
        body = list(base)
        for sentence in citing_sentences:
            body.insert(rng.randint(0, len(body)), sentence)

        papers.append(
            Paper(
                paper_id=f"p{i:04d}",
                title=f"A study of {topics[i][0]} and {topics[i][1]}",
                year=years[i],
                field=fields[i],
                publication_type=ptypes[i],
                is_open_access=open_access[i],
                citation_count=rng.randint(0, 800),
                authors=authors[i],
                body_sentences=body,
                references=entries,
            )
        )
    return papers


# --- planted regression fixture -----------------------------------------------

DEFAULT_TRUE_EFFECTS: dict[str, float] = {
    "intercept": 3.348,
    "field_of_study=Biology": 0.245,
    "field_of_study=Medicine": 0.231,
    "field_of_study=Psychology": 0.129,
    "field_of_study=Computer Science": 0.039,
    "publication_type=review": 0.080,
    "publication_type=journal": 0.058,
    "publication_type=conference": 0.032,
    "open_access": 0.024,
    "self_citation": 0.017,
    "within_field": 0.029,
    "context_length": 0.003,
    "reference_frequency": -0.016,
    "publication_interval": -0.007,
    "paper_citation": -4.1e-6,
    "author_seniority": -0.001,
    "team_size": 6.86e-6,
}
for _year in range(2001, 2008):
    DEFAULT_TRUE_EFFECTS[f"publication_year={_year}"] = 0.01 * (_year - 2000)


def planted_feature_rows(
    n: int,
    seed: int = 11,
    sigma: float = 0.5,
    effects: dict[str, float] | None = None,
) -> tuple[list[FeatureRow], RegressionSpec, dict[str, float]]:
    """Feature rows whose response is a known linear model plus N(0, sigma^2).

    The noise draw is fixed by the seed and scaled by sigma, so shrinking
    sigma shrinks the recovery error monotonically.
    """
    rng = np.random.default_rng(seed)
    year_levels = tuple(str(y) for y in range(2000, 2008))
    rows: list[FeatureRow] = []
    for _ in range(n):
        rows.append(
            FeatureRow(
                fidelity=0.0,
                field_of_study=FIELDS[rng.integers(len(FIELDS))],
                publication_year=year_levels[rng.integers(len(year_levels))],
                publication_type=PUB_TYPES[rng.integers(len(PUB_TYPES))],
                open_access=bool(rng.integers(2)),
                context_length=float(np.round(rng.uniform(40.0, 260.0), 3)),
                reference_frequency=int(rng.integers(1, 6)),
                publication_interval=float(rng.integers(0, 16)),
                paper_citation=float(rng.integers(0, 500)),
                team_size=int(rng.integers(1, 13)),
                self_citation=bool(rng.integers(2)),
                within_field=bool(rng.integers(2)),
                author_seniority=float(rng.integers(0, 61)),
                first_author_seniority=float(rng.integers(0, 61)),
                last_author_seniority=float(rng.integers(0, 61)),
            )
        )
    spec = RegressionSpec().with_levels_from(rows)
    design = encode_design_matrix(rows, spec)
    table = dict(DEFAULT_TRUE_EFFECTS) if effects is None else dict(effects)
    beta = np.array([table.get(c, 0.0) for c in design.columns])
    noise = np.random.default_rng(seed + 1).standard_normal(n)
    response = design.rows @ beta + sigma * noise
    for row, value in zip(rows, response):
        row.fidelity = float(value)
    return rows, spec, {c: table.get(c, 0.0) for c in design.columns}


# --- planted telephone fixture --------------------------------------------------


@dataclass
class TelephoneFixture:
    papers: dict[str, Paper]
    graph: CitationGraph
    records: dict[tuple[str, str], PairRecord]
    delta: float


_STRATUM_RANGES = {"low": (1.5, 2.8), "medium": (3.0, 4.0), "high": (4.05, 5.0)}
_STRATUM_SHIFTS = {"low": -0.25, "medium": 0.0, "high": 0.25}


def _minimal_paper(paper_id: str, year: int, field: str, cited: list[str]) -> Paper:
    return Paper(
        paper_id=paper_id,
        title=paper_id,
        year=year,
        field=field,
        publication_type="journal",
        is_open_access=True,
        citation_count=0,
        authors=[],
        body_sentences=[],
        references=[
            ReferenceEntry(marker_key=str(k + 1), cited_paper_id=c) for k, c in enumerate(cited)
        ],
    )


def planted_telephone_records(
    seed: int = 7,
    n_per_stratum: int = 400,
    delta: float = -0.06,
    base: float = 3.4,
    noise_sd: float = 0.15,
) -> TelephoneFixture:
    """Families of (original, intermediary, treated, control) papers.

    Treated fidelity is base + stratum shift + delta + noise, the matched
    control's is base + stratum shift + noise, so the paired difference
    estimates delta and treated means increase strictly across strata.
    """
    rng = np.random.default_rng(seed)
    scorer = ScorerId(name="synthetic-planted", version="1")
    papers: dict[str, Paper] = {}
    records: dict[tuple[str, str], PairRecord] = {}
    strata = ("low", "medium", "high")
    n_families = 3 * n_per_stratum
    for j in range(n_families):
        stratum = strata[j % 3]
        field = FIELDS[j % len(FIELDS)]
        year_c = 2006 + (j % 7)
        a_id, b_id, c_id, d_id = (
            f"t{j:05d}a",
            f"t{j:05d}b",
            f"t{j:05d}c",
            f"t{j:05d}d",
        )
        papers[a_id] = _minimal_paper(a_id, year_c - 4, field, [])
        papers[b_id] = _minimal_paper(b_id, year_c - 2, field, [a_id])
        papers[c_id] = _minimal_paper(c_id, year_c, field, [a_id, b_id])
        papers[d_id] = _minimal_paper(d_id, year_c, field, [a_id])

        lo, hi = _STRATUM_RANGES[stratum]
        b_fidelity = float(rng.uniform(lo, hi))
        shift = _STRATUM_SHIFTS[stratum]
        claim_index = int(rng.integers(0, 5))
        treated = clamp_score(base + shift + delta + noise_sd * float(rng.standard_normal()))
        control = clamp_score(base + shift + noise_sd * float(rng.standard_normal()))

        records[(b_id, a_id)] = PairRecord(
            citing_paper_id=b_id,
            citing_sentence_index=0,
            cited_paper_id=a_id,
            matched_claim_index=int(rng.integers(0, 5)),
            fidelity=b_fidelity,
            n_candidates=5,
            scorer=scorer,
        )
        records[(c_id, a_id)] = PairRecord(
            citing_paper_id=c_id,
            citing_sentence_index=1,
            cited_paper_id=a_id,
            matched_claim_index=claim_index,
            fidelity=treated,
            n_candidates=5,
            scorer=scorer,
        )
        records[(d_id, a_id)] = PairRecord(
            citing_paper_id=d_id,
            citing_sentence_index=2,
            cited_paper_id=a_id,
            matched_claim_index=claim_index,
            fidelity=control,
            n_candidates=5,
            scorer=scorer,
        )
    graph = build_citation_graph(papers[p] for p in sorted(papers))
    return TelephoneFixture(papers=papers, graph=graph, records=records, delta=delta)
