import random
from collections import Counter

import pytest

from citefid.corpus import CitationGraph, Paper
from citefid.errors import InsufficientDataError
from citefid.fidelity import PairRecord, ScorerId
from citefid.synth import planted_telephone_records
from citefid.telephone import (
    MatchedPair,
    TelephoneTriple,
    estimate_effect,
    find_intermediary_triples,
    index_pairs,
    match_controls,
    matched_pair_to_record,
    stratify_by_intermediary_fidelity,
    stratum_for,
)

SCORER = ScorerId("s", "1")


def _graph(edges: dict[str, list[str]]) -> CitationGraph:
    graph = CitationGraph()
    for citing in sorted(edges):
        graph.edges[citing] = sorted(set(edges[citing]))
        for cited in graph.edges[citing]:
            graph.reverse.setdefault(cited, []).append(citing)
    for cited in graph.reverse:
        graph.reverse[cited].sort()
    return graph


def _record(citing, cited, fidelity=3.0, claim=0, idx=0):
    return PairRecord(citing, idx, cited, claim, fidelity, 3, SCORER)


def _paper(paper_id, year=2010, field="Physics"):
    return Paper(paper_id, paper_id, year, field, "journal", True, 0, [], [], [])


def _pair_from(triple, control, record):
    return MatchedPair(triple=triple, control_d=control, d_to_a=record)


def _triple(a="A", b="B", c="C", c_f=3.0, b_f=3.5, claim=0):
    c_rec = _record(c, a, c_f, claim)
    b_rec = _record(b, a, b_f)
    return TelephoneTriple(a, b, c, c_rec, b_rec, stratum_for(b_f))


# --- strata -----------------------------------------------------------------------


def test_stratum_boundaries():
    assert stratum_for(3.0) == "medium"
    assert stratum_for(4.0) == "medium"
    assert stratum_for(4.5) == "high"
    assert stratum_for(4.0000001) == "high"
    assert stratum_for(2.9999) == "low"
    assert stratum_for(1.0) == "low"
    assert stratum_for(5.0) == "high"


def test_stratum_total_on_scale():
    value = 1.0
    while value <= 5.0:
        assert stratum_for(value) in ("low", "medium", "high")
        value += 0.01


# --- triples ----------------------------------------------------------------------


def test_single_triple_found():
    graph = _graph({"B": ["A"], "C": ["A", "B"]})
    pairs = index_pairs([_record("B", "A"), _record("C", "A")])
    triples = list(find_intermediary_triples(graph, pairs))
    assert len(triples) == 1
    triple = triples[0]
    assert (triple.original_a, triple.intermediary_b, triple.treated_c) == ("A", "B", "C")


def test_no_triple_without_intermediary_edge_to_original():
    graph = _graph({"C": ["A", "B"]})
    pairs = index_pairs([_record("C", "A"), _record("B", "A")])
    assert list(find_intermediary_triples(graph, pairs)) == []


def test_unscored_edges_skipped_and_counted():
    graph = _graph({"B": ["A"], "C": ["A", "B"]})
    pairs = index_pairs([_record("C", "A")])
    counters = Counter()
    assert list(find_intermediary_triples(graph, pairs, counters)) == []
    assert counters["triples_skipped_unscored"] == 1


def _random_graph_and_pairs(seed, n_nodes=100, edge_p=0.04, scored_p=0.8):
    rng = random.Random(seed)
    nodes = [f"n{i:03d}" for i in range(n_nodes)]
    edges = {}
    for u in nodes:
        targets = [v for v in nodes if v != u and rng.random() < edge_p]
        if targets:
            edges[u] = targets
    graph = _graph(edges)
    pairs = {}
    for u, targets in graph.edges.items():
        for v in targets:
            if rng.random() < scored_p:
                pairs[(u, v)] = _record(u, v, 1.0 + 4.0 * rng.random(), rng.randint(0, 3))
    return graph, pairs


def _brute_force_triples(graph, pairs):
    # Cubic enumeration over all (a, b, c).
    nodes = sorted(set(graph.edges) | set(graph.reverse))
    out = []
    for a in nodes:
        for b in nodes:
            for c in nodes:
                if len({a, b, c}) != 3:
                    continue
                if not (graph.cites(b, a) and graph.cites(c, a) and graph.cites(c, b)):
                    continue
                if (c, a) not in pairs or (b, a) not in pairs:
                    continue
                out.append((a, b, c))
    return out


def test_triples_match_brute_force_on_random_graphs():
    for seed in (1, 2, 3):
        graph, pairs = _random_graph_and_pairs(seed)
        triples = list(find_intermediary_triples(graph, pairs))
        got = [(t.original_a, t.intermediary_b, t.treated_c) for t in triples]
        expected = _brute_force_triples(graph, pairs)
        assert got == sorted(expected)
        assert got == expected  # already streamed in sorted order


# --- matching ----------------------------------------------------------------------


def test_exact_match_found():
    graph = _graph({"B": ["A"], "C": ["A", "B"], "D": ["A"]})
    papers = {p.paper_id: _paper(p.paper_id) for p in map(_paper, "ABCD")}
    pairs = index_pairs(
        [_record("B", "A"), _record("C", "A", claim=2), _record("D", "A", claim=2)]
    )
    triples = list(find_intermediary_triples(graph, pairs))
    matched = list(match_controls(triples, pairs, papers, graph))
    assert len(matched) == 1
    assert matched[0].control_d == "D"


def test_field_mismatch_leaves_unmatched():
    graph = _graph({"B": ["A"], "C": ["A", "B"], "D": ["A"]})
    papers = {
        "A": _paper("A"),
        "B": _paper("B"),
        "C": _paper("C", field="Biology"),
        "D": _paper("D", field="Physics"),
    }
    pairs = index_pairs([_record("B", "A"), _record("C", "A"), _record("D", "A")])
    counters = Counter()
    triples = list(find_intermediary_triples(graph, pairs))
    matched = list(match_controls(triples, pairs, papers, graph, counters))
    assert matched == []
    assert counters["triples_unmatched"] == 1


def test_control_with_hidden_intermediary_excluded():
    # D cites E, and E cites A, so D is not a pure direct citer. B and E are
    # direct citers but their years differ from C's, leaving no valid control.
    graph = _graph({"B": ["A"], "C": ["A", "B"], "D": ["A", "E"], "E": ["A"]})
    papers = {
        "A": _paper("A", year=2000),
        "B": _paper("B", year=2008),
        "C": _paper("C", year=2010),
        "D": _paper("D", year=2010),
        "E": _paper("E", year=2009),
    }
    pairs = index_pairs(
        [_record("B", "A"), _record("C", "A"), _record("D", "A"), _record("E", "A")]
    )
    triples = [t for t in find_intermediary_triples(graph, pairs) if t.treated_c == "C"]
    matched = list(match_controls(triples, pairs, papers, graph))
    assert matched == []


def test_intermediary_itself_can_serve_as_control_when_invariants_hold():
    # B cites A directly with no intermediary of its own; nothing in the
    # matching invariants excludes it from the control pool.
    graph = _graph({"B": ["A"], "C": ["A", "B"]})
    papers = {pid: _paper(pid) for pid in "ABC"}
    pairs = index_pairs([_record("B", "A"), _record("C", "A")])
    triples = list(find_intermediary_triples(graph, pairs))
    matched = list(match_controls(triples, pairs, papers, graph))
    assert [m.control_d for m in matched] == ["B"]


def test_controls_used_without_replacement_per_original():
    graph = _graph({"B": ["A"], "C1": ["A", "B"], "C2": ["A", "B"], "D": ["A"]})
    papers = {pid: _paper(pid) for pid in ("A", "C1", "C2", "D")}
    papers["B"] = _paper("B", year=2005)  # out of the control pool by year
    pairs = index_pairs(
        [_record("B", "A"), _record("C1", "A"), _record("C2", "A"), _record("D", "A")]
    )
    counters = Counter()
    triples = list(find_intermediary_triples(graph, pairs))
    matched = list(match_controls(triples, pairs, papers, graph, counters))
    assert len(matched) == 1
    assert matched[0].triple.treated_c == "C1"
    assert counters["triples_unmatched"] == 1


def _brute_force_matcher(triples, pairs, papers, graph):
    # Independent greedy matcher checking the documented invariants directly.
    used = {}
    out = []
    for t in triples:
        citers = set(graph.reverse.get(t.original_a, []))
        taken = used.setdefault(t.original_a, set())
        chosen = None
        for d in sorted(citers):
            if d == t.treated_c or d in taken:
                continue
            rec = pairs.get((d, t.original_a))
            if rec is None:
                continue
            if any(graph.cites(d, x) for x in citers):
                continue
            pc, pd = papers.get(t.treated_c), papers.get(d)
            if pc is None or pd is None:
                continue
            if pd.year != pc.year or pd.field != pc.field:
                continue
            if rec.matched_claim_index != t.c_to_a.matched_claim_index:
                continue
            chosen = d
            break
        if chosen is not None:
            taken.add(chosen)
            out.append((t.original_a, t.intermediary_b, t.treated_c, chosen))
    return out


def test_matching_equals_brute_force_oracle_on_random_pool():
    rng = random.Random(44)
    for seed in (5, 6, 7):
        graph, pairs = _random_graph_and_pairs(seed, n_nodes=120, edge_p=0.05)
        papers = {}
        node_ids = sorted(set(graph.edges) | set(graph.reverse))
        for node in node_ids:
            papers[node] = _paper(node, year=2008 + rng.randint(0, 2), field=rng.choice(["Physics", "Biology"]))
        triples = list(find_intermediary_triples(graph, pairs))
        got = [
            (m.triple.original_a, m.triple.intermediary_b, m.triple.treated_c, m.control_d)
            for m in match_controls(triples, pairs, papers, graph)
        ]
        assert got == _brute_force_matcher(triples, pairs, papers, graph)


def test_matched_pairs_satisfy_all_invariants():
    fixture = planted_telephone_records(seed=3, n_per_stratum=40)
    triples = list(find_intermediary_triples(fixture.graph, fixture.records))
    matched = list(match_controls(triples, fixture.records, fixture.papers, fixture.graph))
    assert matched
    treated_by_original = {}
    controls_by_original = {}
    for pair in matched:
        t = pair.triple
        assert fixture.graph.cites(pair.control_d, t.original_a)
        citers = set(fixture.graph.reverse[t.original_a])
        assert not set(fixture.graph.edges.get(pair.control_d, ())) & citers
        assert fixture.papers[pair.control_d].year == fixture.papers[t.treated_c].year
        assert fixture.papers[pair.control_d].field == fixture.papers[t.treated_c].field
        assert pair.d_to_a.matched_claim_index == t.c_to_a.matched_claim_index
        treated_by_original.setdefault(t.original_a, set()).add(t.treated_c)
        controls_by_original.setdefault(t.original_a, set()).add(pair.control_d)
    for original, treated in treated_by_original.items():
        assert not treated & controls_by_original.get(original, set())


# --- effect estimation ---------------------------------------------------------------


def test_estimate_simple_difference():
    pairs = [
        _pair_from(_triple(c_f=3.0), "D1", _record("D1", "A", 3.1)),
        _pair_from(_triple(c_f=3.0), "D2", _record("D2", "A", 3.1)),
    ]
    estimate = estimate_effect(pairs)
    assert estimate.difference == pytest.approx(-0.1)
    assert estimate.mean_treatment == pytest.approx(3.0)
    assert estimate.mean_control == pytest.approx(3.1)
    assert estimate.difference == estimate.mean_treatment - estimate.mean_control


def test_estimate_identical_groups_zero_se():
    pairs = [
        _pair_from(_triple(c_f=3.3), "D1", _record("D1", "A", 3.3)),
        _pair_from(_triple(c_f=3.3), "D2", _record("D2", "A", 3.3)),
    ]
    estimate = estimate_effect(pairs)
    assert estimate.difference == 0.0
    assert estimate.standard_error == 0.0


def test_estimate_requires_two_pairs():
    with pytest.raises(InsufficientDataError):
        estimate_effect([])
    with pytest.raises(InsufficientDataError):
        estimate_effect([_pair_from(_triple(), "D", _record("D", "A", 3.0))])


def test_planted_delta_recovered_and_strata_monotone():
    fixture = planted_telephone_records(seed=7, n_per_stratum=150, delta=-0.06)
    triples = list(find_intermediary_triples(fixture.graph, fixture.records))
    matched = list(match_controls(triples, fixture.records, fixture.papers, fixture.graph))
    assert len(matched) == len(triples)
    estimate = estimate_effect(matched)
    assert abs(estimate.difference - fixture.delta) <= 2 * estimate.standard_error
    strata = stratify_by_intermediary_fidelity(matched)
    means = [strata[s].mean_treatment_fidelity for s in ("low", "medium", "high")]
    assert means[0] < means[1] < means[2]
    for summary in strata.values():
        assert summary.n_pairs == 150
        assert summary.estimate is not None


def test_stratify_reports_empty_strata():
    pairs = [
        _pair_from(_triple(c_f=3.2, b_f=4.6), "D1", _record("D1", "A", 3.1)),
        _pair_from(_triple(c_f=3.4, b_f=4.8), "D2", _record("D2", "A", 3.2)),
    ]
    strata = stratify_by_intermediary_fidelity(pairs)
    assert strata["low"].n_pairs == 0
    assert strata["low"].estimate is None
    assert strata["low"].mean_treatment_fidelity is None
    assert strata["medium"].n_pairs == 0
    assert strata["high"].n_pairs == 2
    assert strata["high"].estimate is not None


def test_matched_pair_record_shape():
    pair = _pair_from(_triple(), "D", _record("D", "A", 2.9))
    record = matched_pair_to_record(pair)
    assert set(record) == {
        "original_a",
        "intermediary_b",
        "treated_c",
        "control_d",
        "treatment_fidelity",
        "control_fidelity",
        "intermediary_fidelity",
        "stratum",
    }
