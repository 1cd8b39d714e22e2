from collections import Counter

import pytest

from citefid.corpus import AuthorRef, Paper, ReferenceEntry
from citefid.extract import (
    BaselineBackgroundClassifier,
    classify_background,
    extract_reporting_citations,
    instance_from_record,
    instance_to_record,
    is_single_source_reporting_candidate,
    is_terminal,
    normalize_marker_key,
    parse_markers,
)

# The four-row extraction fixture: one valid reporting citation, one
# multi-source sentence, one mid-sentence marker, one cue-free sentence.
SENTENCE_VALID = (
    "Past work has shown that active contributors in r/science are largely "
    "already involved in scientific activity [17]."
)
SENTENCE_MULTI = (
    "Existing studies in NLP to help automate the study have examined "
    "exaggeration [17], certainty [18], and fact checking [19], among others."
)
SENTENCE_MID = "We use GROBID [12], a more commonly used and actively developed tool."
SENTENCE_NO_CUE = "The finding was in accordance with former studies (Lee et al. 2020)."


def _paper(sentences, references, paper_id="px"):
    return Paper(
        paper_id=paper_id,
        title="t",
        year=2021,
        field="Computer Science",
        publication_type="journal",
        is_open_access=True,
        citation_count=0,
        authors=[AuthorRef("a1", 10, 0)],
        body_sentences=sentences,
        references=references,
    )


# --- parse_markers ---------------------------------------------------------------


def test_terminal_numeric_marker():
    markers = parse_markers(SENTENCE_VALID)
    assert len(markers) == 1
    marker = markers[0]
    assert marker.style == "numeric_bracket"
    assert marker.keys == ("17",)
    assert is_terminal(SENTENCE_VALID, marker)
    start, end = marker.span
    assert SENTENCE_VALID[start:end] == "[17]"


def test_three_markers_in_multi_source_sentence():
    markers = parse_markers(SENTENCE_MULTI)
    assert [m.keys for m in markers] == [("17",), ("18",), ("19",)]


def test_author_year_marker_terminal():
    sentence = "One limitation may be due to a variety of causes, such as cognitive load (Specht, 2019)."
    markers = parse_markers(sentence)
    assert len(markers) == 1
    marker = markers[0]
    assert marker.style == "author_year_paren"
    assert marker.keys == ("specht 2019",)
    assert is_terminal(sentence, marker)


@pytest.mark.parametrize(
    "text,expected_keys",
    [
        ("[1-3]", ("1", "2", "3")),
        ("[1,2]", ("1", "2")),
        ("[2, 5-7]", ("2", "5", "6", "7")),
        ("[; 4]", None),
        ("[3-1]", None),
    ],
)
def test_numeric_expansion(text, expected_keys):
    markers = parse_markers(text)
    if expected_keys is None:
        assert markers == []
    else:
        assert len(markers) == 1
        assert markers[0].keys == expected_keys


def test_semicolon_separated_author_year_groups():
    markers = parse_markers("Consistent with prior reports (Smith 2019; Lee et al. 2020).")
    assert len(markers) == 1
    assert markers[0].keys == ("smith 2019", "lee 2020")


@pytest.mark.parametrize(
    "sentence",
    [
        "Nothing cited here.",
        "Values rose (p < 0.05).",
        "The window (see above) was fixed.",
        "Founded in (2019).",
        "Sampling ran from 1995 to 2005.",
    ],
)
def test_unparseable_parentheticals_yield_no_marker(sentence):
    assert parse_markers(sentence) == []


def test_marker_spans_sorted_disjoint_and_in_bounds(synthetic_corpus):
    checked = 0
    for paper in synthetic_corpus[:60]:
        for sentence in paper.body_sentences:
            markers = parse_markers(sentence)
            previous_end = -1
            for marker in markers:
                start, end = marker.span
                assert 0 <= start < end <= len(sentence)
                assert start >= previous_end
                assert marker.keys
                previous_end = end
                checked += 1
    assert checked > 100


def test_normalize_marker_key():
    assert normalize_marker_key("017") == "17"
    assert normalize_marker_key("Specht, 2019") == "specht 2019"
    assert normalize_marker_key("Lee et al. 2020") == "lee 2020"
    assert normalize_marker_key("  Smith   2018 ") == "smith 2018"


# --- single-source rule -----------------------------------------------------------


def test_rule_accepts_valid_sentence():
    marker = is_single_source_reporting_candidate(SENTENCE_VALID)
    assert marker is not None
    assert marker.keys == ("17",)


def test_rule_rejects_mid_sentence_marker():
    assert is_single_source_reporting_candidate(SENTENCE_MID) is None


def test_rule_rejects_multiple_markers():
    assert is_single_source_reporting_candidate(SENTENCE_MULTI) is None
    two_terminal = "Both held [17] [18]."
    assert is_single_source_reporting_candidate(two_terminal) is None


def test_rule_rejects_multi_key_marker():
    assert is_single_source_reporting_candidate("The effect was shown before [1-3].") is None


def test_rule_allows_trailing_quote_and_punctuation():
    sentence = 'They called it "settled [4]."'
    marker = is_single_source_reporting_candidate(sentence)
    assert marker is not None


# --- background gate ---------------------------------------------------------------


def test_baseline_background_classifier_on_fixture_rows():
    classifier = BaselineBackgroundClassifier()
    labels = classify_background([SENTENCE_VALID, SENTENCE_NO_CUE], classifier)
    assert labels[0] == (True, 1.0)
    # "finding" must not stem-match the cue "find".
    assert labels[1] == (False, 0.0)


def test_classify_background_empty():
    assert classify_background([], BaselineBackgroundClassifier()) == []


def test_classify_background_order_preserved():
    sentences = ["It was demonstrated here [1].", "No cue here [2].", "We found an effect [3]."]
    labels = classify_background(sentences, BaselineBackgroundClassifier())
    assert [flag for flag, _ in labels] == [True, False, True]


# --- full extraction ----------------------------------------------------------------


def test_extract_from_mixed_fixture_paper():
    references = [
        ReferenceEntry("1", "pA"),
        ReferenceEntry("2", "pB"),
        ReferenceEntry("3", "pC"),
    ]
    paper = _paper(
        [
            "Earlier work showed a robust effect of caffeine on recall [1].",
            "Related efforts span accuracy [2] and latency [3], among others.",
            "We use the framework of [2], with light modifications.",
        ],
        references,
    )
    counters = Counter()
    instances = extract_reporting_citations(paper, BaselineBackgroundClassifier(), counters)
    assert len(instances) == 1
    assert instances[0].sentence_index == 0
    assert instances[0].cited_paper_id == "pA"
    assert counters["rule_rejected"] == 2
    assert counters["instances_emitted"] == 1


def test_extract_zero_citations():
    paper = _paper(["Just prose with no markers.", "More prose."], [])
    assert extract_reporting_citations(paper, BaselineBackgroundClassifier()) == []


def test_extract_four_row_fixture_paper_yields_one_instance():
    references = [
        ReferenceEntry("17", "pA"),
        ReferenceEntry("18", "pB"),
        ReferenceEntry("19", "pC"),
        ReferenceEntry("12", "pD"),
        ReferenceEntry("Lee, 2020", "pE"),
    ]
    paper = _paper([SENTENCE_VALID, SENTENCE_MULTI, SENTENCE_MID, SENTENCE_NO_CUE], references)
    counters = Counter()
    instances = extract_reporting_citations(paper, BaselineBackgroundClassifier(), counters)
    assert len(instances) == 1
    assert instances[0].sentence_index == 0
    assert instances[0].cited_paper_id == "pA"
    assert instances[0].background_confidence >= 0.5
    # Documented rejection reasons: two by the rule filter, one by the gate.
    assert counters["rule_rejected"] == 2
    assert counters["background_rejected"] == 1
    assert counters["sentences_total"] == 4


def test_extract_unresolved_and_self_reference_counted():
    references = [ReferenceEntry("1", None), ReferenceEntry("2", "px")]
    paper = _paper(
        [
            "A prior study found a threshold effect [1].",
            "Our earlier report indicated the same [2].",
        ],
        references,
    )
    counters = Counter()
    instances = extract_reporting_citations(paper, BaselineBackgroundClassifier(), counters)
    assert instances == []
    assert counters["skipped_unresolved_reference"] == 1
    assert counters["skipped_self_reference"] == 1


def test_emitted_instances_satisfy_invariants(synthetic_corpus):
    classifier = BaselineBackgroundClassifier()
    for paper in synthetic_corpus[:40]:
        for instance in extract_reporting_citations(paper, classifier):
            markers = parse_markers(instance.sentence_text)
            assert len(markers) == 1
            assert markers[0] == instance.marker
            assert len(instance.marker.keys) == 1
            assert is_terminal(instance.sentence_text, instance.marker)
            assert instance.is_background


def test_instance_record_round_trip(synthetic_corpus):
    classifier = BaselineBackgroundClassifier()
    checked = 0
    for paper in synthetic_corpus[:30]:
        for instance in extract_reporting_citations(paper, classifier):
            record = instance_to_record(instance)
            assert set(record) == {
                "citing_paper_id",
                "sentence_index",
                "sentence_text",
                "cited_paper_id",
                "marker_span",
                "marker_style",
                "background_confidence",
            }
            restored = instance_from_record(record)
            assert restored == instance
            checked += 1
    assert checked > 20
