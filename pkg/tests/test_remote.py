import json

import httpx
import pytest

from citefid.errors import ProtocolError, TransportError
from citefid.remote import (
    MAX_WIRE_BATCH,
    RemoteBackgroundClassifier,
    RemoteDiscourseClassifier,
    RemoteScorer,
)


def _scorer_with(handler, **kwargs):
    client = httpx.Client(transport=httpx.MockTransport(handler), base_url="http://sidecar")
    return RemoteScorer("http://sidecar", client=client, sleep=lambda _: None, **kwargs)


def _echo_scores(request):
    body = json.loads(request.content)
    return httpx.Response(200, json={"scores": [3.0] * len(body["pairs"])})


def test_scores_round_trip():
    scorer = _scorer_with(_echo_scores)
    assert scorer.score_batch([("a b", "c d"), ("x y", "x y")]) == [3.0, 3.0]


def test_retry_then_success():
    calls = {"n": 0}

    def flaky(request):
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(500, json={"error": "boom"})
        return _echo_scores(request)

    scorer = _scorer_with(flaky)
    assert scorer.score_batch([("a", "b")]) == [3.0]
    assert calls["n"] == 3


def test_transport_error_after_three_attempts():
    calls = {"n": 0}

    def down(request):
        calls["n"] += 1
        raise httpx.ConnectError("refused")

    scorer = _scorer_with(down)
    with pytest.raises(TransportError):
        scorer.score_batch([("a", "b")])
    assert calls["n"] == 3


def test_out_of_range_scores_clamped_and_counted():
    def wild(request):
        body = json.loads(request.content)
        n = len(body["pairs"])
        values = [6.2, 0.4, 3.3][:n]
        return httpx.Response(200, json={"scores": values})

    scorer = _scorer_with(wild)
    assert scorer.score_batch([("a", "b"), ("c", "d"), ("e", "f")]) == [5.0, 1.0, 3.3]
    assert scorer.warnings["score_out_of_range"] == 2


def test_shape_mismatch_raises_protocol_error():
    def short(request):
        return httpx.Response(200, json={"scores": [3.0]})

    scorer = _scorer_with(short)
    with pytest.raises(ProtocolError):
        scorer.score_batch([("a", "b"), ("c", "d")])


def test_large_batch_split_at_wire_limit_and_order_preserved():
    seen_sizes = []

    def sized(request):
        body = json.loads(request.content)
        seen_sizes.append(len(body["pairs"]))
        scores = [1.0 + (float(p["a"]) % 400) / 100.0 for p in body["pairs"]]
        return httpx.Response(200, json={"scores": scores})

    scorer = _scorer_with(sized)
    pairs = [(str(i), "x") for i in range(600)]
    scores = scorer.score_batch(pairs)
    assert len(scores) == 600
    assert all(size <= MAX_WIRE_BATCH for size in seen_sizes)
    assert sum(seen_sizes) == 600
    assert scores == [1.0 + (i % 400) / 100.0 for i in range(600)]


def test_health_check():
    def healthy(request):
        return httpx.Response(200, json={"status": "ok", "model": "m", "version": "2"})

    scorer = _scorer_with(healthy)
    ident = scorer.health()
    assert (ident.name, ident.version) == ("m", "2")


def test_health_check_unhealthy():
    def sick(request):
        return httpx.Response(200, json={"status": "loading"})

    scorer = _scorer_with(sick)
    with pytest.raises(TransportError):
        scorer.health()


def test_background_classifier_confidences():
    def classify(request):
        body = json.loads(request.content)
        n = len(body["sentences"])
        return httpx.Response(
            200, json={"labels": [True] * n, "confidences": [0.9] * n}
        )

    client = httpx.Client(transport=httpx.MockTransport(classify), base_url="http://s")
    classifier = RemoteBackgroundClassifier("http://s", client=client, sleep=lambda _: None)
    assert classifier.confidences(["x", "y"]) == [0.9, 0.9]


def test_background_confidence_clamped():
    def classify(request):
        return httpx.Response(200, json={"labels": [True], "confidences": [1.4]})

    client = httpx.Client(transport=httpx.MockTransport(classify), base_url="http://s")
    classifier = RemoteBackgroundClassifier("http://s", client=client, sleep=lambda _: None)
    assert classifier.confidences(["x"]) == [1.0]
    assert classifier.warnings["confidence_out_of_range"] == 1


def test_discourse_classifier_labels():
    def classify(request):
        body = json.loads(request.content)
        labels = ["results"] * len(body["sentences"])
        return httpx.Response(
            200, json={"labels": labels, "confidences": [0.8] * len(labels)}
        )

    client = httpx.Client(transport=httpx.MockTransport(classify), base_url="http://s")
    classifier = RemoteDiscourseClassifier("http://s", client=client, sleep=lambda _: None)
    assert classifier.classify(["x"]) == [("results", 0.8)]


def test_discourse_unknown_label_rejected():
    def classify(request):
        return httpx.Response(200, json={"labels": ["banter"], "confidences": [0.8]})

    client = httpx.Client(transport=httpx.MockTransport(classify), base_url="http://s")
    classifier = RemoteDiscourseClassifier("http://s", client=client, sleep=lambda _: None)
    with pytest.raises(ProtocolError):
        classifier.classify(["x"])


def test_non_retryable_status_is_protocol_error():
    def reject(request):
        return httpx.Response(413, json={"error": "batch_too_large", "max": 256})

    scorer = _scorer_with(reject)
    with pytest.raises(ProtocolError):
        scorer.score_batch([("a", "b")])
