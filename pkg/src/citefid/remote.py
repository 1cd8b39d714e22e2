"""HTTP client for the model-serving sidecar.

One wire protocol, three endpoints plus health:

    POST /v1/score               {"pairs":[{"a":...,"b":...}]} -> {"scores":[...]}
    POST /v1/classify/background {"sentences":[...]} -> {"labels":[...],"confidences":[...]}
    POST /v1/classify/discourse  {"sentences":[...]} -> {"labels":[...],"confidences":[...]}
    GET  /v1/health              -> {"status":"ok","model":...,"version":...}

Batches above MAX_WIRE_BATCH are split client-side, responses reassembled in
order. Requests retry with exponential backoff before failing the batch with
a TransportError; malformed responses raise ProtocolError. Out-of-range
scores are clamped and counted as protocol warnings instead of failing runs.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import httpx

from .claims import DISCOURSE_CATEGORIES
from .errors import ProtocolError, TransportError
from .fidelity import SCORE_MAX, SCORE_MIN, ScorerId, clamp_score

MAX_WIRE_BATCH = 256
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 0.25


class RemoteEndpoint:
    """Shared request plumbing: retries, backoff, batching, shape checks."""

    def __init__(
        self,
        base_url: str,
        client: httpx.Client | None = None,
        retries: int = DEFAULT_RETRIES,
        backoff: float = DEFAULT_BACKOFF,
        timeout: float = 30.0,
        max_in_flight: int = 4,
        sleep=None,
    ):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(base_url=self.base_url, timeout=timeout)
        self.retries = retries
        self.backoff = backoff
        self.max_in_flight = max(1, max_in_flight)
        self.warnings: Counter = Counter()
        if sleep is None:
            import time

            sleep = time.sleep
        self._sleep = sleep

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, body: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.retries):
            if attempt:
                self._sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._client.post(path, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = TransportError(f"{path} -> HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise ProtocolError(f"{path} -> HTTP {response.status_code}: {response.text}")
            try:
                return response.json()
            except ValueError as exc:
                raise ProtocolError(f"{path} returned non-JSON body") from exc
        raise TransportError(
            f"{path} failed after {self.retries} attempts: {last_error}"
        ) from last_error

    def _batched(self, items: Sequence, request_one) -> list:
        chunks = [items[i : i + MAX_WIRE_BATCH] for i in range(0, len(items), MAX_WIRE_BATCH)]
        if len(chunks) <= 1:
            return request_one(items) if items else []
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            results = list(pool.map(request_one, chunks))
        merged: list = []
        for part in results:
            merged.extend(part)
        return merged

    def health(self) -> ScorerId:
        try:
            response = self._client.get("/v1/health")
        except httpx.HTTPError as exc:
            raise TransportError(f"health check failed: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(f"health check -> HTTP {response.status_code}")
        body = response.json()
        if body.get("status") != "ok":
            raise TransportError(f"service unhealthy: {body}")
        return ScorerId(name=str(body.get("model", "")), version=str(body.get("version", "")))


class RemoteScorer(RemoteEndpoint):
    """Scorer backed by POST /v1/score."""

    def __init__(self, base_url: str, model_id: ScorerId | None = None, **kwargs):
        super().__init__(base_url, **kwargs)
        self.id = model_id or ScorerId(name="remote", version="unknown")

    def _score_chunk(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        body = {"pairs": [{"a": a, "b": b} for a, b in pairs]}
        payload = self._post("/v1/score", body)
        scores = payload.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise ProtocolError(
                f"/v1/score returned {0 if scores is None else len(scores)} scores "
                f"for {len(pairs)} pairs"
            )
        out = []
        for value in scores:
            score = float(value)
            if not SCORE_MIN <= score <= SCORE_MAX:
                self.warnings["score_out_of_range"] += 1
                score = clamp_score(score)
            out.append(score)
        return out

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return self._batched(list(pairs), self._score_chunk)


class RemoteBackgroundClassifier(RemoteEndpoint):
    """Background-citation gate backed by POST /v1/classify/background."""

    def _classify_chunk(self, sentences: Sequence[str]) -> list[float]:
        payload = self._post("/v1/classify/background", {"sentences": list(sentences)})
        confidences = payload.get("confidences")
        labels = payload.get("labels")
        if (
            not isinstance(confidences, list)
            or not isinstance(labels, list)
            or len(confidences) != len(sentences)
            or len(labels) != len(sentences)
        ):
            raise ProtocolError("/v1/classify/background returned a malformed batch")
        out = []
        for value in confidences:
            confidence = float(value)
            if not 0.0 <= confidence <= 1.0:
                self.warnings["confidence_out_of_range"] += 1
                confidence = min(1.0, max(0.0, confidence))
            out.append(confidence)
        return out

    def confidences(self, sentences: Sequence[str]) -> list[float]:
        return self._batched(list(sentences), self._classify_chunk)


class RemoteDiscourseClassifier(RemoteEndpoint):
    """Five-way discourse classifier backed by POST /v1/classify/discourse."""

    def _classify_chunk(self, sentences: Sequence[str]) -> list[tuple[str, float]]:
        payload = self._post("/v1/classify/discourse", {"sentences": list(sentences)})
        labels = payload.get("labels")
        confidences = payload.get("confidences")
        if (
            not isinstance(labels, list)
            or not isinstance(confidences, list)
            or len(labels) != len(sentences)
            or len(confidences) != len(sentences)
        ):
            raise ProtocolError("/v1/classify/discourse returned a malformed batch")
        out = []
        for label, value in zip(labels, confidences):
            if label not in DISCOURSE_CATEGORIES:
                raise ProtocolError(f"unknown discourse label {label!r}")
            confidence = float(value)
            if not 0.0 <= confidence <= 1.0:
                self.warnings["confidence_out_of_range"] += 1
                confidence = min(1.0, max(0.0, confidence))
            out.append((str(label), confidence))
        return out

    def classify(self, sentences: Sequence[str]) -> list[tuple[str, float]]:
        return self._batched(list(sentences), self._classify_chunk)
