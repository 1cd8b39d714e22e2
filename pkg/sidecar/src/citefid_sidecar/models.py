"""Model bundles served by the sidecar.

A bundle exposes the three heads: a 1-5 sentence-pair information-change
scorer, a binary background-citation classifier, and a five-way discourse
classifier. The HF bundle loads released checkpoints at startup and refuses
to start when any of them fails to load; the stub bundle is a deterministic
stand-in for protocol tests and local development.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

DISCOURSE_CATEGORIES = ("methods", "background", "objective", "results", "conclusions")

SCORE_MIN = 1.0
SCORE_MAX = 5.0

DEFAULT_MAX_BATCH = 256
INTERNAL_CHUNK = 32


class ModelBundle(Protocol):
    name: str
    version: str
    max_batch: int

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...

    def background_confidences(self, sentences: Sequence[str]) -> list[float]: ...

    def discourse(self, sentences: Sequence[str]) -> list[tuple[str, float]]: ...


def _hash_unit(text: str) -> float:
    return (zlib.crc32(text.encode("utf-8")) % 10_000) / 9_999.0


@dataclass
class StubModelBundle:
    """Deterministic bundle with overridable per-item functions.

    Defaults are hash-based and in range; tests override them to exercise
    clamping and failure paths.
    """

    name: str = "stub"
    version: str = "0"
    max_batch: int = DEFAULT_MAX_BATCH
    score_fn: Callable[[str, str], float] = field(
        default=lambda a, b: SCORE_MIN + 4.0 * _hash_unit(a + "\x1f" + b)
    )
    background_fn: Callable[[str], float] = field(default=lambda s: _hash_unit(s))
    discourse_fn: Callable[[str], tuple[str, float]] = field(
        default=lambda s: (
            DISCOURSE_CATEGORIES[zlib.crc32(s.encode("utf-8")) % 5],
            _hash_unit(s),
        )
    )

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.score_fn(a, b) for a, b in pairs]

    def background_confidences(self, sentences: Sequence[str]) -> list[float]:
        return [self.background_fn(s) for s in sentences]

    def discourse(self, sentences: Sequence[str]) -> list[tuple[str, float]]:
        return [self.discourse_fn(s) for s in sentences]


class CheckpointError(RuntimeError):
    """A checkpoint failed to load; the service must not start."""


class HFModelBundle:
    """Transformer-backed bundle over three released checkpoints.

    The scorer checkpoint is a sequence-pair regression head emitting one
    logit on the 1-5 scale (cross-encoder); the background checkpoint a
    binary classifier (positive class = background citation); the discourse
    checkpoint a five-way classifier whose id2label names match the
    discourse categories.
    """

    def __init__(
        self,
        scorer_checkpoint: str,
        background_checkpoint: str,
        discourse_checkpoint: str,
        device: str = "cpu",
        max_batch: int = DEFAULT_MAX_BATCH,
    ):
        if max_batch > DEFAULT_MAX_BATCH:
            raise CheckpointError(f"max_batch must be <= {DEFAULT_MAX_BATCH}")
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise CheckpointError(
                "torch and transformers are required to serve checkpoints"
            ) from exc
        self._torch = torch
        self.device = device
        self.max_batch = max_batch
        self.name = "hf-bundle"
        self.version = "1"

        def load(path: str):
            try:
                tokenizer = AutoTokenizer.from_pretrained(path)
                model = AutoModelForSequenceClassification.from_pretrained(path)
            except Exception as exc:
                raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc
            model.to(device)
            model.eval()
            return tokenizer, model

        self._scorer = load(scorer_checkpoint)
        self._background = load(background_checkpoint)
        self._discourse = load(discourse_checkpoint)
        labels = [
            str(v).lower() for v in self._discourse[1].config.id2label.values()
        ]
        if sorted(labels) != sorted(DISCOURSE_CATEGORIES):
            raise CheckpointError(
                f"discourse checkpoint labels {labels} do not match {DISCOURSE_CATEGORIES}"
            )
        self._discourse_labels = labels

    def _chunks(self, items: Sequence) -> list:
        return [items[i : i + INTERNAL_CHUNK] for i in range(0, len(items), INTERNAL_CHUNK)]

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        tokenizer, model = self._scorer
        out: list[float] = []
        with self._torch.no_grad():
            for chunk in self._chunks(list(pairs)):
                encoded = tokenizer(
                    [a for a, _ in chunk],
                    [b for _, b in chunk],
                    padding=True,
                    truncation=True,
                    max_length=512,
                    return_tensors="pt",
                ).to(self.device)
                logits = model(**encoded).logits.squeeze(-1)
                out.extend(float(v) for v in logits.cpu().tolist())
        return out

    def background_confidences(self, sentences: Sequence[str]) -> list[float]:
        tokenizer, model = self._background
        out: list[float] = []
        with self._torch.no_grad():
            for chunk in self._chunks(list(sentences)):
                encoded = tokenizer(
                    list(chunk), padding=True, truncation=True, max_length=512,
                    return_tensors="pt",
                ).to(self.device)
                probs = model(**encoded).logits.softmax(dim=-1)
                out.extend(float(p[1]) for p in probs.cpu().tolist())
        return out

    def discourse(self, sentences: Sequence[str]) -> list[tuple[str, float]]:
        tokenizer, model = self._discourse
        out: list[tuple[str, float]] = []
        with self._torch.no_grad():
            for chunk in self._chunks(list(sentences)):
                encoded = tokenizer(
                    list(chunk), padding=True, truncation=True, max_length=512,
                    return_tensors="pt",
                ).to(self.device)
                probs = model(**encoded).logits.softmax(dim=-1)
                for row in probs.cpu().tolist():
                    index = max(range(len(row)), key=row.__getitem__)
                    out.append((self._discourse_labels[index], float(row[index])))
        return out
