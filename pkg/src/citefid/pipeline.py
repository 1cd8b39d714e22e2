"""Resumable pipeline stages over line-delimited files.

Each stage reads the previous stage's outputs, writes its own atomically
(temp file + rename), and persists a manifest with an input digest and its
skip/emit counters. Rerunning a stage whose inputs have not changed is a
no-op unless forced. One stage at a time per output directory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import claims as claims_mod
from . import extract as extract_mod
from . import regression as regression_mod
from . import telephone as telephone_mod
from .corpus import Paper, build_citation_graph, dump_record, load_corpus
from .errors import ConfigError, DependencyError
from .fidelity import (
    BaselineScorer,
    PairRecord,
    ScorerId,
    build_pair_records,
    pair_from_record,
    pair_to_record,
)
from .remote import RemoteBackgroundClassifier, RemoteDiscourseClassifier, RemoteScorer

logger = logging.getLogger(__name__)

STAGES = ("extract", "claims", "pairs", "regress", "telephone", "report")

INSTANCES_FILE = "instances.jsonl"
CLAIMS_FILE = "claims.jsonl"
PAIRS_FILE = "pairs.jsonl"
FEATURES_FILE = "features.jsonl"
COEFFICIENTS_FILE = "coefficients.tsv"
BINS_FILE = "bins.tsv"
FIT_FILE = "fit.json"
MATCHED_PAIRS_FILE = "matched_pairs.jsonl"
EFFECTS_FILE = "effects.tsv"
REPORT_DIR = "report"
HISTOGRAM_FILE = "histogram.tsv"

HISTOGRAM_BIN_WIDTH = 0.1
HISTOGRAM_BINS = 40


@dataclass
class PipelineConfig:
    corpus_path: str
    output_dir: str
    scorer: str = "baseline"
    remote_url: str | None = None
    workers: int = 1
    batch_size: int = 64
    seed: int = 42
    regression_spec_path: str | None = None
    schema_mode: str = "sentences"
    force: bool = False

    def validate(self) -> "PipelineConfig":
        if self.scorer not in ("baseline", "remote"):
            raise ConfigError(f"scorer must be baseline or remote, got {self.scorer!r}")
        if (self.remote_url is not None) != (self.scorer == "remote"):
            raise ConfigError("remote_url is required iff scorer = remote")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 1 <= self.batch_size <= 256:
            raise ConfigError("batch_size must be in [1, 256]")
        if self.schema_mode not in ("sentences", "raw_text"):
            raise ConfigError(f"unknown schema_mode {self.schema_mode!r}")
        return self


_CONFIG_KEYS = {
    "corpus_path": str,
    "output_dir": str,
    "scorer": str,
    "remote_url": str,
    "workers": int,
    "batch_size": int,
    "seed": int,
    "regression_spec_path": str,
    "schema_mode": str,
}


def parse_config_file(path: str) -> dict:
    """Plain-text key = value config; '#' starts a comment."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def build_config(file_values: dict | None, overrides: dict) -> PipelineConfig:
    """CLI flags override config-file values."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    missing = [k for k in ("corpus_path", "output_dir") if not merged.get(k)]
    if missing:
        raise ConfigError(f"missing required config: {', '.join(missing)}")
    force = bool(merged.pop("force", False))
    try:
        config = PipelineConfig(force=force, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()


# --- file plumbing -------------------------------------------------------------


def write_lines_atomic(path: Path, lines: Iterable[str]) -> int:
    """Write lines to a temp file and rename; an interrupted write leaves no
    partial file under the final name."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".tmp.{path.name}.{os.getpid()}"
    n = 0
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
                n += 1
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    return n


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".tmp.{path.name}.{os.getpid()}"
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


@contextmanager
def stage_lock(outdir: Path):
    """One stage at a time per output directory."""
    lock = outdir / ".citefid.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"another stage appears to be running in {outdir} (lock file {lock}); "
            "remove the lock if that run is dead"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        try:
            lock.unlink()
        except OSError:
            pass


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def stage_digest(stage: str, params: Sequence[str], input_paths: Sequence[Path]) -> str:
    digest = hashlib.sha256()
    digest.update(stage.encode())
    for param in params:
        digest.update(b"\0")
        digest.update(param.encode())
    for path in input_paths:
        digest.update(b"\0")
        digest.update(_file_sha256(path).encode())
    return digest.hexdigest()


@dataclass
class RunManifest:
    stage: str
    input_digest: str
    record_counts: dict[str, int]
    scorer: ScorerId
    started: str = ""
    finished: str = ""

    def to_json(self) -> str:
        payload = {
            "stage": self.stage,
            "input_digest": self.input_digest,
            "record_counts": dict(sorted(self.record_counts.items())),
            "scorer": {"name": self.scorer.name, "version": self.scorer.version},
            "started": self.started,
            "finished": self.finished,
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        payload = json.loads(text)
        return RunManifest(
            stage=payload["stage"],
            input_digest=payload["input_digest"],
            record_counts={k: int(v) for k, v in payload["record_counts"].items()},
            scorer=ScorerId(payload["scorer"]["name"], payload["scorer"]["version"]),
            started=payload.get("started", ""),
            finished=payload.get("finished", ""),
        )


def manifest_path(outdir: Path, stage: str) -> Path:
    return outdir / f"{stage}.manifest.json"


# --- model plumbing -------------------------------------------------------------

_BASELINE_SCORER_ID = BaselineScorer.id


def make_scorer(config: PipelineConfig):
    if config.scorer == "baseline":
        return BaselineScorer()
    scorer = RemoteScorer(config.remote_url)
    scorer.id = scorer.health()
    return scorer


def make_background_classifier(config: PipelineConfig):
    if config.scorer == "baseline":
        return extract_mod.BaselineBackgroundClassifier()
    classifier = RemoteBackgroundClassifier(config.remote_url)
    classifier.health()
    return classifier


def make_discourse_classifier(config: PipelineConfig):
    if config.scorer == "baseline":
        return claims_mod.BaselineDiscourseClassifier()
    classifier = RemoteDiscourseClassifier(config.remote_url)
    classifier.health()
    return classifier


def _classifier_tag(config: PipelineConfig) -> str:
    return "baseline" if config.scorer == "baseline" else f"remote:{config.remote_url}"


# --- worker pool ----------------------------------------------------------------


def parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map, process-parallel when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


def _rule_worker(paper: Paper):
    return extract_mod.rule_filter_candidates(paper)


def _claims_worker(paper: Paper, classifier) -> tuple[list, dict]:
    counters: Counter = Counter()
    selected = claims_mod.select_claims(paper, classifier, counters)
    return selected, dict(counters)


def _pairs_worker(args) -> tuple[list[PairRecord], dict]:
    instance_records, claim_map, scorer = args
    counters: Counter = Counter()
    instances = [extract_mod.instance_from_record(r) for r in instance_records]
    claims_by_paper = {
        pid: [claims_mod.claim_from_record(c) for c in claim_records]
        for pid, claim_records in claim_map.items()
    }
    records = list(build_pair_records(instances, claims_by_paper, scorer, counters))
    return records, dict(counters)


def _batched(items: Sequence, size: int) -> Iterable[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


# --- stages ----------------------------------------------------------------------


def _load_papers(config: PipelineConfig, counters: Counter) -> list[Paper]:
    return list(load_corpus(config.corpus_path, config.schema_mode, counters))


def run_extract(config: PipelineConfig, outdir: Path) -> tuple[Counter, ScorerId]:
    counters: Counter = Counter()
    papers = _load_papers(config, counters)
    classifier = make_background_classifier(config)
    candidates_per_paper = parallel_map(_rule_worker, papers, config.workers)
    flat_sentences: list[str] = []
    for paper, candidates in zip(papers, candidates_per_paper):
        counters["sentences_total"] += len(paper.body_sentences)
        counters["rule_candidates"] += len(candidates)
        counters["rule_rejected"] += len(paper.body_sentences) - len(candidates)
        flat_sentences.extend(sentence for _, sentence, _ in candidates)
    confidences: list[float] = []
    for chunk in _batched(flat_sentences, config.batch_size):
        confidences.extend(classifier.confidences(list(chunk)))
    labels = [(c >= extract_mod.BACKGROUND_THRESHOLD, c) for c in confidences]
    instances = []
    cursor = 0
    for paper, candidates in zip(papers, candidates_per_paper):
        paper_labels = labels[cursor : cursor + len(candidates)]
        cursor += len(candidates)
        instances.extend(
            extract_mod.assemble_instances(paper, candidates, paper_labels, counters)
        )
    instances.sort(key=lambda i: (i.citing_paper_id, i.sentence_index))
    write_lines_atomic(
        outdir / INSTANCES_FILE,
        (dump_record(extract_mod.instance_to_record(i)) for i in instances),
    )
    scorer_id = ScorerId(
        classifier.name if hasattr(classifier, "name") else "remote", "1"
    )
    return counters, scorer_id


def run_claims(config: PipelineConfig, outdir: Path) -> tuple[Counter, ScorerId]:
    counters: Counter = Counter()
    papers = _load_papers(config, counters)
    classifier = make_discourse_classifier(config)
    if config.scorer == "baseline":
        results = parallel_map(
            partial(_claims_worker, classifier=classifier), papers, config.workers
        )
        selected = []
        for claims_list, worker_counts in results:
            selected.extend(claims_list)
            counters.update(worker_counts)
    else:
        selected = []
        flat: list[str] = []
        for paper in papers:
            counters["sentences_total"] += len(paper.body_sentences)
            flat.extend(paper.body_sentences)
        labels: list[tuple[str, float]] = []
        for chunk in _batched(flat, config.batch_size):
            labels.extend(classifier.classify(list(chunk)))
        cursor = 0
        for paper in papers:
            paper_labels = labels[cursor : cursor + len(paper.body_sentences)]
            cursor += len(paper.body_sentences)
            for index, (sentence, (category, confidence)) in enumerate(
                zip(paper.body_sentences, paper_labels)
            ):
                if category in claims_mod.CLAIM_CATEGORIES:
                    counters["claims_emitted"] += 1
                    selected.append(
                        claims_mod.ClaimSentence(
                            paper.paper_id, index, sentence, category, confidence
                        )
                    )
                else:
                    counters["non_claim_sentences"] += 1
    selected.sort(key=lambda c: (c.paper_id, c.sentence_index))
    write_lines_atomic(
        outdir / CLAIMS_FILE,
        (dump_record(claims_mod.claim_to_record(c)) for c in selected),
    )
    return counters, ScorerId(getattr(classifier, "name", "remote"), "1")


def run_pairs(config: PipelineConfig, outdir: Path) -> tuple[Counter, ScorerId]:
    counters: Counter = Counter()
    instance_records = read_jsonl(outdir / INSTANCES_FILE)
    claim_records = read_jsonl(outdir / CLAIMS_FILE)
    claim_map: dict[str, list[dict]] = {}
    for record in claim_records:
        claim_map.setdefault(record["paper_id"], []).append(record)
    scorer = make_scorer(config)
    if config.scorer == "baseline" and config.workers > 1 and len(instance_records) > 1:
        instance_records.sort(key=lambda r: (r["citing_paper_id"], r["sentence_index"]))
        n_chunks = config.workers * 4
        size = max(1, (len(instance_records) + n_chunks - 1) // n_chunks)
        jobs = []
        for chunk in _batched(instance_records, size):
            needed = {r["cited_paper_id"] for r in chunk}
            subset = {pid: claim_map[pid] for pid in needed if pid in claim_map}
            jobs.append((list(chunk), subset, scorer))
        results = parallel_map(_pairs_worker, jobs, config.workers)
        records: list[PairRecord] = []
        for chunk_records, worker_counts in results:
            records.extend(chunk_records)
            counters.update(worker_counts)
    else:
        instances = [extract_mod.instance_from_record(r) for r in instance_records]
        claims_by_paper = {
            pid: [claims_mod.claim_from_record(c) for c in recs]
            for pid, recs in claim_map.items()
        }
        records = list(build_pair_records(instances, claims_by_paper, scorer, counters))
    records.sort(key=lambda r: (r.citing_paper_id, r.citing_sentence_index))
    write_lines_atomic(
        outdir / PAIRS_FILE, (dump_record(pair_to_record(r)) for r in records)
    )
    return counters, scorer.id


def _load_regression_spec(config: PipelineConfig) -> regression_mod.RegressionSpec:
    if config.regression_spec_path:
        try:
            text = Path(config.regression_spec_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read regression spec: {exc}") from exc
        return regression_mod.parse_spec_config(text)
    return regression_mod.RegressionSpec()


def run_regress(config: PipelineConfig, outdir: Path) -> tuple[Counter, ScorerId]:
    counters: Counter = Counter()
    pair_records = [pair_from_record(r) for r in read_jsonl(outdir / PAIRS_FILE)]
    instance_records = read_jsonl(outdir / INSTANCES_FILE)
    reference_counts: Counter = Counter(
        (r["citing_paper_id"], r["cited_paper_id"]) for r in instance_records
    )
    papers = {p.paper_id: p for p in _load_papers(config, Counter())}
    rows: list[regression_mod.FeatureRow] = []
    for record in pair_records:
        counters["pairs_read"] += 1
        citing = papers.get(record.citing_paper_id)
        cited = papers.get(record.cited_paper_id)
        if (
            citing is None
            or cited is None
            or not 0 <= record.citing_sentence_index < len(citing.body_sentences)
        ):
            counters["rows_dropped_missing_paper"] += 1
            continue
        try:
            rows.append(
                regression_mod.derive_features(
                    record,
                    citing,
                    cited,
                    reference_counts[(record.citing_paper_id, record.cited_paper_id)],
                )
            )
        except ValueError:
            counters["rows_dropped_invalid"] += 1
    counters["rows_derived"] += len(rows)
    spec = _load_regression_spec(config)
    kept, dropped = regression_mod.complete_rows(rows, spec)
    counters["rows_dropped_missing_metadata"] += dropped
    counters["rows_kept"] += len(kept)
    spec = spec.with_levels_from(kept)
    design = regression_mod.encode_design_matrix(kept, spec)
    fit = regression_mod.fit_ols(design)
    write_lines_atomic(
        outdir / FEATURES_FILE,
        (dump_record(regression_mod.feature_to_record(r)) for r in rows),
    )
    write_text_atomic(outdir / COEFFICIENTS_FILE, regression_mod.summarize(fit))
    fit_payload = {
        "coefficients": fit.coefficients,
        "standard_errors": fit.standard_errors,
        "t_values": fit.t_values,
        "p_values": fit.p_values,
        "r_squared": fit.r_squared,
        "adjusted_r_squared": fit.adjusted_r_squared,
        "n_observations": fit.n_observations,
    }
    write_text_atomic(
        outdir / FIT_FILE,
        json.dumps(fit_payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
    )
    bin_lines = ["variable\tbin\tcount\tmean_fidelity"]
    for variable in spec.continuous:
        n_bins = spec.bins.get(variable, 10)
        try:
            binned = regression_mod.bin_continuous(kept, variable, n_bins)
        except ValueError:
            counters["bins_skipped_constant"] += 1
            continue
        for label, count, mean in binned:
            mean_text = f"{mean:.6f}" if mean is not None else ""
            bin_lines.append(f"{variable}\t{label}\t{count}\t{mean_text}")
    write_text_atomic(outdir / BINS_FILE, "\n".join(bin_lines) + "\n")
    return counters, _BASELINE_SCORER_ID if config.scorer == "baseline" else ScorerId(
        "remote", "1"
    )


def run_telephone(config: PipelineConfig, outdir: Path) -> tuple[Counter, ScorerId]:
    counters: Counter = Counter()
    pair_records = [pair_from_record(r) for r in read_jsonl(outdir / PAIRS_FILE)]
    counters["pairs_read"] += len(pair_records)
    papers = {p.paper_id: p for p in _load_papers(config, Counter())}
    graph = build_citation_graph(papers.values(), counters)
    index = telephone_mod.index_pairs(pair_records)
    triples = list(telephone_mod.find_intermediary_triples(graph, index, counters))
    matched = list(
        telephone_mod.match_controls(triples, index, papers, graph, counters)
    )
    write_lines_atomic(
        outdir / MATCHED_PAIRS_FILE,
        (dump_record(telephone_mod.matched_pair_to_record(m)) for m in matched),
    )
    overall = None
    if len(matched) >= 2:
        overall = telephone_mod.estimate_effect(matched)
    strata = telephone_mod.stratify_by_intermediary_fidelity(matched)
    write_text_atomic(
        outdir / EFFECTS_FILE, telephone_mod.effects_table(overall, strata, len(matched))
    )
    return counters, _BASELINE_SCORER_ID if config.scorer == "baseline" else ScorerId(
        "remote", "1"
    )


def fidelity_histogram(scores: Sequence[float]) -> list[tuple[float, float, int]]:
    """Fixed 0.1-width bins over [1, 5]; 5.0 falls in the final bin."""
    counts = [0] * HISTOGRAM_BINS
    for score in scores:
        index = min(HISTOGRAM_BINS - 1, int((score - 1.0) / HISTOGRAM_BIN_WIDTH + 1e-9))
        counts[index] += 1
    out = []
    for i in range(HISTOGRAM_BINS):
        lo = 1.0 + i * HISTOGRAM_BIN_WIDTH
        hi = 1.0 + (i + 1) * HISTOGRAM_BIN_WIDTH
        out.append((lo, hi, counts[i]))
    return out


def run_report(config: PipelineConfig, outdir: Path) -> tuple[Counter, ScorerId]:
    counters: Counter = Counter()
    pair_records = read_jsonl(outdir / PAIRS_FILE)
    scores = [float(r["fidelity"]) for r in pair_records]
    counters["pairs_read"] += len(scores)
    lines = ["bin_lo\tbin_hi\tcount"]
    for lo, hi, count in fidelity_histogram(scores):
        lines.append(f"{lo:.1f}\t{hi:.1f}\t{count}")
        counters["histogram_total"] += count
    report_dir = outdir / REPORT_DIR
    write_text_atomic(report_dir / HISTOGRAM_FILE, "\n".join(lines) + "\n")
    for name in (COEFFICIENTS_FILE, EFFECTS_FILE):
        source = outdir / name
        if source.exists():
            write_text_atomic(report_dir / name, source.read_text(encoding="utf-8"))
    return counters, _BASELINE_SCORER_ID if config.scorer == "baseline" else ScorerId(
        "remote", "1"
    )


# --- stage registry ----------------------------------------------------------------


@dataclass
class _StageDef:
    run: Callable[[PipelineConfig, Path], tuple[Counter, ScorerId]]
    inputs: Callable[[PipelineConfig, Path], list[tuple[Path, str | None]]]
    outputs: tuple[str, ...]
    params: Callable[[PipelineConfig], list[str]] = field(default=lambda config: [])


def _corpus_input(config: PipelineConfig) -> tuple[Path, str | None]:
    return Path(config.corpus_path), None


def _stage_defs() -> dict[str, _StageDef]:
    return {
        "extract": _StageDef(
            run=run_extract,
            inputs=lambda c, out: [_corpus_input(c)],
            outputs=(INSTANCES_FILE,),
            params=lambda c: [c.schema_mode, _classifier_tag(c), str(c.batch_size)],
        ),
        "claims": _StageDef(
            run=run_claims,
            inputs=lambda c, out: [_corpus_input(c)],
            outputs=(CLAIMS_FILE,),
            params=lambda c: [c.schema_mode, _classifier_tag(c), str(c.batch_size)],
        ),
        "pairs": _StageDef(
            run=run_pairs,
            inputs=lambda c, out: [
                (out / INSTANCES_FILE, "extract"),
                (out / CLAIMS_FILE, "claims"),
            ],
            outputs=(PAIRS_FILE,),
            params=lambda c: [_classifier_tag(c)],
        ),
        "regress": _StageDef(
            run=run_regress,
            inputs=lambda c, out: [
                (out / PAIRS_FILE, "pairs"),
                (out / INSTANCES_FILE, "extract"),
                _corpus_input(c),
            ],
            outputs=(FEATURES_FILE, COEFFICIENTS_FILE, BINS_FILE, FIT_FILE),
            params=lambda c: [c.schema_mode, _spec_param(c)],
        ),
        "telephone": _StageDef(
            run=run_telephone,
            inputs=lambda c, out: [(out / PAIRS_FILE, "pairs"), _corpus_input(c)],
            outputs=(MATCHED_PAIRS_FILE, EFFECTS_FILE),
            params=lambda c: [c.schema_mode],
        ),
        "report": _StageDef(
            run=run_report,
            inputs=lambda c, out: [(out / PAIRS_FILE, "pairs")],
            outputs=(f"{REPORT_DIR}/{HISTOGRAM_FILE}",),
            params=lambda c: [],
        ),
    }


def _spec_param(config: PipelineConfig) -> str:
    if not config.regression_spec_path:
        return "default-spec"
    try:
        return Path(config.regression_spec_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read regression spec: {exc}") from exc


def run_stage(name: str, config: PipelineConfig) -> RunManifest:
    """Run one pipeline stage with idempotence and dependency checks."""
    if name not in STAGES:
        raise ConfigError(f"unknown stage {name!r}; stages are {', '.join(STAGES)}")
    config.validate()
    defs = _stage_defs()[name]
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    input_specs = defs.inputs(config, outdir)
    input_paths = []
    for path, producer in input_specs:
        if not path.exists():
            if producer is None:
                raise ConfigError(f"corpus file not found: {path}")
            raise DependencyError(
                f"stage '{name}' requires {path.name}; run '{producer}' first"
            )
        input_paths.append(path)
    digest = stage_digest(name, defs.params(config), input_paths)
    mpath = manifest_path(outdir, name)
    if not config.force and mpath.exists():
        try:
            previous = RunManifest.from_json(mpath.read_text(encoding="utf-8"))
        except (ValueError, KeyError):
            previous = None
        if (
            previous is not None
            and previous.input_digest == digest
            and all((outdir / rel).exists() for rel in defs.outputs)
        ):
            logger.info("stage %s: inputs unchanged, skipping (use force to rerun)", name)
            return previous
    with stage_lock(outdir):
        started = datetime.now(timezone.utc).isoformat()
        counters, scorer_id = defs.run(config, outdir)
        manifest = RunManifest(
            stage=name,
            input_digest=digest,
            record_counts=dict(counters),
            scorer=scorer_id,
            started=started,
            finished=datetime.now(timezone.utc).isoformat(),
        )
        write_text_atomic(mpath, manifest.to_json() + "\n")
    logger.info(
        "stage %s: done (%s)",
        name,
        ", ".join(f"{k}={v}" for k, v in sorted(manifest.record_counts.items())),
    )
    return manifest
