"""Command-line driver.

    citefid extract|claims|pairs|regress|telephone|report --corpus ... --out ...
    citefid gen-synthetic --corpus corpus.jsonl --seed 42 --papers 200

Exit codes: 0 success, 2 config error, 3 dependency error, 4 transport error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .corpus import write_corpus
from .errors import CitefidError, ConfigError, DependencyError, TransportError
from .pipeline import STAGES, build_config, parse_config_file, run_stage
from .synth import generate_corpus


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="plain-text key = value config file")
    parser.add_argument("--corpus", dest="corpus_path", help="corpus jsonl path")
    parser.add_argument("--out", dest="output_dir", help="stage output directory")
    parser.add_argument("--scorer", choices=("baseline", "remote"))
    parser.add_argument("--remote-url", dest="remote_url")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--schema-mode", dest="schema_mode", choices=("sentences", "raw_text"))
    parser.add_argument("--regression-spec", dest="regression_spec_path")
    parser.add_argument("--force", action="store_true", default=None,
                        help="recompute even when inputs are unchanged")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="citefid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        stage_parser = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_common_flags(stage_parser)
    gen = sub.add_parser("gen-synthetic", help="write a seeded synthetic corpus")
    _add_common_flags(gen)
    gen.add_argument("--papers", type=int, default=200)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "corpus_path",
        "output_dir",
        "scorer",
        "remote_url",
        "workers",
        "batch_size",
        "seed",
        "schema_mode",
        "regression_spec_path",
        "force",
    )
    return {k: getattr(args, k, None) for k in keys}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-synthetic":
            corpus_path = args.corpus_path
            if not corpus_path:
                raise ConfigError("gen-synthetic requires --corpus (the file to write)")
            seed = args.seed if args.seed is not None else 42
            papers = generate_corpus(seed=seed, n_papers=args.papers)
            n = write_corpus(papers, corpus_path)
            print(f"wrote {n} synthetic papers to {corpus_path} (seed {seed})")
            return 0
        file_values = parse_config_file(args.config) if args.config else None
        config = build_config(file_values, _overrides(args))
        manifest = run_stage(args.command, config)
        counts = ", ".join(f"{k}={v}" for k, v in sorted(manifest.record_counts.items()))
        print(f"{args.command}: ok ({counts})")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return 3
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 4
    except CitefidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
