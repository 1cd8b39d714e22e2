"""Launch the sidecar.

    citefid-sidecar --scorer-ckpt PATH --background-ckpt PATH \
                    --discourse-ckpt PATH [--bind HOST:PORT] [--max-batch N]
    citefid-sidecar --stub [--bind HOST:PORT]   # deterministic stub, no checkpoints

All three checkpoints must load or the service refuses to start.
"""

from __future__ import annotations

import argparse
import sys

from .models import DEFAULT_MAX_BATCH, CheckpointError, HFModelBundle, StubModelBundle


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="citefid-sidecar", description=__doc__)
    parser.add_argument("--scorer-ckpt")
    parser.add_argument("--background-ckpt")
    parser.add_argument("--discourse-ckpt")
    parser.add_argument("--bind", default="127.0.0.1:8750")
    parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--stub",
        action="store_true",
        help="serve the deterministic stub bundle instead of checkpoints",
    )
    return parser


def make_bundle(args: argparse.Namespace):
    if args.max_batch < 1 or args.max_batch > DEFAULT_MAX_BATCH:
        raise CheckpointError(f"--max-batch must be in [1, {DEFAULT_MAX_BATCH}]")
    if args.stub:
        return StubModelBundle(max_batch=args.max_batch)
    missing = [
        flag
        for flag, value in (
            ("--scorer-ckpt", args.scorer_ckpt),
            ("--background-ckpt", args.background_ckpt),
            ("--discourse-ckpt", args.discourse_ckpt),
        )
        if not value
    ]
    if missing:
        raise CheckpointError(f"missing {', '.join(missing)} (or pass --stub)")
    return HFModelBundle(
        scorer_checkpoint=args.scorer_ckpt,
        background_checkpoint=args.background_ckpt,
        discourse_checkpoint=args.discourse_ckpt,
        device=args.device,
        max_batch=args.max_batch,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        bundle = make_bundle(args)
    except CheckpointError as exc:
        print(f"startup error: {exc}", file=sys.stderr)
        return 1
    from .app import create_app

    host, _, port = args.bind.partition(":")
    import uvicorn

    uvicorn.run(create_app(bundle), host=host or "127.0.0.1", port=int(port or 8750))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
