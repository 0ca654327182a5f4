"""Launcher for the scoring sidecar."""

from __future__ import annotations

import argparse
import sys

from .model import ModelError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="comet-bridge",
        description="Serve MT quality scores over the scorer wire protocol",
    )
    parser.add_argument("--model", default=None,
                        help="model spec: default pretrained, or constant:<v>")
    parser.add_argument("--weights", default=None,
                        help="alternative weights file for the pretrained model")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8402)
    args = parser.parse_args(argv)

    import uvicorn

    from .server import create_app

    try:
        app = create_app(
            model_spec=args.model,
            weights_path=args.weights,
            batch_size=args.batch_size,
        )
    except (ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
