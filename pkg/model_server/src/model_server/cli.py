"""Command-line entry point for the inference sidecar."""

from __future__ import annotations

import argparse
import sys

from .app import serve
from .config import ServerConfig, ServerConfigError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="segsynth-model-server",
        description="Serve caption/detect/segment/generate/embed over HTTP",
    )
    parser.add_argument("--config", help="JSON config file (checkpoints, adapters, host/port)")
    parser.add_argument("--adapters", choices=["stub", "pretrained"], default=None)
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        if args.config:
            config = ServerConfig.from_json_file(
                args.config, adapters=args.adapters, host=args.host, port=args.port
            )
        else:
            overrides = {
                k: v
                for k, v in (("adapters", args.adapters), ("host", args.host), ("port", args.port))
                if v is not None
            }
            config = ServerConfig(**overrides)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))

    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
