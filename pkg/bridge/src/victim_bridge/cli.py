"""Entry point: ``victim-bridge --model bow:weights.json --stdio`` or
``--port 8765``. Startup failures exit 2; protocol-level problems never
terminate a running server."""

from __future__ import annotations

import argparse
import sys

from .models import ModelError
from .server import ServerConfig, serve


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="victim-bridge",
        description="Serve a text classifier over the victim wire protocol.",
    )
    parser.add_argument("--model", required=True,
                        help="bow:<weights.json> | py:<module>:<attr>")
    transport = parser.add_mutually_exclusive_group(required=True)
    transport.add_argument("--stdio", action="store_true",
                           help="speak line JSON on stdin/stdout")
    transport.add_argument("--port", type=int, help="serve HTTP on this port")
    args = parser.parse_args(argv)

    config = ServerConfig(
        transport="stdio" if args.stdio else "http",
        model_spec=args.model,
        port=args.port,
    )
    try:
        serve(config)
    except ModelError as exc:
        print(f"victim-bridge: {exc}", file=sys.stderr)
        sys.exit(2)
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
