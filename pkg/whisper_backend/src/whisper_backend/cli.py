"""Run the protocol-compatible transcription server around a pretrained model."""

from __future__ import annotations

import argparse
import logging
import sys

from .model import BackendConfig, ModelUnavailable, load_model
from .service import BackendServer


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="whisper-backend", description=__doc__)
    parser.add_argument("--listen", default="127.0.0.1:7322", help="host:port to bind")
    parser.add_argument("--model-size", default="medium", choices=["tiny", "small", "medium"])
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    host, _, port = args.listen.rpartition(":")
    if not port.isdigit():
        print(f"--listen must be host:port, got {args.listen!r}", file=sys.stderr)
        return 1

    cfg = BackendConfig(model_size=args.model_size, listen_host=host or "127.0.0.1",
                        listen_port=int(port), device=args.device)
    try:
        model = load_model(cfg)
    except ModelUnavailable as exc:
        print(f"cannot load speech model: {exc}", file=sys.stderr)
        return 2

    server = BackendServer((cfg.listen_host, cfg.listen_port), model)
    print(f"serving {cfg.model_size} model on {server.address[0]}:{server.address[1]}",
          file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
