"""Operator entry point: train / recognize / evaluate / serve / edge / synth.

Machine-readable output is JSON on stdout; human prose goes to stderr.
Exit codes: 0 success, 1 usage or config error, 2 runtime error (I/O,
network, data), 3 evaluation below --min-accuracy.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import audio_io, edge, recognizer, server, synth
from .edge import EdgeConfig, EdgePolicy
from .errors import ConfigError, ConnectFailed, HasrError
from .hmm import BaumWelchConfig
from .recognizer import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_BELOW_THRESHOLD = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the exit-code table wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_words(arg: str) -> list[str]:
    words = [w.strip() for w in arg.split(",") if w.strip()]
    if not words:
        raise ConfigError("empty --words list")
    return words


def _parse_address(arg: str) -> tuple[str, int]:
    host, sep, port = arg.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"address must be host:port, got {arg!r}")
    return host or "127.0.0.1", int(port)


def _print_json(obj) -> None:
    print(json.dumps(obj))


def _json_score(value: float) -> float | None:
    # -inf (impossible sequence) is not representable in JSON
    return None if math.isinf(value) else value


def cmd_train(args) -> int:
    cfg = TrainConfig(
        words=tuple(_parse_words(args.words)),
        n_states=args.states,
        skip=args.skip,
        codebook_k=args.codebook,
        seed=args.seed,
        bw=BaumWelchConfig(max_iters=args.max_iters, tol=args.tol),
    )
    index = audio_io.scan_dataset(args.data, list(cfg.words))
    ms, histories = recognizer.train_word_models_report(index, cfg)
    recognizer.save_model(ms, args.out)
    print(f"trained {len(cfg.words)} word models -> {args.out}", file=sys.stderr)
    _print_json(
        {
            "model": args.out,
            "words": {w: {"final_log_likelihood": histories[w][-1],
                          "iterations": len(histories[w]) - 1} for w in cfg.words},
            "codebook_distortion": ms.codebook.training_distortion,
        }
    )
    return EXIT_OK


def cmd_recognize(args) -> int:
    ms = recognizer.load_model(args.model)
    clip = audio_io.read_wav(args.wav)
    rec = recognizer.recognize(ms, clip, threshold=args.threshold)
    _print_json(
        {
            "best_word": rec.best_word,
            "scores": {w: _json_score(s) for w, s in rec.scores.items()},
            "t_frames": rec.t_frames,
        }
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ms = recognizer.load_model(args.model)
    index = audio_io.scan_dataset(args.data, ms.words())
    report = recognizer.evaluate(ms, index)
    _print_json(
        {
            "accuracy": report.accuracy,
            "n_test": report.n_test,
            "per_word_accuracy": report.per_word_accuracy,
            "confusion": report.confusion,
        }
    )
    if args.min_accuracy is not None and report.accuracy < args.min_accuracy:
        print(
            f"accuracy {report.accuracy:.4f} below required {args.min_accuracy}",
            file=sys.stderr,
        )
        return EXIT_BELOW_THRESHOLD
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        backend = server.parse_backend_spec(args.backend)
    except (ValueError, OSError) as exc:
        print(f"bad --backend: {exc}", file=sys.stderr)
        return EXIT_USAGE
    srv = server.TranscriptionServer(
        listen=_parse_address(args.listen), backend=backend, log_path=args.log
    )
    host, port = srv.address
    print(f"listening on {host}:{port}", file=sys.stderr)
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        srv.stop()
    return EXIT_OK


def cmd_edge(args) -> int:
    policy = EdgePolicy(args.policy)
    if policy.wants_local and not args.model:
        print(f"policy {policy.value} requires --model", file=sys.stderr)
        return EXIT_USAGE
    model = recognizer.load_model(args.model) if policy.wants_local else None
    address = _parse_address(args.connect) if args.connect else None
    if policy.wants_remote and address is None:
        print(f"policy {policy.value} requires --connect", file=sys.stderr)
        return EXIT_USAGE
    cfg = EdgeConfig(threshold=args.threshold)
    edge.run_edge(args.input, model, policy, address, out=sys.stdout, cfg=cfg)
    return EXIT_OK


def cmd_synth(args) -> int:
    words = _parse_words(args.words)
    synth.generate_dataset(args.out, words, args.clips_per_word, args.seed)
    _print_json({"out": args.out, "words": words, "clips_per_word": args.clips_per_word})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hasr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train word models from a dataset directory")
    p.add_argument("--data", required=True, help="dataset root (one directory per word)")
    p.add_argument("--words", required=True, help="comma-separated word list")
    p.add_argument("--out", required=True, help="output model file (*.hasr.json)")
    p.add_argument("--states", type=int, default=5, help="HMM states per word")
    p.add_argument("--skip", type=int, default=2, help="max forward state jump (1 or 2)")
    p.add_argument("--codebook", type=int, default=64, help="VQ codebook size")
    p.add_argument("--seed", type=int, default=17, help="training seed")
    p.add_argument("--max-iters", type=int, default=40, help="Baum-Welch iteration cap")
    p.add_argument("--tol", type=float, default=1e-4, help="Baum-Welch stopping tolerance")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", help="recognize one WAV clip")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--threshold", type=float, default=None,
                   help="per-frame log-likelihood rejection threshold")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("evaluate", help="evaluate a model on a dataset's Test split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--min-accuracy", type=float, default=None,
                   help="exit 3 if accuracy falls below this")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the transcription server")
    p.add_argument("--listen", default="127.0.0.1:7321", help="host:port to bind")
    p.add_argument("--backend", required=True,
                   help='mock:fixed:TEXT | mock:table:FILE | mock:echohash')
    p.add_argument("--log", default=None, help="append transcripts as JSON lines here")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("edge", help="run the edge pipeline over a WAV file or stdin PCM")
    p.add_argument("--model", default=None, help="model file (local/hybrid policies)")
    p.add_argument("--input", required=True, help="WAV path, or - for raw int16 PCM on stdin")
    p.add_argument("--policy", choices=["local", "remote", "hybrid"], default="local")
    p.add_argument("--connect", default=None, help="server host:port (remote/hybrid)")
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_edge)

    p = sub.add_parser("synth", help="generate a synthetic word-surrogate dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--words", required=True)
    p.add_argument("--clips-per-word", type=int, default=50)
    p.add_argument("--seed", type=int, default=17)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConnectFailed as exc:
        print(f"connect failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except HasrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
