"""Device-side orchestrator: segment incoming audio, decide keywords locally
for the instant path, and forward utterance audio to the transcription server
for the slower, more accurate path.

Local recognition never waits on the network: segments are handed to a
forwarder thread through an unbounded queue, and the forwarder feeds a
bounded chunk FIFO that applies backpressure to forwarding only.
"""

from __future__ import annotations

import json
import queue
import socket
import sys
import threading
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import protocol as proto
from .audio_io import AudioClip, read_wav_int16
from .endpointing import EndpointConfig, segment
from .errors import ConnectFailed, HasrError, ProtocolError
from .recognizer import WordModelSet, recognize

CHUNK_QUEUE_CAPACITY = 64


class EdgePolicy(Enum):
    LOCAL_ONLY = "local"
    REMOTE_ONLY = "remote"
    HYBRID = "hybrid"

    @property
    def wants_local(self) -> bool:
        return self in (EdgePolicy.LOCAL_ONLY, EdgePolicy.HYBRID)

    @property
    def wants_remote(self) -> bool:
        return self in (EdgePolicy.REMOTE_ONLY, EdgePolicy.HYBRID)


@dataclass
class EdgeConfig:
    endpoint: EndpointConfig = EndpointConfig()
    threshold: float | None = None
    connect_timeout: float = 5.0
    reply_timeout: float = 60.0


class EventEmitter:
    """Serializes JSON-line event output across threads."""

    def __init__(self, out):
        self.out = out
        self._lock = threading.Lock()
        self.events: list[dict] = []

    def emit(self, event: dict) -> None:
        with self._lock:
            self.events.append(event)
            self.out.write(json.dumps(event) + "\n")
            self.out.flush()


class ProtocolClient:
    """Blocking protocol client: one session, one utterance in flight."""

    def __init__(self, address: tuple[str, int], cfg: EdgeConfig):
        try:
            self.sock = socket.create_connection(address, timeout=cfg.connect_timeout)
        except OSError as exc:
            raise ConnectFailed(f"cannot connect to {address[0]}:{address[1]}: {exc}") from exc
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.sock.settimeout(cfg.reply_timeout)
        self.decoder = proto.StreamDecoder()
        self._pending: list[proto.WireMessage] = []
        self.sock.sendall(proto.encode(proto.Hello()))
        reply = self._next_message()
        if not isinstance(reply, proto.HelloAck) or reply.accepted != 1:
            self.sock.close()
            raise ConnectFailed(f"server rejected handshake: {reply!r}")

    def _next_message(self) -> proto.WireMessage:
        while not self._pending:
            self._pending.extend(self.decoder.feed(self._recv()))
        return self._pending.pop(0)

    def _recv(self) -> bytes:
        data = self.sock.recv(65536)
        if not data:
            raise ConnectFailed("server closed the connection")
        return data

    def send(self, msg: proto.WireMessage) -> None:
        self.sock.sendall(proto.encode(msg))

    def await_reply(self, utt_id: int) -> proto.Transcript | proto.Error:
        while True:
            msg = self._next_message()
            if isinstance(msg, proto.Pong):
                continue
            if isinstance(msg, proto.Transcript) and msg.utt_id == utt_id:
                return msg
            if isinstance(msg, proto.Error):
                return msg
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"unexpected reply {type(msg).__name__} for utt {utt_id}"
            )

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


def read_pcm_source(path: str) -> np.ndarray:
    """Load int16 samples from a WAV file or raw 16 kHz PCM on stdin ('-')."""
    if path == "-":
        raw = sys.stdin.buffer.read()
        if len(raw) % 2 != 0:
            raw = raw[:-1]
        return np.frombuffer(raw, dtype="<i2")
    return read_wav_int16(path)


def _forwarder(seg_queue: queue.Queue, chunk_queue: queue.Queue) -> None:
    """Splits queued segments into wire-size chunks; the bounded chunk FIFO
    is the only place backpressure is applied."""
    while True:
        item = seg_queue.get()
        if item is None:
            chunk_queue.put(None)
            return
        utt_id, pcm, t_end = item
        chunk_queue.put(("start", utt_id))
        for seq, lo in enumerate(range(0, len(pcm), proto.CHUNK_BYTES)):
            chunk_queue.put(("chunk", utt_id, seq, pcm[lo : lo + proto.CHUNK_BYTES]))
        chunk_queue.put(("end", utt_id, t_end))


def _network_worker(
    client: ProtocolClient | None,
    chunk_queue: queue.Queue,
    emitter: EventEmitter,
    failure: str | None,
) -> None:
    """Writes chunks to the socket and emits Transcript/Error events.

    After any network failure the worker keeps draining the queue, emitting
    one Error event per finished utterance so every utterance yields at
    least one event.
    """
    while True:
        item = chunk_queue.get()
        if item is None:
            if client is not None:
                client.close()
            return
        try:
            if failure is not None:
                raise ConnectFailed(failure)
            if item[0] == "start":
                client.send(proto.UttStart(utt_id=item[1]))
            elif item[0] == "chunk":
                client.send(proto.AudioChunk(utt_id=item[1], seq=item[2], pcm=item[3]))
            else:
                _, utt_id, t_end = item
                client.send(proto.UttEnd(utt_id=utt_id))
                t_sent = time.perf_counter()
                reply = client.await_reply(utt_id)
                now = time.perf_counter()
                wall_ms = (now - t_end) * 1000.0
                net_ms = (now - t_sent) * 1000.0
                if isinstance(reply, proto.Transcript):
                    emitter.emit(
                        {
                            "kind": "Transcript",
                            "utt_id": utt_id,
                            "text": reply.text,
                            "confidence_bp": reply.confidence_bp,
                            "wall_ms_since_utt_end": wall_ms,
                            "net_ms": net_ms,
                        }
                    )
                else:
                    emitter.emit(
                        {
                            "kind": "Error",
                            "utt_id": utt_id,
                            "text": f"server error {reply.code}: {reply.msg}",
                        }
                    )
        except (HasrError, OSError) as exc:
            if failure is None:
                failure = str(exc)
                if client is not None:
                    client.close()
            if item[0] == "end":
                emitter.emit({"kind": "Error", "utt_id": item[1], "text": failure})


def run_edge(
    source: str,
    model: WordModelSet | None,
    policy: EdgePolicy,
    server: tuple[str, int] | None,
    out=sys.stdout,
    cfg: EdgeConfig = EdgeConfig(),
) -> list[dict]:
    """Process one audio source; emit ordered events as JSON lines on `out`.

    Raises ConnectFailed under RemoteOnly when no server is reachable; under
    Hybrid the run degrades to local-only with an Error event instead.
    """
    if policy.wants_local and model is None:
        raise ValueError(f"policy {policy.value} requires a model")
    if policy.wants_remote and server is None:
        raise ValueError(f"policy {policy.value} requires a server address")

    emitter = EventEmitter(out)
    pcm16 = read_pcm_source(source)
    clip = AudioClip.from_int16(pcm16, source_path=source)
    segments = segment(clip, cfg.endpoint)

    client = None
    failure = None
    if policy.wants_remote:
        try:
            client = ProtocolClient(server, cfg)
        except ConnectFailed as exc:
            if policy is EdgePolicy.REMOTE_ONLY:
                raise
            failure = str(exc)
            emitter.emit({"kind": "Error", "utt_id": 0, "text": f"degrading to local: {exc}"})

    seg_queue: queue.Queue = queue.Queue()
    chunk_queue: queue.Queue = queue.Queue(maxsize=CHUNK_QUEUE_CAPACITY)
    threads = []
    if policy.wants_remote:
        threads = [
            threading.Thread(target=_forwarder, args=(seg_queue, chunk_queue), daemon=True),
            threading.Thread(
                target=_network_worker, args=(client, chunk_queue, emitter, failure), daemon=True
            ),
        ]
        for t in threads:
            t.start()

    for i, seg in enumerate(segments):
        utt_id = i + 1
        t_end = time.perf_counter()
        seg_pcm = pcm16[seg.start_sample : seg.end_sample]

        if policy.wants_local:
            t0 = time.perf_counter()
            try:
                rec = recognize(model, AudioClip.from_int16(seg_pcm), cfg.threshold)
            except HasrError as exc:
                emitter.emit({"kind": "Error", "utt_id": utt_id, "text": str(exc)})
                continue
            compute_ms = (time.perf_counter() - t0) * 1000.0
            wall_ms = (time.perf_counter() - t_end) * 1000.0
            if rec.best_word is None:
                event = {"kind": "Rejected", "utt_id": utt_id}
                best = max(rec.scores.values())
                event["score"] = None if best == float("-inf") else best
            else:
                event = {
                    "kind": "Keyword",
                    "utt_id": utt_id,
                    "word": rec.best_word,
                    "score": rec.scores[rec.best_word],
                }
            event["compute_ms"] = compute_ms
            event["wall_ms_since_utt_end"] = wall_ms
            emitter.emit(event)

        if policy.wants_remote:
            seg_queue.put((utt_id, seg_pcm.astype("<i2").tobytes(), t_end))

    if policy.wants_remote:
        seg_queue.put(None)
        for t in threads:
            t.join()
    return emitter.events
