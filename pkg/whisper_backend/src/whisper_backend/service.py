"""Drop-in transcription server: same session grammar and byte layout as the
reference transcription service, fulfilled by a pretrained speech model.

Connections are served one at a time (the model is not concurrent-safe);
the listen backlog queues the rest.
"""

from __future__ import annotations

import logging
import socket
import threading

from . import wire
from .model import SpeechModel, TranscriptionFailed

log = logging.getLogger("whisper_backend")

MAX_UTT_SAMPLES = 960_000
MAX_UTT_BYTES = 2 * MAX_UTT_SAMPLES
RECV_SIZE = 65536


class _EndSession(Exception):
    def __init__(self, replies: list[wire.Message]):
        self.replies = replies


class SessionHandler:
    """One connection's protocol state; returns replies per message."""

    def __init__(self, model: SpeechModel):
        self.model = model
        self.greeted = False
        self.open_utts: dict[int, tuple[int, bytearray]] = {}
        self.used: set[int] = set()

    def _violation(self, detail: str, code: int = wire.ERR_PROTOCOL_VIOLATION):
        raise _EndSession([wire.Error(code=code, msg=detail)])

    def on_message(self, msg: wire.Message) -> list[wire.Message]:
        if not self.greeted:
            if not isinstance(msg, wire.Hello):
                self._violation(f"expected Hello first, got {type(msg).__name__}")
            supported = (
                msg.proto_version == wire.PROTO_VERSION
                and msg.sample_rate == 16000
                and msg.channels == 1
                and msg.bits == 16
                and msg.encoding == 0
            )
            if not supported:
                raise _EndSession([
                    wire.HelloAck(accepted=0),
                    wire.Error(
                        code=wire.ERR_UNSUPPORTED_PARAMS,
                        msg=f"unsupported params: rate={msg.sample_rate} "
                            f"ch={msg.channels} bits={msg.bits} enc={msg.encoding}",
                    ),
                ])
            self.greeted = True
            return [wire.HelloAck(accepted=1)]

        if isinstance(msg, wire.Ping):
            return [wire.Pong()]
        if isinstance(msg, wire.UttStart):
            if msg.utt_id in self.used:
                self._violation(f"utt_id {msg.utt_id} reused")
            self.used.add(msg.utt_id)
            self.open_utts[msg.utt_id] = (0, bytearray())
            return []
        if isinstance(msg, wire.AudioChunk):
            if msg.utt_id not in self.open_utts:
                self._violation(f"chunk for unopened utt {msg.utt_id}")
            expected_seq, buf = self.open_utts[msg.utt_id]
            if msg.seq != expected_seq:
                self._violation(f"utt {msg.utt_id} seq {msg.seq}, expected {expected_seq}")
            buf.extend(msg.pcm)
            if len(buf) > MAX_UTT_BYTES:
                self._violation(
                    f"utterance exceeds {MAX_UTT_SAMPLES} samples",
                    code=wire.ERR_UNSUPPORTED_PARAMS,
                )
            self.open_utts[msg.utt_id] = (expected_seq + 1, buf)
            return []
        if isinstance(msg, wire.UttEnd):
            if msg.utt_id not in self.open_utts:
                self._violation(f"end for unopened utt {msg.utt_id}")
            _, buf = self.open_utts.pop(msg.utt_id)
            return [self._transcribe(msg.utt_id, bytes(buf))]
        self._violation(f"client may not send {type(msg).__name__}")

    def _transcribe(self, utt_id: int, pcm: bytes) -> wire.Message:
        try:
            text, confidence = self.model.transcribe_pcm(pcm)
        except TranscriptionFailed as exc:
            return wire.Error(code=wire.ERR_BACKEND_FAILURE, msg=f"model failure: {exc}")
        except Exception as exc:  # model stacks raise all sorts of things
            return wire.Error(code=wire.ERR_BACKEND_FAILURE, msg=f"model failure: {exc}")
        return wire.Transcript(utt_id=utt_id, text=text, confidence_bp=confidence)


class BackendServer:
    def __init__(self, listen: tuple[str, int], model: SpeechModel):
        self.model = model
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._sock = socket.create_server(listen, backlog=16)
        self._sock.settimeout(0.2)

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()[:2]

    def serve_forever(self) -> None:
        try:
            while not self._stop.is_set():
                try:
                    conn, peer = self._sock.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                # one session at a time: the model is not concurrent-safe
                try:
                    self._serve_session(conn, peer)
                finally:
                    conn.close()
        finally:
            self._sock.close()

    def start(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _serve_session(self, conn: socket.socket, peer) -> None:
        conn.settimeout(60)
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        log.info("session from %s:%s", *peer[:2])
        handler = SessionHandler(self.model)
        framer = wire.Framer()
        while True:
            try:
                data = conn.recv(RECV_SIZE)
            except OSError:
                return
            if not data:
                return
            try:
                messages = framer.push(data)
            except wire.WireError as exc:
                self._reply(conn, wire.Error(code=wire.ERR_PROTOCOL_VIOLATION, msg=str(exc)))
                return
            for msg in messages:
                try:
                    replies = handler.on_message(msg)
                except _EndSession as end:
                    for reply in end.replies:
                        self._reply(conn, reply)
                    return
                for reply in replies:
                    self._reply(conn, reply)

    @staticmethod
    def _reply(conn: socket.socket, msg: wire.Message) -> None:
        try:
            conn.sendall(wire.encode(msg))
        except OSError:
            pass
