"""TCP transcription service: accepts framed-protocol sessions, reassembles
utterance audio, and dispatches it to a pluggable transcriber backend.

One handler thread per connection; sessions are fully isolated. Backends
declare whether they tolerate concurrent calls; the server serializes calls
to those that do not.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import socket
import threading
from dataclasses import dataclass, field

from . import protocol as proto
from .errors import BindFailed, UnknownAudio

MAX_UTT_SAMPLES = 960_000  # 30 s of 16 kHz audio
MAX_UTT_BYTES = 2 * MAX_UTT_SAMPLES
RECV_SIZE = 65536


def audio_digest(pcm: bytes) -> str:
    return hashlib.sha256(pcm).hexdigest()


class TranscriberBackend:
    """Backend contract: transcribe reassembled 16 kHz int16 PCM bytes."""

    concurrent_safe = True

    def transcribe(self, pcm: bytes) -> tuple[str, int]:
        """Return (text, confidence_bp in 0..10000); raise on failure."""
        raise NotImplementedError


class FixedTranscriber(TranscriberBackend):
    def __init__(self, text: str):
        self.text = text

    def transcribe(self, pcm: bytes) -> tuple[str, int]:
        return self.text, 10000


class TableTranscriber(TranscriberBackend):
    """Maps sha256 hex digests of the PCM bytes to canned transcripts."""

    def __init__(self, table: dict[str, str]):
        self.table = dict(table)

    def transcribe(self, pcm: bytes) -> tuple[str, int]:
        digest = audio_digest(pcm)
        if digest not in self.table:
            raise UnknownAudio(f"no transcript for audio {digest[:12]}...")
        return self.table[digest], 10000


class EchoHashTranscriber(TranscriberBackend):
    """Returns the hex digest of the PCM bytes; asserts byte-exact transport."""

    def transcribe(self, pcm: bytes) -> tuple[str, int]:
        return audio_digest(pcm), 10000


def mock_transcribe(backend: TranscriberBackend, pcm: bytes) -> tuple[str, int]:
    """Apply a mock backend to nonempty, even-length PCM."""
    if len(pcm) == 0 or len(pcm) % 2 != 0:
        raise ValueError(f"pcm must be nonempty with even length, got {len(pcm)}")
    return backend.transcribe(pcm)


@dataclass
class _OpenUtterance:
    next_seq: int = 0
    pcm: bytearray = field(default_factory=bytearray)


class _SessionViolation(Exception):
    """Session-ending condition; carries the wire error to send before close."""

    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


class Session:
    """Per-connection protocol state machine.

    handle() returns the replies for one client message; raises
    _SessionViolation when the session must end with a wire Error.
    """

    def __init__(self, backend: TranscriberBackend, backend_lock: threading.Lock | None):
        self.backend = backend
        self.backend_lock = backend_lock
        self.greeted = False
        self.open_utts: dict[int, _OpenUtterance] = {}
        self.used_utt_ids: set[int] = set()
        self.transcripts: list[dict] = []

    def handle(self, msg: proto.WireMessage) -> list[proto.WireMessage]:
        if not self.greeted:
            if not isinstance(msg, proto.Hello):
                raise _SessionViolation(
                    proto.ERR_PROTOCOL_VIOLATION, f"expected Hello, got {type(msg).__name__}"
                )
            return self._handle_hello(msg)

        if isinstance(msg, proto.Ping):
            return [proto.Pong()]
        if isinstance(msg, proto.UttStart):
            return self._handle_start(msg)
        if isinstance(msg, proto.AudioChunk):
            return self._handle_chunk(msg)
        if isinstance(msg, proto.UttEnd):
            return self._handle_end(msg)
        raise _SessionViolation(
            proto.ERR_PROTOCOL_VIOLATION, f"unexpected {type(msg).__name__} from client"
        )

    def _handle_hello(self, msg: proto.Hello) -> list[proto.WireMessage]:
        ok = (
            msg.proto_version == proto.PROTO_VERSION
            and msg.sample_rate == 16000
            and msg.channels == 1
            and msg.bits == 16
            and msg.encoding == 0
        )
        if not ok:
            raise _SessionViolation(
                proto.ERR_UNSUPPORTED_PARAMS,
                f"unsupported audio params: rate={msg.sample_rate} channels={msg.channels} "
                f"bits={msg.bits} encoding={msg.encoding} version={msg.proto_version}",
            )
        self.greeted = True
        return [proto.HelloAck(accepted=1)]

    def _handle_start(self, msg: proto.UttStart) -> list[proto.WireMessage]:
        if msg.utt_id in self.used_utt_ids:
            raise _SessionViolation(
                proto.ERR_PROTOCOL_VIOLATION, f"utt_id {msg.utt_id} reused within session"
            )
        self.used_utt_ids.add(msg.utt_id)
        self.open_utts[msg.utt_id] = _OpenUtterance()
        return []

    def _require_open(self, utt_id: int) -> _OpenUtterance:
        if utt_id not in self.open_utts:
            raise _SessionViolation(
                proto.ERR_PROTOCOL_VIOLATION, f"utt_id {utt_id} is not open"
            )
        return self.open_utts[utt_id]

    def _handle_chunk(self, msg: proto.AudioChunk) -> list[proto.WireMessage]:
        utt = self._require_open(msg.utt_id)
        if msg.seq != utt.next_seq:
            raise _SessionViolation(
                proto.ERR_PROTOCOL_VIOLATION,
                f"utt {msg.utt_id}: chunk seq {msg.seq}, expected {utt.next_seq}",
            )
        utt.next_seq += 1
        utt.pcm.extend(msg.pcm)
        if len(utt.pcm) > MAX_UTT_BYTES:
            raise _SessionViolation(
                proto.ERR_UNSUPPORTED_PARAMS,
                f"utt {msg.utt_id} exceeds {MAX_UTT_SAMPLES} samples",
            )
        return []

    def _handle_end(self, msg: proto.UttEnd) -> list[proto.WireMessage]:
        utt = self._require_open(msg.utt_id)
        del self.open_utts[msg.utt_id]
        pcm = bytes(utt.pcm)
        try:
            if self.backend_lock is not None:
                with self.backend_lock:
                    text, confidence = self.backend.transcribe(pcm)
            else:
                text, confidence = self.backend.transcribe(pcm)
        except UnknownAudio as exc:
            return [proto.Error(code=proto.ERR_UNKNOWN_UTTERANCE, msg=str(exc))]
        except Exception as exc:
            return [proto.Error(code=proto.ERR_BACKEND_FAILURE, msg=f"backend failure: {exc}")]
        self.transcripts.append({"utt_id": msg.utt_id, "text": text, "confidence": confidence})
        return [proto.Transcript(utt_id=msg.utt_id, text=text, confidence_bp=confidence)]


class TranscriptionServer:
    """Threaded TCP server speaking the framed wire protocol."""

    def __init__(
        self,
        listen: tuple[str, int],
        backend: TranscriberBackend,
        log_path: str | None = None,
    ):
        self.backend = backend
        self.log_path = log_path
        self._log_lock = threading.Lock()
        self._backend_lock = None if backend.concurrent_safe else threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        try:
            self._sock = socket.create_server(listen)
        except OSError as exc:
            raise BindFailed(f"cannot bind {listen[0]}:{listen[1]}: {exc}") from exc
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
                handler = threading.Thread(
                    target=self._handle_connection, args=(conn, peer), daemon=True
                )
                handler.start()
        finally:
            self._sock.close()

    def start(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _handle_connection(self, conn: socket.socket, peer) -> None:
        conn.settimeout(30)
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        session = Session(self.backend, self._backend_lock)
        decoder = proto.StreamDecoder()
        try:
            while True:
                try:
                    data = conn.recv(RECV_SIZE)
                except socket.timeout:
                    return
                if not data:
                    return
                try:
                    messages = decoder.feed(data)
                except proto.ProtocolError as exc:
                    self._send(conn, proto.Error(code=proto.ERR_PROTOCOL_VIOLATION, msg=str(exc)))
                    return
                for msg in messages:
                    try:
                        replies = session.handle(msg)
                    except _SessionViolation as exc:
                        if isinstance(msg, proto.Hello) and not session.greeted:
                            self._send(conn, proto.HelloAck(accepted=0))
                        self._send(conn, proto.Error(code=exc.code, msg=str(exc)))
                        return
                    for reply in replies:
                        if isinstance(reply, proto.Transcript):
                            self._log_transcript(peer, reply)
                        self._send(conn, reply)
        except OSError:
            return
        finally:
            conn.close()

    def _send(self, conn: socket.socket, msg: proto.WireMessage) -> None:
        try:
            conn.sendall(proto.encode(msg))
        except OSError:
            pass

    def _log_transcript(self, peer, msg: proto.Transcript) -> None:
        if self.log_path is None:
            return
        line = json.dumps(
            {
                "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "peer": f"{peer[0]}:{peer[1]}",
                "utt_id": msg.utt_id,
                "text": msg.text,
                "confidence": msg.confidence_bp,
            }
        )
        with self._log_lock:
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(line + "\n")


def parse_backend_spec(spec: str) -> TranscriberBackend:
    """Parse CLI backend strings: mock:fixed:TEXT, mock:table:FILE, mock:echohash."""
    parts = spec.split(":", 2)
    if parts[0] != "mock":
        raise ValueError(f"unknown backend family {parts[0]!r}")
    if len(parts) < 2:
        raise ValueError("backend spec needs a mode, e.g. mock:echohash")
    mode = parts[1]
    if mode == "fixed":
        if len(parts) != 3:
            raise ValueError("mock:fixed needs a text argument, e.g. mock:fixed:hello")
        return FixedTranscriber(parts[2])
    if mode == "table":
        if len(parts) != 3:
            raise ValueError("mock:table needs a JSON file of digest->text")
        with open(parts[2], encoding="utf-8") as f:
            return TableTranscriber(json.load(f))
    if mode == "echohash":
        if len(parts) != 2:
            raise ValueError("mock:echohash takes no argument")
        return EchoHashTranscriber()
    raise ValueError(f"unknown mock mode {mode!r}")
