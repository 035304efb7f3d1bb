"""Framed binary codec for the edge-to-server audio/transcript channel.

Frame layout: [length: u32 BE][type: u8][payload], where length counts the
type byte plus the payload. All multi-byte integers are big-endian. This
byte layout is the wire contract shared with any protocol-compatible
transcription backend.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import OversizeFrame, ProtocolError

MAX_PAYLOAD = 1 << 20  # 1 MiB
PROTO_VERSION = 1

TYPE_HELLO = 0x01
TYPE_HELLO_ACK = 0x02
TYPE_UTT_START = 0x10
TYPE_AUDIO_CHUNK = 0x11
TYPE_UTT_END = 0x12
TYPE_TRANSCRIPT = 0x20
TYPE_ERROR = 0x30
TYPE_PING = 0x40
TYPE_PONG = 0x41

# wire error codes
ERR_PROTOCOL_VIOLATION = 1001
ERR_UNSUPPORTED_PARAMS = 1002
ERR_BACKEND_FAILURE = 1003
ERR_UNKNOWN_UTTERANCE = 1004

# sender SHOULD chunk at 100 ms of 16 kHz int16; receivers accept any even size
CHUNK_BYTES = 3200


@dataclass(frozen=True)
class Hello:
    sample_rate: int = 16000
    channels: int = 1
    bits: int = 16
    encoding: int = 0  # 0 = PCM signed little-endian
    proto_version: int = PROTO_VERSION


@dataclass(frozen=True)
class HelloAck:
    accepted: int
    proto_version: int = PROTO_VERSION


@dataclass(frozen=True)
class UttStart:
    utt_id: int


@dataclass(frozen=True)
class AudioChunk:
    utt_id: int
    seq: int
    pcm: bytes


@dataclass(frozen=True)
class UttEnd:
    utt_id: int


@dataclass(frozen=True)
class Transcript:
    utt_id: int
    text: str
    confidence_bp: int


@dataclass(frozen=True)
class Error:
    code: int
    msg: str


@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class Pong:
    pass


WireMessage = Hello | HelloAck | UttStart | AudioChunk | UttEnd | Transcript | Error | Ping | Pong


def _encode_text(text: str) -> bytes:
    try:
        return text.encode("utf-8")
    except UnicodeEncodeError as exc:
        raise ProtocolError(ProtocolError.INVALID_UTF8, str(exc)) from exc


def _payload(msg: WireMessage) -> tuple[int, bytes]:
    if isinstance(msg, Hello):
        return TYPE_HELLO, struct.pack(
            ">BIBBB", msg.proto_version, msg.sample_rate, msg.channels, msg.bits, msg.encoding
        )
    if isinstance(msg, HelloAck):
        return TYPE_HELLO_ACK, struct.pack(">BB", msg.accepted, msg.proto_version)
    if isinstance(msg, UttStart):
        return TYPE_UTT_START, struct.pack(">I", msg.utt_id)
    if isinstance(msg, AudioChunk):
        if len(msg.pcm) % 2 != 0:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"chunk pcm length {len(msg.pcm)} is odd"
            )
        return TYPE_AUDIO_CHUNK, struct.pack(">II", msg.utt_id, msg.seq) + msg.pcm
    if isinstance(msg, UttEnd):
        return TYPE_UTT_END, struct.pack(">I", msg.utt_id)
    if isinstance(msg, Transcript):
        if not (0 <= msg.confidence_bp <= 10000):
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"confidence_bp {msg.confidence_bp} outside 0..10000"
            )
        text = _encode_text(msg.text)
        return TYPE_TRANSCRIPT, (
            struct.pack(">II", msg.utt_id, len(text)) + text + struct.pack(">H", msg.confidence_bp)
        )
    if isinstance(msg, Error):
        text = _encode_text(msg.msg)
        return TYPE_ERROR, struct.pack(">HI", msg.code, len(text)) + text
    if isinstance(msg, Ping):
        return TYPE_PING, b""
    if isinstance(msg, Pong):
        return TYPE_PONG, b""
    raise TypeError(f"not a wire message: {msg!r}")


def encode(msg: WireMessage) -> bytes:
    """Serialize one message into a complete frame."""
    msg_type, payload = _payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise OversizeFrame(f"payload {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return struct.pack(">IB", 1 + len(payload), msg_type) + payload


def _decode_payload(msg_type: int, payload: bytes) -> WireMessage:
    def need(n: int, what: str):
        if len(payload) != n:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"{what} payload is {len(payload)} bytes, expected {n}"
            )

    def text_of(raw: bytes, what: str) -> str:
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(ProtocolError.INVALID_UTF8, f"{what}: {exc}") from exc

    if msg_type == TYPE_HELLO:
        need(8, "Hello")
        version, rate, channels, bits, encoding = struct.unpack(">BIBBB", payload)
        return Hello(sample_rate=rate, channels=channels, bits=bits,
                     encoding=encoding, proto_version=version)
    if msg_type == TYPE_HELLO_ACK:
        need(2, "HelloAck")
        accepted, version = struct.unpack(">BB", payload)
        return HelloAck(accepted=accepted, proto_version=version)
    if msg_type == TYPE_UTT_START:
        need(4, "UttStart")
        return UttStart(utt_id=struct.unpack(">I", payload)[0])
    if msg_type == TYPE_AUDIO_CHUNK:
        if len(payload) < 8:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"AudioChunk payload is {len(payload)} bytes, need >= 8"
            )
        utt_id, seq = struct.unpack(">II", payload[:8])
        pcm = payload[8:]
        if len(pcm) % 2 != 0:
            raise ProtocolError(ProtocolError.BAD_LENGTH, f"chunk pcm length {len(pcm)} is odd")
        return AudioChunk(utt_id=utt_id, seq=seq, pcm=pcm)
    if msg_type == TYPE_UTT_END:
        need(4, "UttEnd")
        return UttEnd(utt_id=struct.unpack(">I", payload)[0])
    if msg_type == TYPE_TRANSCRIPT:
        if len(payload) < 10:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"Transcript payload is {len(payload)} bytes, need >= 10"
            )
        utt_id, text_len = struct.unpack(">II", payload[:8])
        if len(payload) != 8 + text_len + 2:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH,
                f"Transcript text_len {text_len} inconsistent with payload {len(payload)}",
            )
        text = text_of(payload[8 : 8 + text_len], "Transcript text")
        confidence = struct.unpack(">H", payload[8 + text_len :])[0]
        if confidence > 10000:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"confidence_bp {confidence} outside 0..10000"
            )
        return Transcript(utt_id=utt_id, text=text, confidence_bp=confidence)
    if msg_type == TYPE_ERROR:
        if len(payload) < 6:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH, f"Error payload is {len(payload)} bytes, need >= 6"
            )
        code, msg_len = struct.unpack(">HI", payload[:6])
        if len(payload) != 6 + msg_len:
            raise ProtocolError(
                ProtocolError.BAD_LENGTH,
                f"Error msg_len {msg_len} inconsistent with payload {len(payload)}",
            )
        return Error(code=code, msg=text_of(payload[6:], "Error msg"))
    if msg_type == TYPE_PING:
        need(0, "Ping")
        return Ping()
    if msg_type == TYPE_PONG:
        need(0, "Pong")
        return Pong()
    raise ProtocolError(ProtocolError.UNKNOWN_TYPE, f"type 0x{msg_type:02X}")


def decode(buffer: bytes) -> tuple[WireMessage, int] | None:
    """Decode one frame from the head of `buffer`.

    Returns (message, bytes consumed), or None if the buffer does not yet
    hold a complete frame. Raises ProtocolError for malformed frames.
    """
    if len(buffer) < 4:
        return None
    length = struct.unpack(">I", buffer[:4])[0]
    if length < 1:
        raise ProtocolError(ProtocolError.BAD_LENGTH, f"frame length {length} < 1")
    if length > 1 + MAX_PAYLOAD:
        raise ProtocolError(ProtocolError.OVERSIZE, f"frame length {length} exceeds limit")
    if len(buffer) < 4 + length:
        return None
    msg_type = buffer[4]
    payload = bytes(buffer[5 : 4 + length])
    return _decode_payload(msg_type, payload), 4 + length


class StreamDecoder:
    """Incremental decoder over a byte stream; feed() yields complete messages."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[WireMessage]:
        self._buf.extend(data)
        messages = []
        while True:
            result = decode(bytes(self._buf))
            if result is None:
                return messages
            msg, consumed = result
            del self._buf[:consumed]
            messages.append(msg)

    def pending_bytes(self) -> int:
        return len(self._buf)


def golden_messages() -> list[WireMessage]:
    """Canonical message set frozen into the cross-implementation fixtures."""
    return [
        Ping(),
        Pong(),
        Hello(),
        Hello(sample_rate=8000, channels=2, bits=8, encoding=3),
        HelloAck(accepted=1),
        HelloAck(accepted=0),
        UttStart(utt_id=7),
        UttStart(utt_id=0xFFFFFFFF),
        AudioChunk(utt_id=1, seq=0, pcm=b""),
        AudioChunk(utt_id=2, seq=3, pcm=bytes(range(16))),
        AudioChunk(utt_id=9, seq=41, pcm=b"\x00\x80\xff\x7f"),
        UttEnd(utt_id=7),
        Transcript(utt_id=1, text="go", confidence_bp=9000),
        Transcript(utt_id=12, text="", confidence_bp=0),
        Transcript(utt_id=3, text="héllo wörld ✓", confidence_bp=10000),
        Error(code=ERR_PROTOCOL_VIOLATION, msg="protocol violation"),
        Error(code=ERR_UNSUPPORTED_PARAMS, msg="unsupported audio params"),
        Error(code=ERR_BACKEND_FAILURE, msg="backend failure"),
        Error(code=ERR_UNKNOWN_UTTERANCE, msg="unknown utterance"),
    ]


def golden_fixtures() -> list[dict]:
    """Hex-encoded frames plus decoded field views, for conformance testing."""
    fixtures = []
    for msg in golden_messages():
        fields = {}
        for key, value in msg.__dict__.items():
            fields[key] = value.hex() if isinstance(value, bytes) else value
        fixtures.append(
            {"kind": type(msg).__name__, "fields": fields, "frame_hex": encode(msg).hex()}
        )
    return fixtures
