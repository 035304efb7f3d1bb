"""Independent implementation of the edge-to-server wire contract.

Frames are [u32 length (big-endian)][u8 type][payload]; the length counts
the type byte plus the payload. Conformance against the reference codec is
pinned by the shared golden fixture file.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields

MAX_PAYLOAD = 1 << 20
PROTO_VERSION = 1

ERR_PROTOCOL_VIOLATION = 1001
ERR_UNSUPPORTED_PARAMS = 1002
ERR_BACKEND_FAILURE = 1003
ERR_UNKNOWN_UTTERANCE = 1004

_U8 = struct.Struct(">B")
_U16 = struct.Struct(">H")
_U32 = struct.Struct(">I")
_HEADER = struct.Struct(">IB")


class WireError(Exception):
    """Raised for malformed frames; `offense` is a short machine tag."""

    def __init__(self, offense: str, detail: str):
        super().__init__(f"{offense}: {detail}")
        self.offense = offense


@dataclass(frozen=True)
class Hello:
    sample_rate: int = 16000
    channels: int = 1
    bits: int = 16
    encoding: int = 0
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


Message = Hello | HelloAck | UttStart | AudioChunk | UttEnd | Transcript | Error | Ping | Pong

_TYPE_CODES: dict[type, int] = {
    Hello: 0x01,
    HelloAck: 0x02,
    UttStart: 0x10,
    AudioChunk: 0x11,
    UttEnd: 0x12,
    Transcript: 0x20,
    Error: 0x30,
    Ping: 0x40,
    Pong: 0x41,
}
_BY_CODE = {code: cls for cls, code in _TYPE_CODES.items()}


def _pack_payload(msg: Message) -> bytes:
    if isinstance(msg, Hello):
        return (_U8.pack(msg.proto_version) + _U32.pack(msg.sample_rate)
                + _U8.pack(msg.channels) + _U8.pack(msg.bits) + _U8.pack(msg.encoding))
    if isinstance(msg, HelloAck):
        return _U8.pack(msg.accepted) + _U8.pack(msg.proto_version)
    if isinstance(msg, (UttStart, UttEnd)):
        return _U32.pack(msg.utt_id)
    if isinstance(msg, AudioChunk):
        if len(msg.pcm) % 2:
            raise WireError("bad_length", "pcm must hold whole int16 samples")
        return _U32.pack(msg.utt_id) + _U32.pack(msg.seq) + msg.pcm
    if isinstance(msg, Transcript):
        if not 0 <= msg.confidence_bp <= 10000:
            raise WireError("bad_length", f"confidence {msg.confidence_bp} out of range")
        text = msg.text.encode("utf-8")
        return (_U32.pack(msg.utt_id) + _U32.pack(len(text)) + text
                + _U16.pack(msg.confidence_bp))
    if isinstance(msg, Error):
        text = msg.msg.encode("utf-8")
        return _U16.pack(msg.code) + _U32.pack(len(text)) + text
    if isinstance(msg, (Ping, Pong)):
        return b""
    raise TypeError(f"unencodable message {msg!r}")


def encode(msg: Message) -> bytes:
    payload = _pack_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise WireError("oversize", f"payload of {len(payload)} bytes")
    return _HEADER.pack(1 + len(payload), _TYPE_CODES[type(msg)]) + payload


def _take_u32(buf: bytes, at: int, what: str) -> tuple[int, int]:
    if at + 4 > len(buf):
        raise WireError("bad_length", f"{what} truncated")
    return _U32.unpack_from(buf, at)[0], at + 4


def _unpack_payload(code: int, payload: bytes) -> Message:
    cls = _BY_CODE.get(code)
    if cls is None:
        raise WireError("unknown_type", f"type 0x{code:02X}")

    if cls is Hello:
        if len(payload) != 8:
            raise WireError("bad_length", f"Hello payload {len(payload)} != 8")
        return Hello(
            proto_version=payload[0],
            sample_rate=_U32.unpack_from(payload, 1)[0],
            channels=payload[5],
            bits=payload[6],
            encoding=payload[7],
        )
    if cls is HelloAck:
        if len(payload) != 2:
            raise WireError("bad_length", f"HelloAck payload {len(payload)} != 2")
        return HelloAck(accepted=payload[0], proto_version=payload[1])
    if cls in (UttStart, UttEnd):
        if len(payload) != 4:
            raise WireError("bad_length", f"{cls.__name__} payload {len(payload)} != 4")
        return cls(utt_id=_U32.unpack(payload)[0])
    if cls is AudioChunk:
        utt_id, at = _take_u32(payload, 0, "utt_id")
        seq, at = _take_u32(payload, at, "seq")
        pcm = payload[at:]
        if len(pcm) % 2:
            raise WireError("bad_length", "odd pcm byte count")
        return AudioChunk(utt_id=utt_id, seq=seq, pcm=pcm)
    if cls is Transcript:
        utt_id, at = _take_u32(payload, 0, "utt_id")
        text_len, at = _take_u32(payload, at, "text_len")
        if len(payload) != at + text_len + 2:
            raise WireError("bad_length", f"text_len {text_len} vs payload {len(payload)}")
        try:
            text = payload[at : at + text_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireError("invalid_utf8", str(exc)) from exc
        confidence = _U16.unpack_from(payload, at + text_len)[0]
        if confidence > 10000:
            raise WireError("bad_length", f"confidence {confidence} out of range")
        return Transcript(utt_id=utt_id, text=text, confidence_bp=confidence)
    if cls is Error:
        if len(payload) < 6:
            raise WireError("bad_length", f"Error payload {len(payload)} < 6")
        code_val = _U16.unpack_from(payload, 0)[0]
        msg_len = _U32.unpack_from(payload, 2)[0]
        if len(payload) != 6 + msg_len:
            raise WireError("bad_length", f"msg_len {msg_len} vs payload {len(payload)}")
        try:
            text = payload[6:].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireError("invalid_utf8", str(exc)) from exc
        return Error(code=code_val, msg=text)
    # Ping / Pong
    if payload:
        raise WireError("bad_length", f"{cls.__name__} carries no payload")
    return cls()


def decode(buffer: bytes) -> tuple[Message, int] | None:
    """One frame from the buffer head, or None while incomplete."""
    if len(buffer) < 4:
        return None
    length = _U32.unpack_from(buffer, 0)[0]
    if length < 1:
        raise WireError("bad_length", f"frame length {length}")
    if length > 1 + MAX_PAYLOAD:
        raise WireError("oversize", f"frame length {length}")
    end = 4 + length
    if len(buffer) < end:
        return None
    return _unpack_payload(buffer[4], bytes(buffer[5:end])), end


class Framer:
    """Accumulates socket reads and yields whole messages."""

    def __init__(self):
        self._buf = bytearray()

    def push(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out = []
        while True:
            item = decode(bytes(self._buf))
            if item is None:
                return out
            msg, end = item
            out.append(msg)
            del self._buf[:end]


def as_fixture_fields(msg: Message) -> dict:
    """Field view matching the golden fixture file's encoding of values."""
    view = {}
    for f in fields(msg):
        value = getattr(msg, f.name)
        view[f.name] = value.hex() if isinstance(value, bytes) else value
    return view


def from_fixture(kind: str, field_view: dict) -> Message:
    cls = {c.__name__: c for c in _TYPE_CODES}[kind]
    kwargs = {}
    for f in fields(cls):
        value = field_view[f.name]
        if f.type == "bytes":
            value = bytes.fromhex(value)
        kwargs[f.name] = value
    return cls(**kwargs)
