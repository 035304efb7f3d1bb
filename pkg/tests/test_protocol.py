import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hasr.errors import OversizeFrame, ProtocolError
from hasr import protocol as proto
from hasr.protocol import (
    AudioChunk,
    Error,
    Hello,
    HelloAck,
    Ping,
    Pong,
    StreamDecoder,
    Transcript,
    UttEnd,
    UttStart,
    decode,
    encode,
    golden_fixtures,
    golden_messages,
)

FIXTURE_PATH = os.path.join(os.path.dirname(__file__), "..", "fixtures", "protocol_golden.json")


class TestHandComputedVectors:
    def test_ping(self):
        assert encode(Ping()) == bytes.fromhex("0000000140")

    def test_utt_start(self):
        assert encode(UttStart(utt_id=7)) == bytes.fromhex("000000051000000007")

    def test_transcript(self):
        # length = 1 + 4 + 4 + 2 + 2 = 13 (0x0D); "go" = 67 6F; 9000 = 0x2328
        frame = encode(Transcript(utt_id=1, text="go", confidence_bp=9000))
        expected = "00 00 00 0D 20 00 00 00 01 00 00 00 02 67 6F 23 28"
        assert frame == bytes.fromhex(expected.replace(" ", ""))


class TestRoundTrip:
    @pytest.mark.parametrize("msg", golden_messages(), ids=lambda m: type(m).__name__)
    def test_golden_round_trip(self, msg):
        frame = encode(msg)
        decoded, consumed = decode(frame)
        assert decoded == msg
        assert consumed == len(frame)

    def test_concatenated_frames_in_order(self):
        msgs = golden_messages()
        blob = b"".join(encode(m) for m in msgs)
        out = []
        while blob:
            msg, consumed = decode(blob)
            out.append(msg)
            blob = blob[consumed:]
        assert out == msgs

    def test_trailing_bytes_not_consumed(self):
        frame = encode(Ping()) + b"\xff\xff"
        msg, consumed = decode(frame)
        assert msg == Ping()
        assert consumed == 5


class TestNeedMoreData:
    def test_partial_header(self):
        assert decode(encode(Ping())[:3]) is None

    def test_partial_payload(self):
        frame = encode(UttStart(utt_id=1))
        for cut in range(len(frame)):
            assert decode(frame[:cut]) is None

    def test_empty_buffer(self):
        assert decode(b"") is None


class TestMalformed:
    def test_unknown_type(self):
        with pytest.raises(ProtocolError) as err:
            decode(bytes.fromhex("0000000177"))
        assert err.value.kind == ProtocolError.UNKNOWN_TYPE

    def test_zero_length(self):
        with pytest.raises(ProtocolError) as err:
            decode(bytes.fromhex("00000000"))
        assert err.value.kind == ProtocolError.BAD_LENGTH

    def test_oversize_length(self):
        with pytest.raises(ProtocolError) as err:
            decode(b"\xff\xff\xff\xff")
        assert err.value.kind == ProtocolError.OVERSIZE

    def test_wrong_fixed_payload_size(self):
        with pytest.raises(ProtocolError) as err:
            decode(bytes.fromhex("000000021000"))
        assert err.value.kind == ProtocolError.BAD_LENGTH

    def test_odd_pcm_rejected_both_ways(self):
        with pytest.raises(ProtocolError):
            encode(AudioChunk(utt_id=1, seq=0, pcm=b"\x00"))
        frame = bytes.fromhex("0000000A 11 00000001 00000000 00".replace(" ", ""))
        with pytest.raises(ProtocolError):
            decode(frame)

    def test_invalid_utf8_text(self):
        # Transcript with text bytes FF FE (not UTF-8)
        frame = bytes.fromhex("0000000D 20 00000001 00000002 FFFE 2328".replace(" ", ""))
        with pytest.raises(ProtocolError) as err:
            decode(frame)
        assert err.value.kind == ProtocolError.INVALID_UTF8

    def test_inconsistent_text_len(self):
        frame = bytes.fromhex("0000000D 20 00000001 000000FF 676F 2328".replace(" ", ""))
        with pytest.raises(ProtocolError) as err:
            decode(frame)
        assert err.value.kind == ProtocolError.BAD_LENGTH

    def test_confidence_out_of_range(self):
        with pytest.raises(ProtocolError):
            encode(Transcript(utt_id=1, text="x", confidence_bp=10001))
        frame = bytes.fromhex("0000000C 20 00000001 00000001 78 2AF9".replace(" ", ""))
        with pytest.raises(ProtocolError):
            decode(frame)

    def test_oversize_encode(self):
        with pytest.raises(OversizeFrame):
            encode(AudioChunk(utt_id=1, seq=0, pcm=b"\x00" * (proto.MAX_PAYLOAD + 2)))


messages = st.one_of(
    st.builds(Ping),
    st.builds(Pong),
    st.builds(
        Hello,
        sample_rate=st.integers(0, 2**32 - 1),
        channels=st.integers(0, 255),
        bits=st.integers(0, 255),
        encoding=st.integers(0, 255),
        proto_version=st.integers(0, 255),
    ),
    st.builds(HelloAck, accepted=st.integers(0, 1), proto_version=st.integers(0, 255)),
    st.builds(UttStart, utt_id=st.integers(0, 2**32 - 1)),
    st.builds(UttEnd, utt_id=st.integers(0, 2**32 - 1)),
    st.builds(
        AudioChunk,
        utt_id=st.integers(0, 2**32 - 1),
        seq=st.integers(0, 2**32 - 1),
        pcm=st.binary(max_size=2048).map(lambda b: b if len(b) % 2 == 0 else b + b"\x00"),
    ),
    st.builds(
        Transcript,
        utt_id=st.integers(0, 2**32 - 1),
        text=st.text(max_size=200),
        confidence_bp=st.integers(0, 10000),
    ),
    st.builds(Error, code=st.integers(0, 2**16 - 1), msg=st.text(max_size=200)),
)


class TestProperties:
    @given(messages)
    @settings(max_examples=300, deadline=None)
    def test_round_trip_property(self, msg):
        decoded, consumed = decode(encode(msg))
        assert decoded == msg
        assert consumed == len(encode(msg))

    @given(st.binary(max_size=64))
    @settings(max_examples=500, deadline=None)
    def test_fuzz_never_crashes(self, blob):
        try:
            result = decode(blob)
        except ProtocolError:
            return
        if result is not None:
            msg, consumed = result
            assert 0 < consumed <= len(blob)

    @given(st.lists(messages, min_size=1, max_size=8), st.integers(1, 17))
    @settings(max_examples=50, deadline=None)
    def test_stream_decoder_chunked(self, msgs, chunk):
        blob = b"".join(encode(m) for m in msgs)
        decoder = StreamDecoder()
        out = []
        for i in range(0, len(blob), chunk):
            out.extend(decoder.feed(blob[i : i + chunk]))
        assert out == msgs
        assert decoder.pending_bytes() == 0


class TestGoldenFixtures:
    def test_shipped_file_matches_codec(self):
        with open(FIXTURE_PATH, encoding="utf-8") as f:
            shipped = json.load(f)
        assert shipped == golden_fixtures()

    def test_fixture_frames_decode_to_declared_kinds(self):
        for fix in golden_fixtures():
            msg, consumed = decode(bytes.fromhex(fix["frame_hex"]))
            assert type(msg).__name__ == fix["kind"]
            assert consumed == len(fix["frame_hex"]) // 2
