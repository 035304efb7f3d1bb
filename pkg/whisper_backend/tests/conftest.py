import socket

import pytest

from whisper_backend import wire
from whisper_backend.model import SpeechModel, TranscriptionFailed
from whisper_backend.service import BackendServer


class StubModel(SpeechModel):
    """Offline stand-in: deterministic text derived from the audio length."""

    def __init__(self, fail=False):
        self.fail = fail
        self.calls = []

    def transcribe_pcm(self, pcm: bytes) -> tuple[str, int]:
        self.calls.append(pcm)
        if self.fail:
            raise TranscriptionFailed("stub failure")
        return f"heard {len(pcm) // 2} samples", 0


class WireClient:
    def __init__(self, address):
        self.sock = socket.create_connection(address, timeout=10)
        self.framer = wire.Framer()
        self.queue = []

    def send(self, *msgs):
        for msg in msgs:
            self.sock.sendall(wire.encode(msg))

    def recv(self):
        while not self.queue:
            data = self.sock.recv(65536)
            if not data:
                return None
            self.queue.extend(self.framer.push(data))
        return self.queue.pop(0)

    def handshake(self):
        self.send(wire.Hello())
        reply = self.recv()
        assert reply == wire.HelloAck(accepted=1)

    def utterance(self, utt_id, pcm, chunk=3200):
        self.send(wire.UttStart(utt_id=utt_id))
        for seq, lo in enumerate(range(0, len(pcm), chunk)):
            self.send(wire.AudioChunk(utt_id=utt_id, seq=seq, pcm=pcm[lo : lo + chunk]))
        self.send(wire.UttEnd(utt_id=utt_id))
        return self.recv()

    def close(self):
        self.sock.close()


@pytest.fixture()
def stub_model():
    return StubModel()


@pytest.fixture()
def backend(stub_model):
    server = BackendServer(("127.0.0.1", 0), stub_model)
    server.start()
    yield server
    server.stop()
