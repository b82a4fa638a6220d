import math
import struct
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otpb.transport import (TAG_SIZE, Blake2bTagger, ChecksumTagger, FrameError, FrameType, TransportError,
                            WireFrame, decode_frame, encode_frame, loopback_tcp_streams, make_inproc_pair,
                            make_stream_pair, pack_phases, read_capture, unpack_phases)

frames = st.builds(WireFrame, st.sampled_from(list(FrameType)), st.integers(0, 2 ** 32 - 1),
                   st.binary(max_size=256), st.binary(min_size=TAG_SIZE, max_size=TAG_SIZE))


def test_empty_run_announce_roundtrip():
    f = WireFrame(FrameType.RUN_ANNOUNCE, 7)
    data = encode_frame(f)
    assert data[:9] == struct.pack(">IBI", 0, 3, 7) and len(data) == 9 + TAG_SIZE
    assert decode_frame(data) == f


def test_phase_block_bytes():
    payload = pack_phases([0.0, math.pi])
    assert payload == struct.pack(">d", 0.0) + struct.pack(">d", math.pi)
    f = WireFrame(FrameType.PHASE_BLOCK, 1, payload)
    back = decode_frame(encode_frame(f))
    assert unpack_phases(back.payload).tolist() == [0.0, math.pi]


@settings(max_examples=300)
@given(frames)
def test_roundtrip_hypothesis(f):
    assert decode_frame(encode_frame(f)) == f


def test_roundtrip_many_random_frames():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        f = WireFrame(FrameType(int(rng.integers(1, 5))), int(rng.integers(0, 2 ** 32)),
                      rng.bytes(int(rng.integers(0, 64))), rng.bytes(TAG_SIZE))
        assert decode_frame(encode_frame(f)) == f


@pytest.mark.parametrize("mangle,field", [
    (lambda d: d[:-1], "tag length"),
    (lambda d: d[:5], "header length"),
    (lambda d: d[:4] + b"\x09" + d[5:], "frame type"),
    (lambda d: struct.pack(">I", 999) + d[4:], "payload length"),
    (lambda d: d + b"\0", "frame length"),
])
def test_decode_errors_name_field(mangle, field):
    data = encode_frame(WireFrame(FrameType.HASH_SEED, 2, b"abcdef"))
    with pytest.raises(FrameError) as info:
        decode_frame(mangle(data))
    assert info.value.field == field


def test_encode_validation():
    with pytest.raises(FrameError):
        encode_frame(WireFrame(FrameType.ABORT, 2 ** 32))
    with pytest.raises(FrameError):
        encode_frame(WireFrame(FrameType.ABORT, 0, b"", b"short"))
    with pytest.raises(FrameError):
        unpack_phases(b"\0" * 9)


def test_taggers():
    f = WireFrame(FrameType.HASH_SEED, 4, b"seed")
    for t in (ChecksumTagger(), ChecksumTagger(b"k"), Blake2bTagger(b"key")):
        sealed = t.seal(f)
        assert len(sealed.tag) == TAG_SIZE
        assert t.verify(sealed.header_and_payload(), sealed.tag)
        assert not t.verify(sealed.header_and_payload() + b"x", sealed.tag)
    assert Blake2bTagger(b"a").seal(f).tag != Blake2bTagger(b"b").seal(f).tag
    with pytest.raises(ValueError):
        Blake2bTagger(b"")


def test_inproc_send_receive():
    pair = make_inproc_pair()
    f = WireFrame(FrameType.HASH_SEED, 3, b"xyz", bytes(range(16)))
    pair.a.send(f)
    assert pair.b.recv(1.0) == f
    pair.b.send(f)
    assert pair.a.recv(1.0) == f
    with pytest.raises(TransportError, match="timed out"):
        pair.a.recv(0.01)
    pair.close()
    with pytest.raises(TransportError):
        pair.a.send(f)


def _ordering(pair):
    n = 10_000

    def sender():
        for i in range(n):
            pair.a.send(WireFrame(FrameType.RUN_ANNOUNCE, i))

    th = threading.Thread(target=sender)
    th.start()
    got = [pair.b.recv(10.0).run_index for _ in range(n)]
    th.join()
    assert got == list(range(n))


def test_ordering_inproc():
    _ordering(make_inproc_pair())


def test_ordering_stream():
    pair = make_stream_pair()
    try:
        _ordering(pair)
    finally:
        pair.close()


def test_stream_pair_validation_and_closed_peer():
    with pytest.raises(ValueError):
        make_stream_pair(stream_a=object())
    pair = make_stream_pair(*loopback_tcp_streams())
    pair.a.send(WireFrame(FrameType.ABORT, 1, b"bye"))
    assert pair.b.recv(5.0).payload == b"bye"
    pair.a.close()
    with pytest.raises(TransportError):
        pair.b.recv(5.0)
    pair.b.close()


def test_stream_over_file_objects(tmp_path):
    path = tmp_path / "wire.bin"
    frames = [WireFrame(FrameType.PHASE_BLOCK, i, pack_phases([i, i + 0.5])) for i in range(5)]
    with open(path, "wb") as out, open(path, "rb") as inp:
        pair = make_stream_pair(out, inp)
        for f in frames:
            pair.a.send(f)
        assert [pair.b.recv() for _ in frames] == frames


def test_tap_counts_and_copies(tmp_path):
    cap = tmp_path / "frames.cap"
    pair = make_inproc_pair(tap=True, capture_path=cap)
    sent = []
    for i in range(6):
        pair.a.send(WireFrame(FrameType.RUN_ANNOUNCE, i))
        f = WireFrame(FrameType.PHASE_BLOCK, i, pack_phases([0.1 * i]))
        pair.a.send(f)
        sent.append(f)
    pair.close()
    assert pair.tap.count == 6
    assert pair.tap.drain() == sent
    assert [decode_frame(encode_frame(f)) for f in read_capture(cap)][1::2] == sent


def test_tap_independent_frame():
    pair = make_inproc_pair(tap=True, independent_tap=True)
    real = WireFrame(FrameType.PHASE_BLOCK, 1, pack_phases([1.0]))
    eve = WireFrame(FrameType.PHASE_BLOCK, 1, pack_phases([1.1]))
    pair.a.send(real, tap_frame=eve)
    assert pair.b.recv(1.0) == real
    assert pair.tap.get(1.0) == eve


def test_capture_truncation(tmp_path):
    cap = tmp_path / "bad.cap"
    cap.write_bytes(struct.pack(">I", 50) + b"\0" * 10)
    with pytest.raises(FrameError):
        list(read_capture(cap))
