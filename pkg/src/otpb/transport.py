"""Framed duplex channel carrying both the noisy and the classical channel.

Wire format of one frame, all integers big-endian::

    uint32 payload_length | uint8 frame_type | uint32 run_index | payload | tag[16]

``PHASE_BLOCK`` payloads are IEEE-754 float64 phases (big-endian), one per
transmitted bit.  The 16-byte tag covers header and payload and is produced
by a pluggable :class:`Tagger`.
"""

from __future__ import annotations

import enum
import hashlib
import queue
import socket
import struct
import threading
import zlib
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

HEADER = struct.Struct(">IBI")
TAG_SIZE = 16


class FrameType(enum.IntEnum):
    PHASE_BLOCK = 1
    HASH_SEED = 2
    RUN_ANNOUNCE = 3
    ABORT = 4


class TransportError(IOError):
    """The underlying channel failed (closed, timed out, I/O error)."""


class FrameError(ValueError):
    """Malformed bytes on the wire; ``field`` names the offending part."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class WireFrame:
    frame_type: FrameType
    run_index: int
    payload: bytes = b""
    tag: bytes = bytes(TAG_SIZE)

    def header_and_payload(self) -> bytes:
        return HEADER.pack(len(self.payload), int(self.frame_type), self.run_index) + self.payload


def encode_frame(f: WireFrame) -> bytes:
    if len(f.payload) >= 1 << 32:
        raise FrameError("payload length", "payload must be shorter than 2**32 bytes")
    if not 0 <= f.run_index < 1 << 32:
        raise FrameError("run index", f"{f.run_index} does not fit in 32 bits")
    if len(f.tag) != TAG_SIZE:
        raise FrameError("tag length", f"tag must be {TAG_SIZE} bytes, got {len(f.tag)}")
    return f.header_and_payload() + bytes(f.tag)


def _parse_header(header: bytes) -> tuple[int, FrameType, int]:
    if len(header) < HEADER.size:
        raise FrameError("header length", f"need {HEADER.size} header bytes, got {len(header)}")
    length, ftype, run = HEADER.unpack(header[:HEADER.size])
    try:
        ftype = FrameType(ftype)
    except ValueError:
        raise FrameError("frame type", f"unknown type byte {ftype}") from None
    return length, ftype, run


def decode_frame(data: bytes) -> WireFrame:
    length, ftype, run = _parse_header(data)
    body = data[HEADER.size:]
    if len(body) < length:
        raise FrameError("payload length", f"header declares {length} bytes, only {len(body)} present")
    tag = body[length:]
    if len(tag) < TAG_SIZE:
        raise FrameError("tag length", f"expected {TAG_SIZE} tag bytes, got {len(tag)}")
    if len(tag) > TAG_SIZE:
        raise FrameError("frame length", f"{len(tag) - TAG_SIZE} trailing bytes after tag")
    return WireFrame(ftype, run, bytes(body[:length]), bytes(tag))


def pack_phases(phases) -> bytes:
    return np.asarray(phases, dtype=">f8").tobytes()


def unpack_phases(payload: bytes) -> np.ndarray:
    if len(payload) % 8:
        raise FrameError("payload length", "phase block is not a whole number of float64 values")
    return np.frombuffer(payload, dtype=">f8").astype(float)


# --- authentication tags ---------------------------------------------------

class Tagger:
    """Keyed 16-byte tag over a frame's header and payload."""

    def tag(self, data: bytes) -> bytes:
        raise NotImplementedError

    def verify(self, data: bytes, tag: bytes) -> bool:
        return self.tag(data) == tag

    def seal(self, frame: WireFrame) -> WireFrame:
        return WireFrame(frame.frame_type, frame.run_index, frame.payload,
                         self.tag(frame.header_and_payload()))


class ChecksumTagger(Tagger):
    """Placeholder tag: four salted CRC-32s.  Catches corruption, NOT forgery.

    Stands in for a real MAC such as OMAC; swap in :class:`Blake2bTagger` or
    another keyed implementation for anything beyond simulation.
    """

    def __init__(self, key: bytes = b""):
        self.key = key

    def tag(self, data: bytes) -> bytes:
        return b"".join(struct.pack(">I", zlib.crc32(self.key + bytes([i]) + data))
                        for i in range(4))


class Blake2bTagger(Tagger):
    """Keyed BLAKE2b with a 16-byte digest."""

    def __init__(self, key: bytes):
        if not key:
            raise ValueError("Blake2bTagger needs a non-empty key")
        self.key = key

    def tag(self, data: bytes) -> bytes:
        return hashlib.blake2b(data, key=self.key, digest_size=TAG_SIZE).digest()


# --- endpoints ---------------------------------------------------------------

class Tap:
    """Read-only copy of the Alice-to-Bob PHASE_BLOCK frames."""

    def __init__(self):
        self._frames: queue.Queue[WireFrame] = queue.Queue()
        self.count = 0

    def observe(self, frame: WireFrame):
        self.count += 1
        self._frames.put(frame)

    def get(self, timeout: float | None = None) -> WireFrame:
        return self._frames.get(timeout=timeout)

    def drain(self) -> list[WireFrame]:
        out = []
        while True:
            try:
                out.append(self._frames.get_nowait())
            except queue.Empty:
                return out


class CaptureWriter:
    """Append frames to a capture file as ``uint32 length | encoded frame`` records."""

    def __init__(self, path):
        self._fh = open(path, "wb")
        self._lock = threading.Lock()

    def write(self, frame: WireFrame):
        data = encode_frame(frame)
        with self._lock:
            self._fh.write(struct.pack(">I", len(data)) + data)

    def close(self):
        with self._lock:
            self._fh.close()


def read_capture(path) -> Iterator[WireFrame]:
    with open(path, "rb") as fh:
        while True:
            head = fh.read(4)
            if not head:
                return
            if len(head) < 4:
                raise FrameError("capture record", "truncated length prefix")
            (n,) = struct.unpack(">I", head)
            data = fh.read(n)
            if len(data) < n:
                raise FrameError("capture record", "truncated frame")
            yield decode_frame(data)


class Endpoint:
    """One side of a duplex frame channel.

    Subclasses implement ``_send_bytes``-level transport; this base adds the
    tap and capture hooks so that every implementation behaves alike.
    """

    def __init__(self, name: str):
        self.name = name
        self.tap: Tap | None = None
        self.capture: CaptureWriter | None = None
        self.sent = 0
        self.received = 0

    def send(self, frame: WireFrame, tap_frame: WireFrame | None = None):
        """Deliver ``frame`` to the peer.

        ``tap_frame`` replaces what the tap observes for PHASE_BLOCK frames
        (independent-noise tap mode); delivery is unaffected.
        """
        self._deliver(frame)
        self.sent += 1
        if self.capture is not None:
            self.capture.write(frame)
        if self.tap is not None and frame.frame_type == FrameType.PHASE_BLOCK:
            self.tap.observe(tap_frame if tap_frame is not None else frame)

    def recv(self, timeout: float | None = None) -> WireFrame:
        frame = self._receive(timeout)
        self.received += 1
        return frame

    def _deliver(self, frame: WireFrame):
        raise NotImplementedError

    def _receive(self, timeout: float | None) -> WireFrame:
        raise NotImplementedError

    def close(self):
        pass


class InProcEndpoint(Endpoint):
    def __init__(self, name, inbox: queue.Queue, outbox: queue.Queue):
        super().__init__(name)
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False

    def _deliver(self, frame):
        if self._closed:
            raise TransportError(f"{self.name}: endpoint closed")
        self._outbox.put(frame)

    def _receive(self, timeout):
        if self._closed:
            raise TransportError(f"{self.name}: endpoint closed")
        try:
            frame = self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise TransportError(f"{self.name}: receive timed out") from None
        if frame is None:
            raise TransportError(f"{self.name}: peer closed")
        return frame

    def close(self):
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


class StreamEndpoint(Endpoint):
    """Frames over a connected, reliable, ordered byte stream (e.g. a socket)."""

    def __init__(self, name, stream: socket.socket | BinaryIO):
        super().__init__(name)
        self._stream = stream
        self._is_socket = isinstance(stream, socket.socket)

    def _deliver(self, frame):
        data = encode_frame(frame)
        try:
            if self._is_socket:
                self._stream.sendall(data)
            else:
                self._stream.write(data)
                self._stream.flush()
        except (OSError, ValueError) as exc:
            raise TransportError(f"{self.name}: send failed: {exc}") from exc

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self._stream.recv(n - len(buf)) if self._is_socket else self._stream.read(n - len(buf))
            except socket.timeout:
                raise TransportError(f"{self.name}: receive timed out") from None
            except (OSError, ValueError) as exc:
                raise TransportError(f"{self.name}: receive failed: {exc}") from exc
            if not chunk:
                raise TransportError(f"{self.name}: stream closed after {len(buf)} of {n} bytes")
            buf.extend(chunk)
        return bytes(buf)

    def _receive(self, timeout):
        if self._is_socket:
            self._stream.settimeout(timeout)
        header = self._read_exact(HEADER.size)
        length, _, _ = _parse_header(header)
        rest = self._read_exact(length + TAG_SIZE)
        return decode_frame(header + rest)

    def close(self):
        try:
            if self._is_socket:
                self._stream.shutdown(socket.SHUT_RDWR)
            self._stream.close()
        except OSError:
            pass


@dataclass
class ChannelPair:
    """Two connected endpoints plus an optional eavesdropper tap on ``a -> b``.

    ``independent_tap`` asks the sender to give the tap its own noise draw
    instead of a copy of the delivered samples.
    """

    a: Endpoint
    b: Endpoint
    tap: Tap | None = None
    independent_tap: bool = False

    def close(self):
        self.a.close()
        self.b.close()
        if self.a.capture is not None:
            self.a.capture.close()


def _attach(pair: ChannelPair, tap: bool, capture_path) -> ChannelPair:
    if tap:
        pair.tap = Tap()
        pair.a.tap = pair.tap
    if capture_path is not None:
        writer = CaptureWriter(capture_path)
        pair.a.capture = writer
        pair.b.capture = writer
    return pair


def make_inproc_pair(tap: bool = False, capture_path=None,
                     independent_tap: bool = False) -> ChannelPair:
    ab: queue.Queue = queue.Queue()
    ba: queue.Queue = queue.Queue()
    pair = ChannelPair(InProcEndpoint("a", ba, ab), InProcEndpoint("b", ab, ba),
                       independent_tap=independent_tap)
    return _attach(pair, tap, capture_path)


def make_stream_pair(stream_a=None, stream_b=None, tap: bool = False,
                     capture_path=None, independent_tap: bool = False) -> ChannelPair:
    """Endpoints over two connected byte streams; a socketpair if none given."""
    if stream_a is None and stream_b is None:
        stream_a, stream_b = socket.socketpair()
    elif stream_a is None or stream_b is None:
        raise ValueError("give both streams or neither")
    pair = ChannelPair(StreamEndpoint("a", stream_a), StreamEndpoint("b", stream_b),
                       independent_tap=independent_tap)
    return _attach(pair, tap, capture_path)


def loopback_tcp_streams() -> tuple[socket.socket, socket.socket]:
    """A connected pair of TCP sockets on 127.0.0.1."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.bind(("127.0.0.1", 0))
        server.listen(1)
        client = socket.create_connection(server.getsockname())
        conn, _ = server.accept()
    return client, conn
