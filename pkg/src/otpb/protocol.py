"""The bit-pool key distribution protocol, one round at a time.

Each round Alice draws ``s`` fresh bits, encodes bit ``j`` on the basis
given by the ``j``-th ``m``-bit group of the pool's bases region, and sends
the noisy phases.  She then sends a Toeplitz seed; both sides hash
``bases_region || fresh_bits`` and split the output into the next bases
region (first ``m*s`` bits) and a key block (the rest).

Rounds are atomic: the round functions return a *new* state and leave the
old one untouched, so a failed round simply keeps the previous state.  Bob
acknowledges a finished round with a ``RUN_ANNOUNCE`` echo and Alice only
commits once she has it.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .adversary import bayes_error_prob
from .entropy import EntropySource, SeededEntropy
from .noise import ChannelParams, sample_measured_phase
from .pa import RoundDims, build_toeplitz, deserialize_seed, dims_for_round, hash_apply, serialize_seed
from .transport import (ChannelPair, ChecksumTagger, FrameType, Tagger, TransportError, WireFrame,
                        make_inproc_pair, pack_phases, unpack_phases)
from .wheel import bases_from_bitstring, decode_with_basis, encode

DEFAULT_TIMEOUT = 30.0


class ProtocolError(RuntimeError):
    def __init__(self, message: str, step: str | None = None):
        super().__init__(f"step {step}: {message}" if step else message)
        self.step = step


class ProtocolAborted(ProtocolError):
    """The peer sent ABORT."""


class AuthenticationError(ProtocolError):
    pass


@dataclass(frozen=True)
class RoundRecord:
    run_index: int
    key_bits: int
    channel_bits: np.ndarray = field(repr=False)
    bases_digest: str
    key_digest: str


@dataclass(frozen=True)
class BitPool:
    bases_region: np.ndarray
    key_blocks: tuple[np.ndarray, ...] = ()

    @property
    def key_region(self) -> np.ndarray:
        if not self.key_blocks:
            return np.zeros(0, dtype=np.uint8)
        return np.concatenate(self.key_blocks)


@dataclass(frozen=True)
class SessionState:
    role: str
    pool: BitPool
    dims: RoundDims
    params: ChannelParams
    run_index: int = 0
    phase: str = "1a"
    ledger: tuple[RoundRecord, ...] = ()

    @property
    def bases(self) -> np.ndarray:
        return bases_from_bitstring(self.pool.bases_region, self.dims.m)


def _digest(bits: np.ndarray) -> str:
    return hashlib.sha256(np.packbits(bits).tobytes() + len(bits).to_bytes(8, "big")).hexdigest()[:16]


def init_session(role: str, shared_c0, dims: RoundDims, params: ChannelParams) -> SessionState:
    if role not in ("alice", "bob"):
        raise ValueError(f"role must be 'alice' or 'bob', got {role!r}")
    if dims.m != params.bits_per_basis:
        raise ValueError(f"dims use m={dims.m} but the channel has {params.bits_per_basis} bits per basis")
    c0 = np.asarray(shared_c0, dtype=np.uint8)
    if c0.size != dims.m * dims.s:
        raise ValueError(f"c0 must hold m*s = {dims.m * dims.s} bits, got {c0.size}")
    return SessionState(role, BitPool(c0.copy()), dims, params)


def leak_estimate(params: ChannelParams, s: int, t_mode: str = "rate") -> float:
    """Bits of a round attributed to Eve.

    ``rate``: ``s * t_bit``.  ``literal``: ``s * (1 - P_e)``, Eve's expected
    number of correct guesses.
    """
    p_e = bayes_error_prob(params)
    if t_mode == "rate":
        return s * (0.5 - p_e)
    if t_mode == "literal":
        return s * (1.0 - p_e)
    raise ValueError(f"unknown t_mode {t_mode!r}")


def _advance(state: SessionState, h, fresh: np.ndarray, channel_bits: np.ndarray):
    out = hash_apply(h, np.concatenate([state.pool.bases_region, fresh]))
    nb = state.dims.bases_bits
    bases, key = out[:nb], out[nb:]
    record = RoundRecord(state.run_index + 1, key.size, channel_bits, _digest(bases), _digest(key))
    pool = BitPool(bases, state.pool.key_blocks + (key,))
    new = replace(state, pool=pool, run_index=state.run_index + 1, phase="1a",
                  ledger=state.ledger + (record,))
    return new, key


def alice_round(state: SessionState, rng: EntropySource, link: ChannelPair, *,
                noise_rng: EntropySource | None = None, tagger: Tagger | None = None,
                channel: Callable[[np.ndarray, int], np.ndarray] | None = None,
                timeout: float | None = DEFAULT_TIMEOUT) -> tuple[SessionState, np.ndarray]:
    """Run Alice's side of one round over ``link.a``.

    ``channel`` optionally transforms the noisy phases before they reach the
    wire (fault injection on the optical channel).
    """
    if state.role != "alice":
        raise ValueError("alice_round needs an alice session")
    tagger = tagger or ChecksumTagger()
    noise_rng = noise_rng or rng
    ep = link.a
    run = state.run_index + 1
    dims, params = state.dims, state.params
    step = "1a"
    try:
        fresh = rng.random_bits(dims.s)
        step = "1b"
        bases = state.bases
        step = "1c"
        clean = encode(fresh, bases, params)
        noisy = sample_measured_phase(clean, params, noise_rng)
        if channel is not None:
            noisy = np.asarray(channel(noisy, run), dtype=float)
        ep.send(tagger.seal(WireFrame(FrameType.RUN_ANNOUNCE, run)))
        block = tagger.seal(WireFrame(FrameType.PHASE_BLOCK, run, pack_phases(noisy)))
        tap_block = None
        if link.independent_tap and link.tap is not None:
            eve_view = sample_measured_phase(clean, params, noise_rng)
            tap_block = tagger.seal(WireFrame(FrameType.PHASE_BLOCK, run, pack_phases(eve_view)))
        ep.send(block, tap_frame=tap_block)
        step = "2"
        h = build_toeplitz(dims.out_bits, dims.in_bits, rng)
        ep.send(tagger.seal(WireFrame(FrameType.HASH_SEED, run, serialize_seed(h))))
        step = "3a"
        new, key = _advance(state, h, fresh, fresh)
        step = "3b"
        ack = ep.recv(timeout)
        _check(ack, tagger, run, step)
        if ack.frame_type == FrameType.ABORT:
            raise ProtocolAborted(f"bob aborted round {run}: {ack.payload.decode(errors='replace')}", step)
        if ack.frame_type != FrameType.RUN_ANNOUNCE:
            raise ProtocolError(f"expected RUN_ANNOUNCE acknowledgement, got {ack.frame_type.name}", step)
    except TransportError as exc:
        raise ProtocolError(f"transport failure, round {run} rolled back: {exc}", step) from exc
    return new, key


def bob_round(state: SessionState, link: ChannelPair, *, tagger: Tagger | None = None,
              timeout: float | None = DEFAULT_TIMEOUT) -> tuple[SessionState, np.ndarray]:
    """Run Bob's side of one round over ``link.b``."""
    if state.role != "bob":
        raise ValueError("bob_round needs a bob session")
    tagger = tagger or ChecksumTagger()
    ep = link.b
    run = state.run_index + 1
    dims = state.dims
    step = "1b"
    try:
        try:
            _expect(ep.recv(timeout), FrameType.RUN_ANNOUNCE, tagger, run, step)
            step = "1c"
            block = _expect(ep.recv(timeout), FrameType.PHASE_BLOCK, tagger, run, step)
            phases = unpack_phases(block.payload)
            if phases.size != dims.s:
                raise ProtocolError(f"PHASE_BLOCK carries {phases.size} phases, expected {dims.s}", step)
            fresh = decode_with_basis(phases, state.bases, state.params).astype(np.uint8)
            step = "2"
            seed = _expect(ep.recv(timeout), FrameType.HASH_SEED, tagger, run, step)
            try:
                h = deserialize_seed(seed.payload, dims.in_bits)
            except ValueError as exc:
                raise ProtocolError(f"malformed HASH_SEED frame: {exc}", step) from exc
            if h.rows != dims.out_bits:
                raise ProtocolError(f"HASH_SEED defines {h.rows} rows, expected {dims.out_bits}", step)
            step = "3a"
            new, key = _advance(state, h, fresh, fresh)
        except ProtocolError as exc:
            if not isinstance(exc, ProtocolAborted):
                _try_abort(ep, tagger, run, str(exc))
            raise
        step = "3b"
        ep.send(tagger.seal(WireFrame(FrameType.RUN_ANNOUNCE, run)))
    except TransportError as exc:
        raise ProtocolError(f"transport failure, round {run} rolled back: {exc}", step) from exc
    return new, key


def _check(frame: WireFrame, tagger: Tagger, run: int, step: str):
    if not tagger.verify(frame.header_and_payload(), frame.tag):
        raise AuthenticationError(f"tag mismatch on {frame.frame_type.name} frame", step)
    if frame.run_index != run:
        raise ProtocolError(f"{frame.frame_type.name} frame for run {frame.run_index}, expected {run}", step)


def _expect(frame: WireFrame, ftype: FrameType, tagger: Tagger, run: int, step: str) -> WireFrame:
    _check(frame, tagger, run, step)
    if frame.frame_type == FrameType.ABORT:
        raise ProtocolAborted(f"peer aborted: {frame.payload.decode(errors='replace')}", step)
    if frame.frame_type != ftype:
        raise ProtocolError(f"unexpected {frame.frame_type.name} frame, expected {ftype.name}", step)
    return frame


def _try_abort(ep, tagger, run, reason):
    try:
        ep.send(tagger.seal(WireFrame(FrameType.ABORT, run, reason.encode()[:1024])))
    except TransportError:
        pass


# --- audit -----------------------------------------------------------------

@dataclass(frozen=True)
class AuditReport:
    equal: bool
    run_index: tuple[int, int]
    bases_equal: bool
    keys_equal: bool
    key_lengths: tuple[int, int]
    first_divergent_round: int | None
    bit_errors: int
    rounds: tuple[tuple[int, int, bool], ...]

    def summary(self) -> str:
        if self.equal:
            return f"audit: equal after {self.run_index[0]} rounds, {self.key_lengths[0]} key bits"
        return (f"audit: MISMATCH (runs {self.run_index}, first divergent round "
                f"{self.first_divergent_round}, {self.bit_errors} channel bit errors)")


def audit_pool(a: SessionState, b: SessionState) -> AuditReport:
    """Compare two sessions' pools and per-round ledgers."""
    rounds = []
    first = None
    bit_errors = 0
    for ra, rb in zip(a.ledger, b.ledger):
        same = (ra.bases_digest, ra.key_digest) == (rb.bases_digest, rb.key_digest)
        if ra.channel_bits.size == rb.channel_bits.size:
            bit_errors += int(np.count_nonzero(ra.channel_bits != rb.channel_bits))
        rounds.append((ra.run_index, ra.key_bits, same))
        if not same and first is None:
            first = ra.run_index
    if first is None and a.run_index != b.run_index:
        first = min(a.run_index, b.run_index) + 1
    bases_equal = np.array_equal(a.pool.bases_region, b.pool.bases_region)
    keys_equal = np.array_equal(a.pool.key_region, b.pool.key_region)
    equal = bases_equal and keys_equal and first is None and a.run_index == b.run_index
    return AuditReport(equal, (a.run_index, b.run_index), bases_equal, keys_equal,
                       (a.pool.key_region.size, b.pool.key_region.size), first, bit_errors,
                       tuple(rounds))


# --- sessions ------------------------------------------------------------------

_CONFIG_KEYS = ("n_mean", "M", "s", "lambda", "rounds", "seed", "t_mode", "noise_scale")


@dataclass(frozen=True)
class SessionConfig:
    n_mean: float = 100.0
    M: int = 256
    s: int = 64
    lam: int = 8
    rounds: int = 100
    seed: int = 1
    t_mode: str = "rate"
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.t_mode not in ("rate", "literal"):
            raise ValueError(f"t_mode must be 'rate' or 'literal', got {self.t_mode!r}")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        self.params  # validates n_mean / M

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(self.n_mean, self.M, self.noise_scale)

    @classmethod
    def from_mapping(cls, values: dict) -> SessionConfig:
        conv = {"n_mean": float, "M": int, "s": int, "lambda": int, "rounds": int,
                "seed": int, "t_mode": str, "noise_scale": float}
        kw = {}
        for key, raw in values.items():
            if key not in conv:
                raise ValueError(f"unknown session key {key!r}; expected one of {', '.join(_CONFIG_KEYS)}")
            try:
                value = conv[key](float(raw)) if conv[key] is int else conv[key](raw)
            except (TypeError, ValueError):
                raise ValueError(f"bad value for {key}: {raw!r}") from None
            if conv[key] is int and float(raw) != value:
                raise ValueError(f"{key} must be an integer, got {raw!r}")
            kw["lam" if key == "lambda" else key] = value
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> SessionConfig:
        return cls.from_mapping(parse_key_values(Path(path).read_text()))

    def as_mapping(self) -> dict:
        return {"n_mean": self.n_mean, "M": self.M, "s": self.s, "lambda": self.lam,
                "rounds": self.rounds, "seed": self.seed, "t_mode": self.t_mode,
                "noise_scale": self.noise_scale}

    def config_hash(self) -> str:
        text = json.dumps(self.as_mapping(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def dims(self) -> RoundDims:
        params = self.params
        return dims_for_round(self.s, params.bits_per_basis, leak_estimate(params, self.s, self.t_mode), self.lam)


def parse_key_values(text: str) -> dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return out


@dataclass
class SessionResult:
    alice: SessionState
    bob: SessionState
    audit: AuditReport
    config: SessionConfig


def run_session(config: SessionConfig, link: ChannelPair | None = None, *,
                tagger: Tagger | None = None, channel=None,
                timeout: float | None = DEFAULT_TIMEOUT) -> SessionResult:
    """Run ``config.rounds`` rounds with Bob in a worker thread.

    Randomness (shared ``c0``, Alice's bit generator, channel noise) is
    derived from ``config.seed``.  On failure both sides keep the state of
    the last completed round and the error is re-raised.
    """
    params = config.params
    dims = config.dims()
    c0_rng, phrbg, noise = SeededEntropy(config.seed).spawn(3)
    c0 = c0_rng.random_bits(dims.bases_bits)
    alice = init_session("alice", c0, dims, params)
    bob = init_session("bob", c0, dims, params)
    own_link = link is None
    link = link or make_inproc_pair()
    bob_box: dict = {"state": bob, "error": None}

    def bob_loop():
        try:
            for _ in range(config.rounds):
                bob_box["state"], _ = bob_round(bob_box["state"], link, tagger=tagger, timeout=timeout)
        except Exception as exc:  # surfaced in the caller's thread
            bob_box["error"] = exc
            link.b.close()

    worker = threading.Thread(target=bob_loop, name="bob", daemon=True)
    worker.start()
    alice_error = None
    try:
        for _ in range(config.rounds):
            alice, _ = alice_round(alice, phrbg, link, noise_rng=noise, tagger=tagger,
                                   channel=channel, timeout=timeout)
    except Exception as exc:
        alice_error = exc
        link.a.close()
    worker.join()
    if own_link:
        link.close()
    error = bob_box["error"] or alice_error
    if error is not None:
        error.alice_state, error.bob_state = alice, bob_box["state"]
        raise error
    return SessionResult(alice, bob_box["state"], audit_pool(alice, bob_box["state"]), config)


def export_key(state: SessionState, path, config: SessionConfig | None = None) -> Path:
    """Write the key region as raw bytes (MSB-first, zero-padded) plus a JSON manifest."""
    path = Path(path)
    key = state.pool.key_region
    path.write_bytes(np.packbits(key).tobytes())
    d = state.dims
    manifest = {
        "key_bits": int(key.size),
        "bit_order": "msb-first",
        "rounds": state.run_index,
        "dims": {"s": d.s, "m": d.m, "t_leak": d.t_leak, "t_bits": d.t_bits, "lambda": d.lam,
                 "in_bits": d.in_bits, "out_bits": d.out_bits, "key_bits_per_round": d.key_bits},
        "config_hash": config.config_hash() if config else None,
    }
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
