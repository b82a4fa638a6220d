"""Privacy amplification with Toeplitz hashing over GF(2), plus the
closed-form bounds used to dimension each round.

Bit strings are ``uint8`` numpy arrays holding 0/1.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .entropy import EntropySource

LN2 = math.log(2.0)
_DIRECT_LIMIT = 2048


class PoolStarvation(ValueError):
    """A round would not leave enough output for next bases plus one key bit."""


@dataclass(frozen=True, eq=False)
class ToeplitzHash:
    """A ``rows x cols`` binary Toeplitz matrix given by ``rows + cols - 1`` seed bits.

    ``entry(i, j) = seed_bits[i - j + cols - 1]``: the seed lists the first
    row right-to-left followed by the rest of the first column, i.e.
    ``(c_cols, ..., c_2, r_1, r_2, ..., r_rows)``.
    """

    rows: int
    cols: int
    seed_bits: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("Toeplitz dimensions must be positive")
        seed = np.asarray(self.seed_bits, dtype=np.uint8)
        if seed.ndim != 1 or seed.size != self.rows + self.cols - 1:
            raise ValueError(f"seed must hold rows + cols - 1 = {self.rows + self.cols - 1} bits")
        if np.any(seed > 1):
            raise ValueError("seed bits must be 0 or 1")
        object.__setattr__(self, "seed_bits", seed)

    def entry(self, i: int, j: int) -> int:
        return int(self.seed_bits[i - j + self.cols - 1])

    def matrix(self) -> np.ndarray:
        i = np.arange(self.rows)[:, None]
        j = np.arange(self.cols)[None, :]
        return self.seed_bits[i - j + self.cols - 1]

    @classmethod
    def from_first_row_col(cls, first_col, first_row) -> ToeplitzHash:
        """Build from ``(r_1..r_rows)`` and ``(r_1, c_2..c_cols)``."""
        first_col = np.asarray(first_col, dtype=np.uint8)
        first_row = np.asarray(first_row, dtype=np.uint8)
        if first_col[0] != first_row[0]:
            raise ValueError("first row and column must share the corner element")
        seed = np.concatenate([first_row[:0:-1], first_col])
        return cls(first_col.size, first_row.size, seed)

    def __eq__(self, other):
        if not isinstance(other, ToeplitzHash):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and \
            np.array_equal(self.seed_bits, other.seed_bits)

    def __hash__(self):
        return hash((self.rows, self.cols, self.seed_bits.tobytes()))


def build_toeplitz(rows: int, cols: int, rng: EntropySource) -> ToeplitzHash:
    """Draw a compressing Toeplitz hash; consumes exactly ``rows + cols - 1`` bits."""
    if rows < 1 or cols < rows + 1:
        raise ValueError(f"need rows >= 1 and cols > rows, got {rows}x{cols}")
    return ToeplitzHash(rows, cols, rng.random_bits(rows + cols - 1))


def hash_apply(h: ToeplitzHash, bits) -> np.ndarray:
    """GF(2) product of the hash matrix with ``bits``.

    Row ``i`` of the product is a window of the full convolution of the seed
    with the input, so it costs one (FFT) convolution rather than a dense
    matrix.
    """
    x = np.asarray(bits, dtype=np.uint8)
    if x.ndim != 1 or x.size != h.cols:
        raise ValueError(f"input length {x.size} does not match {h.cols} columns")
    if h.cols <= _DIRECT_LIMIT:
        full = np.convolve(h.seed_bits.astype(np.int64), x.astype(np.int64))
    else:
        full = np.rint(signal.fftconvolve(h.seed_bits.astype(float), x.astype(float))).astype(np.int64)
    return (full[h.cols - 1:h.cols - 1 + h.rows] & 1).astype(np.uint8)


def serialize_seed(h: ToeplitzHash) -> bytes:
    """4-byte big-endian bit count, then seed bits packed LSB-first in each byte."""
    n = h.seed_bits.size
    return struct.pack(">I", n) + np.packbits(h.seed_bits, bitorder="little").tobytes()


def deserialize_seed(data: bytes, cols: int) -> ToeplitzHash:
    """Inverse of :func:`serialize_seed`; the row count follows from ``cols``."""
    if len(data) < 4:
        raise ValueError("seed payload shorter than its length header")
    (n,) = struct.unpack(">I", data[:4])
    body = data[4:]
    if len(body) != (n + 7) // 8:
        raise ValueError(f"seed payload holds {len(body)} bytes, header says {n} bits")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8), bitorder="little")[:n]
    rows = n - cols + 1
    if rows < 1:
        raise ValueError(f"{n} seed bits cannot define a matrix with {cols} columns")
    return ToeplitzHash(rows, cols, bits)


@dataclass(frozen=True)
class RoundDims:
    s: int
    m: int
    t_leak: float
    lam: int

    @property
    def t_bits(self) -> int:
        return math.ceil(self.t_leak)

    @property
    def in_bits(self) -> int:
        return self.s * (self.m + 1)

    @property
    def out_bits(self) -> int:
        return self.in_bits - self.t_bits - self.lam

    @property
    def bases_bits(self) -> int:
        return self.m * self.s

    @property
    def key_bits(self) -> int:
        return self.out_bits - self.bases_bits


def dims_for_round(s: int, m: int, t_leak: float, lam: int) -> RoundDims:
    """Input/output sizes of one hashing round.

    The hash takes ``s(m+1)`` bits (next-round bases plus fresh bits) down to
    ``s(m+1) - ceil(t_leak) - lam``; the first ``m*s`` output bits become the
    next bases and the rest is key.
    """
    if s < 1 or m < 1:
        raise ValueError("s and m must be >= 1")
    if t_leak < 0:
        raise ValueError("t_leak must be non-negative")
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    dims = RoundDims(int(s), int(m), float(t_leak), int(lam))
    if dims.out_bits <= dims.bases_bits:
        shortfall = dims.bases_bits + 1 - dims.out_bits
        raise PoolStarvation(
            f"pool starvation: {dims.out_bits} output bits cannot refill {dims.bases_bits} "
            f"bases bits and yield a key bit (short by {shortfall})")
    return dims


def eve_bound_corollary5(lam: int) -> float:
    """Upper bound ``1 / (ln 2 * 2**lam)`` on Eve's expected information (bits)."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return math.ldexp(1.0 / LN2, -int(lam))


def eve_bound_corollary5_log2(lam: int) -> float:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return -math.log2(LN2) - lam


def eve_entropy_gap_exponent(r: int, n: int) -> tuple[int, float]:
    """Exact log-space form ``(e, c)`` with gap ``= c * 2**e`` and ``c = 1/ln 2``.

    Ratios between gaps are exact powers of two ``2**(e1 - e2)`` for any
    ``n``, including those where the float value underflows.
    """
    if r < 1 or n < 1:
        raise ValueError("r and n must be >= 1")
    return int(r) - 2 * int(n), 1.0 / LN2


def eve_entropy_gap_log2(r: int, n: int) -> float:
    """``log2`` of ``2**(r - 2n) / ln 2``."""
    if r < 1 or n < 1:
        raise ValueError("r and n must be >= 1")
    return float(r - 2 * n) - math.log2(LN2)


def eve_entropy_gap(r: int, n: int) -> float:
    """Eve's residual entropy ``2**(r - 2n) / ln 2``; 0.0 once it underflows."""
    if r < 1 or n < 1:
        raise ValueError("r and n must be >= 1")
    return math.ldexp(1.0 / LN2, r - 2 * n)


def max_run_length(p_e: float, mode: str = "literal") -> int:
    """Longest run ``s`` keeping Eve's expected gain under one bit.

    ``mode="literal"`` solves ``s (1 - P_e) < 1``; ``mode="rate"`` solves
    ``s * t_bit < 1`` with ``t_bit = 1/2 - P_e``.
    """
    if not 0.0 < p_e < 1.0:
        raise ValueError("p_e must lie in (0, 1)")
    if mode == "literal":
        x = 1.0 - p_e
    elif mode == "rate":
        x = 0.5 - p_e
        if x <= 0:
            raise ValueError("rate mode needs p_e < 0.5")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    s = max(0, math.ceil(1.0 / x) - 1)
    while (s + 1) * x < 1.0:
        s += 1
    while s > 0 and s * x >= 1.0:
        s -= 1
    return s
