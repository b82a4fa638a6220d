"""The M-ary basis wheel: bits to basis numbers, and (basis, bit) to phase.

Basis ``k`` sits at ``k*pi/M``.  Bit assignment alternates between
neighbouring bases::

    phase(bit, k) = k*pi/M + bit*pi + (k mod 2)*pi   (mod 2*pi)

so bit 0 on basis 0 is at phase 0 and bit 1 at pi, while on basis 1 the
roles swap.  Because ``M`` is even, the alternation necessarily breaks at two
"seams" on the circle (between basis ``M-1`` and the antipode of basis 0).
All functions accept numpy arrays for ``bit`` / ``basis`` / ``measured``.
"""

from __future__ import annotations

import math

import numpy as np

from .noise import ChannelParams, circular_distance, wrap_phase

TIE_TOL = 1e-12


def basis_from_bits(bits, m: int | None = None) -> int:
    """Basis number from ``m`` bits, most significant first.

    >>> basis_from_bits([1, 0, 1])
    5
    """
    bits = [int(b) for b in bits]
    if m is not None and len(bits) != m:
        raise ValueError(f"expected {m} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    k = 0
    for b in bits:
        k = (k << 1) | b
    return k


def bits_from_basis(k: int, m: int) -> list[int]:
    if not 0 <= k < 2 ** m:
        raise ValueError(f"basis {k} out of range for m={m}")
    return [(k >> (m - 1 - i)) & 1 for i in range(m)]


def bases_from_bitstring(bits: np.ndarray, m: int) -> np.ndarray:
    """Partition a bit array into consecutive ``m``-bit groups -> basis indices."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % m:
        raise ValueError(f"bit string of length {bits.size} is not a multiple of m={m}")
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, m) @ weights


def _check_basis(basis, params: ChannelParams):
    b = np.asarray(basis)
    if np.any(b < 0) or np.any(b >= params.num_bases):
        raise ValueError(f"basis index out of range [0, {params.num_bases})")


def encode(bit, basis, params: ChannelParams):
    """Phase carrying ``bit`` on ``basis``."""
    _check_basis(basis, params)
    bit = np.asarray(bit, dtype=np.int64)
    basis = np.asarray(basis, dtype=np.int64)
    if np.any((bit != 0) & (bit != 1)):
        raise ValueError("bit must be 0 or 1")
    phase = basis * params.basis_spacing + ((bit + basis) % 2) * math.pi
    return wrap_phase(phase)


def constellation(params: ChannelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All ``2M`` points as (phases, bits, bases), ordered by phase."""
    M = params.num_bases
    j = np.arange(2 * M)
    basis = j % M
    # points with j >= M are the antipodes, carrying the opposite bit
    bit = (basis % 2) ^ (j >= M).astype(np.int64)
    return j * params.basis_spacing, bit, basis


def decode_with_basis(measured, basis, params: ChannelParams):
    """Bit whose point on ``basis`` is closer to ``measured``.

    Ties go to 0.  Distances agreeing within ``TIE_TOL`` radians count as a
    tie, since a midpoint such as ``phase + pi/2`` is itself rounded.
    """
    d0 = circular_distance(measured, encode(0, basis, params))
    d1 = circular_distance(measured, encode(1, basis, params))
    out = (np.asarray(d0) - np.asarray(d1) > TIE_TOL).astype(np.uint8)
    return int(out) if out.ndim == 0 else out
