"""Reed-Muller codes RM(m, r): parameters, generator matrix, encoding and
exhaustive codeword enumeration.

Message bit ``j`` is the coefficient of the ``j``-th monomial in ascending
mask order, so message index ``i`` (as an integer) selects the monomials
whose positions are the set bits of ``i``.

Codewords are handled in packed form: a length-2^m word is stored as
``ceil(2^m / 64)`` little-endian uint64 words, bit ``a % 64`` of word
``a // 64`` holding position ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .combinatorics import binom_leq
from .errors import CapExceededError, PreconditionError
from .gf2 import rank
from .gf2poly import MAX_EVAL_M, EvalVec, PolyANF, monomials, zeta_transform

ENUM_DIM_CAP = 26
_CHUNK_BITS = 16


@dataclass(frozen=True)
class CodeParams:
    m: int
    r: int

    def __post_init__(self):
        if self.m < 1:
            raise PreconditionError(f"m must be positive, got {self.m}")
        if not 0 <= self.r <= self.m:
            raise PreconditionError(f"need 0 <= r <= m, got r={self.r}, m={self.m}")

    @property
    def dim(self) -> int:
        return binom_leq(self.m, self.r)

    @property
    def n(self) -> int:
        return 1 << self.m

    @property
    def rate(self) -> Fraction:
        return Fraction(self.dim, self.n)

    @property
    def gamma(self) -> Fraction:
        return Fraction(self.r, self.m)

    @property
    def n_words(self) -> int:
        return (self.n + 63) // 64

    def masks(self) -> np.ndarray:
        return monomials(self.m, self.r)

    def __str__(self):
        return f"RM({self.m},{self.r})"


# -- packing -------------------------------------------------------------------


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., n) 0/1 array into (..., ceil(n/64)) uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    pad = (-n) % 64
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), np.uint8)], axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8")


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    return np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")[..., :n]


def packed_weight(words: np.ndarray) -> np.ndarray:
    """Hamming weight of each packed word vector along the last axis."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


# -- generator -------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorMatrix:
    """Rows are the evaluation vectors of the monomials of degree <= r."""

    params: CodeParams
    masks: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)  # (dim, n_words) packed uint64

    @cached_property
    def dense(self) -> np.ndarray:
        """(dim, n) 0/1 matrix."""
        return unpack_bits(self.rows, self.params.n)

    @cached_property
    def row_ints(self) -> list[int]:
        return [int.from_bytes(row.tobytes(), "little") for row in self.rows]

    @cached_property
    def columns(self) -> list[int]:
        """Column ``a`` as a dim-bit int: bit j is set iff mask_j is a subset of a."""
        dim = len(self.masks)
        packed = np.packbits(self.dense, axis=0, bitorder="little")  # (ceil(dim/8), n)
        raw = np.ascontiguousarray(packed.T)
        cols = [int.from_bytes(raw[a].tobytes(), "little") for a in range(raw.shape[0])]
        assert all(c >> dim == 0 for c in cols)
        return cols

    def rank(self) -> int:
        return rank(self.row_ints)


@lru_cache(maxsize=64)
def generator_matrix(params: CodeParams) -> GeneratorMatrix:
    if params.m > MAX_EVAL_M:
        raise CapExceededError("m", params.m, MAX_EVAL_M)
    masks = params.masks()
    table = np.zeros((len(masks), params.n), dtype=np.uint8)
    table[np.arange(len(masks)), masks] = 1
    zeta_transform(table, params.m)
    rows = pack_bits(table)
    rows.flags.writeable = False
    masks.flags.writeable = False
    return GeneratorMatrix(params, masks, rows)


def message_to_poly(params: CodeParams, message) -> PolyANF:
    message = _check_message(params, message)
    masks = params.masks()
    return PolyANF(params.m, frozenset(masks[np.flatnonzero(message)].tolist()))


def poly_to_message(params: CodeParams, f: PolyANF) -> np.ndarray:
    if f.m != params.m or (f.degree or 0) > params.r:
        raise PreconditionError(f"{f!r} is not in {params}")
    masks = params.masks()
    return np.isin(masks, np.fromiter(f.coeffs, dtype=np.int64, count=len(f.coeffs))).astype(np.uint8)


def _check_message(params: CodeParams, message) -> np.ndarray:
    message = np.asarray(message, dtype=np.uint8)
    if message.shape != (params.dim,):
        raise PreconditionError(f"message length {message.shape} does not match dim={params.dim}")
    return message


def encode(params: CodeParams, message) -> EvalVec:
    message = _check_message(params, message)
    if params.m > MAX_EVAL_M:
        raise CapExceededError("m", params.m, MAX_EVAL_M)
    table = np.zeros(params.n, dtype=np.uint8)
    table[params.masks()] = message & 1
    return EvalVec(params.m, zeta_transform(table, params.m))


def encode_index(params: CodeParams, index: int) -> EvalVec:
    """Codeword for the message whose bits are those of ``index``."""
    bits = np.array([(index >> j) & 1 for j in range(params.dim)], dtype=np.uint8)
    return encode(params, bits)


# -- enumeration -------------------------------------------------------------------


def _check_enum_cap(params: CodeParams, cap: int = ENUM_DIM_CAP) -> None:
    if params.dim > cap:
        raise CapExceededError("dim", params.dim, cap)


def _span_table(rows: np.ndarray) -> np.ndarray:
    """All 2^k XOR combinations of k packed rows, entry i combining the set bits of i."""
    k, w = rows.shape
    out = np.zeros((1 << k, w), dtype=np.uint64)
    for j in range(k):
        half = 1 << j
        out[half : 2 * half] = out[:half] ^ rows[j]
    return out


def codeword_chunks(params: CodeParams, cap: int = ENUM_DIM_CAP) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(start, block)`` where ``block[i]`` is the packed codeword of message ``start + i``.

    Blocks cover all 2^dim messages in increasing order.
    """
    _check_enum_cap(params, cap)
    rows = generator_matrix(params).rows
    lo = min(params.dim, _CHUNK_BITS)
    low = _span_table(rows[:lo])
    low.flags.writeable = False
    high_rows = rows[lo:]
    base = np.zeros(rows.shape[1], dtype=np.uint64)
    for h in range(1 << (params.dim - lo)):
        # moving from h-1 to h flips the bits of h ^ (h-1)
        flipped = h ^ (h - 1) if h else 0
        while flipped:
            j = flipped.bit_length() - 1
            base = base ^ high_rows[j]
            flipped ^= 1 << j
        yield h << lo, low ^ base if h else low


def enumerate_codewords(params: CodeParams) -> Iterator[tuple[np.ndarray, EvalVec]]:
    """Every (message, codeword) pair, by ascending message index."""
    for start, block in codeword_chunks(params):
        bits = unpack_bits(block, params.n)
        for i in range(block.shape[0]):
            idx = start + i
            msg = np.array([(idx >> j) & 1 for j in range(params.dim)], dtype=np.uint8)
            yield msg, EvalVec(params.m, bits[i])


def weight_counts(params: CodeParams, cap: int = ENUM_DIM_CAP) -> np.ndarray:
    """counts[w] = number of codewords of absolute weight w, by exhaustive enumeration."""
    counts = np.zeros(params.n + 1, dtype=np.int64)
    for _, block in codeword_chunks(params, cap):
        counts += np.bincount(packed_weight(block), minlength=params.n + 1)
    return counts


def min_distance(params: CodeParams) -> tuple[Fraction, bool]:
    """Minimum positive relative weight and whether it was found exhaustively.

    Above the enumeration cap the analytic value 2^-r is returned with the
    flag False.
    """
    if params.dim > ENUM_DIM_CAP:
        return Fraction(1, 1 << params.r), False
    counts = weight_counts(params)
    w = int(np.flatnonzero(counts[1:])[0]) + 1
    return Fraction(w, params.n), True
