"""Boolean functions on F_2^m as ANF coefficient sets and evaluation tables.

Encoding convention, shared by every module: a point ``a`` of F_2^m is the
integer whose bit ``i-1`` is the value of ``x_i``; a monomial is the integer
mask whose bit ``i-1`` is set iff ``x_i`` occurs in it. The empty mask is the
constant monomial 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import CapExceededError, PreconditionError

MAX_EVAL_M = 30


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@lru_cache(maxsize=32)
def popcounts(m: int) -> np.ndarray:
    """popcount of every integer below 2^m, as a read-only uint8 table."""
    table = np.bitwise_count(np.arange(1 << m, dtype=np.uint32)).astype(np.uint8)
    table.flags.writeable = False
    return table


@lru_cache(maxsize=32)
def _arange(m: int) -> np.ndarray:
    idx = np.arange(1 << m, dtype=np.int64)
    idx.flags.writeable = False
    return idx


def monomials(m: int, r: int) -> np.ndarray:
    """All masks of popcount <= r, ascending. This is the message order of RM(m, r)."""
    return np.flatnonzero(popcounts(m) <= r)


def _check_eval_m(m: int) -> None:
    if not 0 <= m <= MAX_EVAL_M:
        raise CapExceededError("m", m, MAX_EVAL_M)


def zeta_transform(table: np.ndarray, m: int) -> np.ndarray:
    """In-place subset-sum butterfly over F_2 along the last axis.

    It is its own inverse, so it serves as both the ANF -> evaluation map
    and the Moebius inversion back.
    """
    lead = table.shape[:-1]
    for i in range(m):
        view = table.reshape(*lead, -1, 2, 1 << i)
        view[..., 1, :] ^= view[..., 0, :]
    return table


@dataclass(frozen=True, eq=False)
class EvalVec:
    """Evaluation table of f: F_2^m -> F_2; ``bits[a] = f(a)``."""

    m: int
    bits: np.ndarray

    def __post_init__(self):
        _check_eval_m(self.m)
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.shape != (1 << self.m,):
            raise PreconditionError(f"expected {1 << self.m} bits, got shape {bits.shape}")
        if bits.size and bits.max() > 1:
            raise PreconditionError("evaluation table entries must be 0 or 1")
        if bits is self.bits:
            bits = bits.copy()
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, m: int) -> EvalVec:
        return cls(m, np.zeros(1 << m, dtype=np.uint8))

    @classmethod
    def ones(cls, m: int) -> EvalVec:
        return cls(m, np.ones(1 << m, dtype=np.uint8))

    @property
    def n(self) -> int:
        return 1 << self.m

    def abs_weight(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    def weight(self) -> Fraction:
        return weight(self)

    def bias(self) -> Fraction:
        return bias(self)

    def __xor__(self, other: EvalVec) -> EvalVec:
        if other.m != self.m:
            raise PreconditionError("functions on different cubes")
        return EvalVec(self.m, self.bits ^ other.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvalVec):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.m, self.bits.tobytes()))

    def __repr__(self):
        return f"EvalVec(m={self.m}, wt={self.abs_weight()}/{self.n})"

    def to_hex(self) -> str:
        """Hex string of the integer whose bit ``a`` is ``f(a)``."""
        packed = np.packbits(self.bits, bitorder="little")
        value = int.from_bytes(packed.tobytes(), "little")
        return format(value, f"0{max(1, self.n // 4)}x")

    @classmethod
    def from_hex(cls, m: int, text: str) -> EvalVec:
        value = int(text, 16)
        n = 1 << m
        if value >> n:
            raise PreconditionError("hex string longer than 2^m bits")
        raw = value.to_bytes(max(1, (n + 7) // 8), "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n]
        return cls(m, bits)


def weight(v: EvalVec) -> Fraction:
    """Pr_x[f(x) = 1] as an exact rational."""
    return Fraction(v.abs_weight(), v.n)


def bias(v: EvalVec) -> Fraction:
    """E_x[(-1)^f(x)] = 1 - 2 wt(f)."""
    return 1 - 2 * weight(v)


@dataclass(frozen=True)
class PolyANF:
    """Multilinear polynomial over F_2 stored as its set of monomial masks."""

    m: int
    coeffs: frozenset[int]

    def __post_init__(self):
        if self.m < 0:
            raise PreconditionError("m must be non-negative")
        coeffs = frozenset(int(c) for c in self.coeffs)
        limit = 1 << self.m
        for c in coeffs:
            if not 0 <= c < limit:
                raise PreconditionError(f"monomial mask {c:#x} does not fit in m={self.m} variables")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, m: int) -> PolyANF:
        return cls(m, frozenset())

    @classmethod
    def monomial(cls, m: int, *variables: int) -> PolyANF:
        """Product of the given 1-based variables; no arguments gives the constant 1."""
        mask = 0
        for i in variables:
            if not 1 <= i <= m:
                raise PreconditionError(f"variable x{i} outside 1..{m}")
            mask |= 1 << (i - 1)
        return cls(m, frozenset([mask]))

    @classmethod
    def from_dense(cls, m: int, table: np.ndarray) -> PolyANF:
        return cls(m, frozenset(np.flatnonzero(table).tolist()))

    def to_dense(self) -> np.ndarray:
        _check_eval_m(self.m)
        table = np.zeros(1 << self.m, dtype=np.uint8)
        if self.coeffs:
            table[np.fromiter(self.coeffs, dtype=np.int64, count=len(self.coeffs))] = 1
        return table

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int | None:
        """Largest monomial size; ``None`` for the zero polynomial."""
        if not self.coeffs:
            return None
        return max(c.bit_count() for c in self.coeffs)

    def __add__(self, other: PolyANF) -> PolyANF:
        if other.m != self.m:
            raise PreconditionError("polynomials in different numbers of variables")
        return PolyANF(self.m, self.coeffs ^ other.coeffs)

    def to_hex_list(self) -> list[str]:
        return [f"{c:#x}" for c in sorted(self.coeffs)]

    @classmethod
    def from_hex_list(cls, m: int, masks: Iterable[str]) -> PolyANF:
        coeffs: set[int] = set()
        for text in masks:
            # repeated masks cancel over F_2
            coeffs ^= {int(text, 16)}
        return cls(m, frozenset(coeffs))

    def __repr__(self):
        if not self.coeffs:
            return f"PolyANF(m={self.m}, 0)"
        terms = []
        for c in sorted(self.coeffs):
            vs = [f"x{i + 1}" for i in range(self.m) if c >> i & 1]
            terms.append("*".join(vs) if vs else "1")
        return f"PolyANF(m={self.m}, {' + '.join(terms)})"


def anf_to_eval(f: PolyANF) -> EvalVec:
    return EvalVec(f.m, zeta_transform(f.to_dense(), f.m))


def eval_to_anf(v: EvalVec) -> PolyANF:
    return PolyANF.from_dense(v.m, zeta_transform(v.bits.copy(), v.m))


def eval_naive(f: PolyANF, a: int) -> int:
    """f(a) by direct summation over monomials contained in ``a``."""
    return sum(1 for c in f.coeffs if c & a == c) & 1


def random_dense_anf(m: int, r: int, rng) -> np.ndarray:
    """Coefficient table of a uniformly random polynomial of degree <= r."""
    _check_eval_m(m)
    if not 0 <= r <= m:
        raise PreconditionError(f"need 0 <= r <= m, got r={r}, m={m}")
    rng = _as_rng(rng)
    table = rng.integers(0, 2, size=1 << m, dtype=np.uint8)
    table[popcounts(m) > r] = 0
    return table


def random_poly(m: int, r: int, rng) -> PolyANF:
    """Each of the binom(m, <=r) coefficients independently uniform."""
    return PolyANF.from_dense(m, random_dense_anf(m, r, rng))


def random_eval(m: int, r: int, rng) -> EvalVec:
    return EvalVec(m, zeta_transform(random_dense_anf(m, r, rng), m))
