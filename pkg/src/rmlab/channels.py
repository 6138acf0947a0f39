"""Binary erasure and binary symmetric channels for RM codes.

Covers the samplers, erasure recoverability (rank test and the literal
codeword-support oracle), erasure and ML decoding, Monte Carlo failure-rate
estimation, exact union-bound evaluators, and the scalar inequality families
that certify the capacity thresholds.

Randomness: trial ``i`` of a run with master seed ``s`` draws from
``np.random.default_rng(SeedSequence([s, i]))``, so results do not depend on
thread count or scheduling. Each trial draws one uniform ``u`` per position
and a position is erased (or flipped) iff ``u < p``; runs at different ``p``
with the same seed are therefore coupled, and failure counts are monotone in
``p`` for the erasure channel.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .combinatorics import binary_entropy, binom_leq, c_gamma, d_gamma, xi_from_capacity_gap
from .errors import CapExceededError, InconsistentWordError, PreconditionError
from .gf2 import XorBasis
from .gf2poly import EvalVec, zeta_transform
from .rmcode import (
    CodeParams,
    codeword_chunks,
    generator_matrix,
    pack_bits,
    packed_weight,
    unpack_bits,
)
from .weightdist import WeightProfile, brute_force_profile

ERASED = -1
ORACLE_DIM_CAP = 20
ML_DIM_CAP = 22
_CODEBOOK_WORDS_CAP = 1 << 24
BEC = "bec"
BSC = "bsc"


# -- channel description -------------------------------------------------------------------


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _p_from_capacity(kind: str, c: float, rate: float) -> float:
    if kind == BEC:
        p = 1.0 - c * rate
        if not 0.0 <= p <= 1.0:
            raise PreconditionError(f"p = 1 - c*R = {p} outside [0, 1]")
        return p
    if kind == BSC:
        return (1.0 - xi_from_capacity_gap(c, rate)) / 2.0
    raise PreconditionError(f"unknown channel kind {kind!r}")


@dataclass(frozen=True)
class ChannelSpec:
    """A channel and its parameter p, optionally derived from a capacity gap c.

    For the erasure channel p = 1 - c R; for the symmetric channel p <= 1/2
    solves H(p) = 1 - c R.
    """

    kind: str
    p: float
    c: float | None = None
    rate: float | None = None

    def __post_init__(self):
        if self.kind not in (BEC, BSC):
            raise PreconditionError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise PreconditionError(f"p={self.p} outside [0, 1]")
        if (self.c is None) != (self.rate is None):
            raise PreconditionError("c and rate must be given together")
        if self.c is not None:
            expected = _p_from_capacity(self.kind, self.c, self.rate)
            if abs(expected - self.p) > 1e-12:
                raise PreconditionError(f"p={self.p} does not match the derivation ({expected})")

    @classmethod
    def from_capacity(cls, kind: str, c: float, rate) -> ChannelSpec:
        rate = float(rate)
        return cls(kind, _p_from_capacity(kind, c, rate), c, rate)

    @property
    def capacity(self) -> float:
        return 1.0 - self.p if self.kind == BEC else 1.0 - binary_entropy(self.p)


@dataclass(frozen=True, eq=False)
class ErasurePattern:
    """``erased[a]`` is True when position a was erased."""

    m: int
    erased: np.ndarray

    def __post_init__(self):
        erased = np.asarray(self.erased, dtype=bool)
        if erased.shape != (1 << self.m,):
            raise PreconditionError(f"pattern length {erased.shape} does not match 2^{self.m}")
        erased = erased.copy()
        erased.flags.writeable = False
        object.__setattr__(self, "erased", erased)

    @classmethod
    def from_positions(cls, m: int, positions) -> ErasurePattern:
        erased = np.zeros(1 << m, dtype=bool)
        erased[list(positions)] = True
        return cls(m, erased)

    @classmethod
    def from_int(cls, m: int, value: int) -> ErasurePattern:
        """Bit a of ``value`` marks position a as erased."""
        return cls(m, np.array([(value >> a) & 1 for a in range(1 << m)], dtype=bool))

    @property
    def n_erased(self) -> int:
        return int(self.erased.sum())

    @property
    def survivors(self) -> np.ndarray:
        return np.flatnonzero(~self.erased)


# -- BEC -------------------------------------------------------------------------------


def bec_transmit(codeword: EvalVec, p: float, rng) -> tuple[np.ndarray, ErasurePattern]:
    """Erase each position independently with probability p.

    The received word is an int8 array holding 0/1 or ``ERASED``.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    erased = rng.random(codeword.n) < p
    received = codeword.bits.astype(np.int8)
    received[erased] = ERASED
    return received, ErasurePattern(codeword.m, erased)


def bec_recoverable(pattern: ErasurePattern, params: CodeParams) -> bool:
    """True iff the generator columns at surviving positions have full rank."""
    _check_pattern(pattern, params)
    cols = generator_matrix(params).columns
    basis = XorBasis(params.dim)
    for a in pattern.survivors.tolist():
        basis.add(cols[a])
        if basis.full:
            return True
    return basis.full


def bec_recoverable_oracle(pattern: ErasurePattern, params: CodeParams) -> bool:
    """True iff no nonzero codeword has its support inside the erased set."""
    _check_pattern(pattern, params)
    if params.dim > ORACLE_DIM_CAP:
        raise CapExceededError("dim", params.dim, ORACLE_DIM_CAP)
    keep = pack_bits((~pattern.erased).astype(np.uint8))
    for start, block in codeword_chunks(params):
        outside = np.bitwise_and(block, keep).any(axis=1)
        if start == 0:
            outside[0] = True  # the zero codeword does not count
        if not outside.all():
            return False
    return True


def _check_pattern(pattern: ErasurePattern, params: CodeParams) -> None:
    if pattern.m != params.m:
        raise PreconditionError(f"pattern on m={pattern.m} used with {params}")


def bec_decode(received: np.ndarray, params: CodeParams) -> EvalVec | None:
    """The unique codeword agreeing with ``received`` off the erasures, or None if ambiguous.

    Raises InconsistentWordError when no codeword agrees with the
    non-erased positions.
    """
    received = np.asarray(received)
    if received.shape != (params.n,):
        raise PreconditionError(f"received length {received.shape} does not match n={params.n}")
    cols = generator_matrix(params).columns
    # augmented rows: column shifted up one bit, received value in bit 0
    pivots: dict[int, int] = {}
    for a in np.flatnonzero(received != ERASED).tolist():
        v = (cols[a] << 1) | int(received[a])
        while v > 1:
            top = v.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                pivots[top] = v
                break
            v ^= p
        else:
            if v == 1:
                raise InconsistentWordError(f"position {a} contradicts the other received bits")
    if len(pivots) < params.dim:
        return None
    message = 0
    for top in sorted(pivots):
        row = pivots[top]
        known = row & (message << 1) & ((1 << top) - 1)
        bit = (row & 1) ^ (known.bit_count() & 1)
        message |= bit << (top - 1)
    bits = np.array([(message >> j) & 1 for j in range(params.dim)], dtype=np.uint8)
    table = np.zeros(params.n, dtype=np.uint8)
    table[params.masks()] = bits
    return EvalVec(params.m, zeta_transform(table, params.m))


# -- BSC -------------------------------------------------------------------------------


def bsc_transmit(codeword: EvalVec, p: float, rng) -> EvalVec:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    flips = (rng.random(codeword.n) < p).astype(np.uint8)
    return EvalVec(codeword.m, codeword.bits ^ flips)


@lru_cache(maxsize=8)
def _codebook(params: CodeParams) -> np.ndarray:
    block = np.concatenate([b for _, b in codeword_chunks(params)])
    block.flags.writeable = False
    return block


def _codebook_blocks(params: CodeParams) -> Iterator[tuple[int, np.ndarray]]:
    if (1 << params.dim) * params.n_words <= _CODEBOOK_WORDS_CAP:
        yield 0, _codebook(params)
    else:
        yield from codeword_chunks(params)


def ml_decode(received: EvalVec, params: CodeParams) -> tuple[EvalVec, bool]:
    """Nearest codeword by exhaustive search; the flag is set when the minimum distance is attained twice."""
    if params.dim > ML_DIM_CAP:
        raise CapExceededError("dim", params.dim, ML_DIM_CAP)
    if received.m != params.m:
        raise PreconditionError(f"received word on m={received.m} used with {params}")
    z = pack_bits(received.bits)
    best_d = params.n + 1
    best_word = None
    ties = 0
    for _, block in _codebook_blocks(params):
        d = packed_weight(block ^ z)
        i = int(np.argmin(d))
        dmin = int(d[i])
        if dmin < best_d:
            best_d, best_word = dmin, block[i]
            ties = int(np.count_nonzero(d == dmin))
        elif dmin == best_d:
            ties += int(np.count_nonzero(d == dmin))
    return EvalVec(params.m, unpack_bits(best_word, params.n)), ties > 1


# -- Monte Carlo ------------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialStats:
    trials: int
    failures: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        q = self.failure_rate
        return math.sqrt(q * (1 - q) / self.trials) if self.trials else 0.0


def _random_codeword(params: CodeParams, rng: np.random.Generator) -> EvalVec:
    table = np.zeros(params.n, dtype=np.uint8)
    table[params.masks()] = rng.integers(0, 2, size=params.dim, dtype=np.uint8)
    return EvalVec(params.m, zeta_transform(table, params.m))


def _trial_failed(params: CodeParams, channel: ChannelSpec, rng: np.random.Generator, mode: str) -> bool:
    if mode == "random":
        sent = _random_codeword(params, rng)
    else:
        sent = EvalVec.zeros(params.m)
    if channel.kind == BEC:
        received, pattern = bec_transmit(sent, channel.p, rng)
        if mode == "zero":
            return not bec_recoverable(pattern, params)
        decoded = bec_decode(received, params)
        return decoded is None or decoded != sent
    received = bsc_transmit(sent, channel.p, rng)
    decoded, tie = ml_decode(received, params)
    return tie or decoded != sent


def estimate_lambda(
    params: CodeParams,
    channel: ChannelSpec,
    trials: int,
    seed: int,
    mode: str = "zero",
    threads: int = 1,
) -> TrialStats:
    """Fraction of trials in which the transmitted codeword cannot be uniquely recovered.

    ``mode="zero"`` always sends the zero codeword; ``mode="random"`` sends a
    uniformly random codeword and runs the full decoder, as a cross-check of
    the codeword-independence of the failure probability.
    """
    if mode not in ("zero", "random"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if trials < 0:
        raise PreconditionError("trials must be non-negative")
    if channel.kind == BSC and params.dim > ML_DIM_CAP:
        raise CapExceededError("dim", params.dim, ML_DIM_CAP)
    start = time.perf_counter()

    def run(i: int) -> bool:
        return _trial_failed(params, channel, trial_rng(seed, i), mode)

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            failures = sum(pool.map(run, range(trials)))
    else:
        failures = sum(run(i) for i in range(trials))
    return TrialStats(trials, int(failures), seed, time.perf_counter() - start)


@dataclass(frozen=True)
class SweepRow:
    c: float
    p: float
    stats: TrialStats


def capacity_sweep(
    params: CodeParams,
    kind: str,
    c_grid: Sequence[float],
    trials: int,
    seed: int,
    threads: int = 1,
) -> list[SweepRow]:
    """Estimate the failure rate at p derived from each gap c; every point reuses the same seed."""
    rows = []
    for c in c_grid:
        channel = ChannelSpec.from_capacity(kind, c, params.rate)
        rows.append(SweepRow(float(c), channel.p, estimate_lambda(params, channel, trials, seed, threads=threads)))
    return rows


SWEEP_HEADER = "c,p,trials,failures,failure_rate,seed"


def sweep_csv_rows(rows: Sequence[SweepRow]) -> list[str]:
    return [
        f"{row.c!r},{row.p!r},{row.stats.trials},{row.stats.failures},{row.stats.failure_rate!r},{row.stats.seed}"
        for row in rows
    ]


# -- union bounds -------------------------------------------------------------------------------


def _profile(params: CodeParams, profile: WeightProfile | None) -> WeightProfile:
    if profile is None:
        return brute_force_profile(params)
    if profile.params != params:
        raise PreconditionError("profile belongs to a different code")
    return profile


def union_bound_bec(params: CodeParams, s: int, profile: WeightProfile | None = None) -> Fraction:
    """sum over nonzero codewords f of (1 - wt(f))^s, exactly."""
    if s < 0:
        raise PreconditionError("s must be non-negative")
    prof = _profile(params, profile)
    n = params.n
    return sum((Fraction(c) * Fraction(n - w, n) ** s for w, c in prof.counts.items() if w), Fraction(0))


def union_bound_bec_hypergeometric(params: CodeParams, s: int, profile: WeightProfile | None = None) -> Fraction:
    """sum over nonzero f of C((1 - wt f) n, s) / C(n, s): the tighter intermediate form."""
    if not 0 <= s <= params.n:
        raise PreconditionError(f"need 0 <= s <= n, got s={s}")
    prof = _profile(params, profile)
    n = params.n
    num = sum(c * math.comb(n - w, s) for w, c in prof.counts.items() if w)
    return Fraction(num, math.comb(n, s))


def bec_failure_exact(params: CodeParams, s: int) -> Fraction:
    """Pr over survivor sets of size s (uniform) that the erasures are not recoverable."""
    n = params.n
    if n > 16:
        raise CapExceededError("n", n, 16)
    bad = 0
    total = 0
    for keep in combinations(range(n), s):
        erased = np.ones(n, dtype=bool)
        erased[list(keep)] = False
        total += 1
        if not bec_recoverable(ErasurePattern(params.m, erased), params):
            bad += 1
    return Fraction(bad, total)


def mu_term(m: int, gamma: float, c: float, const: float = 1.0) -> float:
    """exp(-const * eps^2 / 2 * c * binom(m, <= gamma m)) with eps = 2^(-H(gamma) m / 4).

    ``const`` stands in for the unspecified constant of the lower-tail bound.
    """
    r = int(round(gamma * m))
    eps = 2.0 ** (-binary_entropy(gamma) * m / 4.0)
    return math.exp(-const * 0.5 * eps * eps * c * binom_leq(m, r))


def _check_p_tilde(params: CodeParams, p_tilde) -> int:
    k = Fraction(p_tilde) * params.n
    if k.denominator != 1 or not 0 <= k <= params.n:
        raise PreconditionError(f"p_tilde * 2^m = {k} must be an integer in [0, n]")
    return int(k)


def union_bound_bsc_numerators(params: CodeParams, p_tilde, profile: WeightProfile | None = None) -> dict[int, int]:
    """Per weight w > 0: 2^w * binom(n - w, <= floor(K - w/2)), with K = p_tilde * n."""
    K = _check_p_tilde(params, p_tilde)
    prof = _profile(params, profile)
    n = params.n
    out = {}
    for w in prof.counts:
        if w == 0:
            continue
        top = (2 * K - w) // 2  # floor(K - w/2); negative means no admissible v
        out[w] = (1 << w) * binom_leq(n - w, top) if top >= 0 else 0
    return out


def union_bound_bsc(params: CodeParams, p_tilde, profile: WeightProfile | None = None) -> Fraction:
    """sum over nonzero f of 2^w binom(n - w, <= K - w/2) / C(n, K), exactly."""
    K = _check_p_tilde(params, p_tilde)
    prof = _profile(params, profile)
    nums = union_bound_bsc_numerators(params, p_tilde, prof)
    total = sum(prof.counts[w] * v for w, v in nums.items())
    return Fraction(total, math.comb(params.n, K))


@dataclass(frozen=True)
class BadPairCount:
    pairs: int  # (v, f): wt(v) = K, f != 0 a codeword, wt(v + f) <= K
    pairs_by_weight: dict[int, int]  # the same, split by wt(f), per codeword of that weight summed
    bad_v: int  # v of weight K for which some such f exists
    total_v: int  # C(n, K)

    @property
    def failure_fraction(self) -> Fraction:
        return Fraction(self.bad_v, self.total_v)


def bsc_bad_pairs_exact(params: CodeParams, p_tilde) -> BadPairCount:
    """Exhaustive count of bad error patterns of weight K = p_tilde * n."""
    K = _check_p_tilde(params, p_tilde)
    n = params.n
    if n > 16:
        raise CapExceededError("n", n, 16)
    words = np.concatenate([b for _, b in codeword_chunks(params, ORACLE_DIM_CAP)])[1:]
    weights = packed_weight(words)
    pairs = 0
    by_w: dict[int, int] = {}
    bad_v = 0
    total = 0
    for support in combinations(range(n), K):
        v = np.zeros(n, dtype=np.uint8)
        v[list(support)] = 1
        vp = pack_bits(v)
        hit = packed_weight(words ^ vp) <= K
        cnt = int(hit.sum())
        pairs += cnt
        for w in weights[hit].tolist():
            by_w[w] = by_w.get(w, 0) + 1
        bad_v += cnt > 0
        total += 1
    return BadPairCount(pairs, by_w, bad_v, total)


# -- capacity inequality families ---------------------------------------------------------------


def _log_sum(logs: Sequence[float]) -> float:
    top = max(logs)
    if top == -math.inf:
        return -math.inf
    return top + math.log(sum(math.exp(v - top) for v in logs))


def _ln_log2_inv_one_minus(x_log2: float) -> float:
    """ln of log2(1 / (1 - x)) for x = 2^x_log2 in (0, 1/2]."""
    if x_log2 > -1000:
        x = 2.0**x_log2
        return math.log(-math.log1p(-x) / math.log(2))
    # log2(1/(1-x)) = x / ln 2 to relative precision x
    return x_log2 * math.log(2) - math.log(math.log(2))


def _ln_log2_one_plus(x_log2: float) -> float:
    """ln of log2(1 + x) for x = 2^x_log2 in (0, 1]."""
    if x_log2 > -1000:
        return math.log(math.log1p(2.0**x_log2) / math.log(2))
    return x_log2 * math.log(2) - math.log(math.log(2))


@dataclass
class FamilyResult:
    name: str
    index_start: int
    margins: list[float]  # (lhs - rhs) / lhs per index
    tail_ratios: list[float]  # per RHS component: step ratio of rhs_j / lhs at the scan end

    @property
    def worst(self) -> float:
        return min(self.margins)

    @property
    def worst_index(self) -> int:
        return self.index_start + int(np.argmin(self.margins))

    @property
    def tail_ok(self) -> bool:
        return all(q < 1.0 for q in self.tail_ratios)


@dataclass
class ConstraintReport:
    channel: str
    gamma: float
    ok: bool
    worst_margin: float
    families: list[FamilyResult]

    def __iter__(self):
        # unpacks as (ok, worst_margin)
        return iter((self.ok, self.worst_margin))


def _family(name: str, start: int, stop: int, lhs_ln, rhs_ln) -> FamilyResult:
    """Evaluate lhs(i) >= sum_j rhs_j(i) for i in [start, stop] in log space."""
    margins = []
    ratios_prev = ratios_last = None
    for i in range(start, stop + 1):
        L = lhs_ln(i)
        comps = rhs_ln(i)
        margins.append(-math.expm1(_log_sum(comps) - L))
        ratios_prev, ratios_last = ratios_last, [c - L for c in comps]
    tail = []
    if ratios_prev is not None:
        tail = [math.exp(b - a) if a > -math.inf else 0.0 for a, b in zip(ratios_prev, ratios_last)]
    return FamilyResult(name, start, margins, tail)


def _poly_term_ln(gamma: float, coef: float, power: int) -> float:
    return math.log(17.0 * coef) + power * math.log(gamma)


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 0.5:
        raise PreconditionError(f"gamma={gamma} outside (0, 1/2)")


def _shared_families(gamma: float, terms: int, low_weight_lhs, mid_extra, last_extra: float) -> list[FamilyResult]:
    c, d = c_gamma(gamma), d_gamma(gamma)
    ln1g = math.log1p(-gamma)
    fam1 = _family(
        "low-weight",
        3,
        3 + terms - 1,
        low_weight_lhs,
        lambda l: [_poly_term_ln(gamma, c * l + d, l - 1)],
    )
    fam2 = _family(
        "dyadic-bias",
        2,
        2 + terms - 1,
        lambda k: (3 * k + 3) * ln1g,
        lambda k: [_poly_term_ln(gamma, c * k + c + d, k), mid_extra(k)],
    )
    fam3 = _family(
        "quarter-weight",
        0,
        0,
        lambda _: 9 * ln1g,
        lambda _: [_poly_term_ln(gamma, 5 * c + d, 4), math.log(last_extra)],
    )
    return [fam1, fam2, fam3]


def _report(kind: str, gamma: float, families: list[FamilyResult]) -> ConstraintReport:
    worst = min(f.worst for f in families)
    ok = worst > 0 and all(f.tail_ok for f in families[:2])
    return ConstraintReport(kind, gamma, ok, worst, families)


def check_bec_constraints(gamma: float, terms: int = 500) -> ConstraintReport:
    """The three inequality families behind the erasure-capacity threshold, with delta = 0."""
    _check_gamma(gamma)
    fams = _shared_families(
        gamma,
        terms,
        lambda l: _ln_log2_inv_one_minus(-(l + 1)),
        lambda k: _ln_log2_one_plus(-(k - 1)),
        math.log2(7 / 4),
    )
    return _report(BEC, gamma, fams)


def check_bsc_constraints(gamma: float, terms: int = 500) -> ConstraintReport:
    """The three inequality families behind the symmetric-channel threshold."""
    _check_gamma(gamma)
    ln2 = math.log(2)
    fams = _shared_families(
        gamma,
        terms,
        # 2^{-l-1} / (1 - 2^{-l-1})
        lambda l: -(l + 1) * ln2 - math.log1p(-(2.0 ** -(l + 1))),
        # 2^{-k+2} / (1 + 2^{-k+1})
        lambda k: (2 - k) * ln2 - math.log1p(2.0 ** (1 - k)),
        6 / 7,
    )
    return _report(BSC, gamma, fams)


def certified_threshold(kind: str, lo: float = 1e-4, hi: float = 0.49, iters: int = 60) -> float:
    """Largest gamma (to bisection precision) at which the checker still reports ok."""
    check = check_bec_constraints if kind == BEC else check_bsc_constraints
    if not check(lo).ok:
        raise PreconditionError(f"constraints already fail at gamma={lo}")
    if check(hi).ok:
        return hi
    for _ in range(iters):
        mid = (lo + hi) / 2
        if check(mid).ok:
            lo = mid
        else:
            hi = mid
    return lo
