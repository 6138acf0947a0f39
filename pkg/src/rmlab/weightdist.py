"""Weight enumerators of RM codes: exhaustive oracles, Monte Carlo estimates and
closed-form bound evaluators.

Bounds are reported in log2 space. Asymptotic slack whose constant is not
known (the O(m^4) term) is an explicit caller-supplied parameter, default 0,
and is itemized separately from the leading term.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.stats import binomtest

from .combinatorics import (
    binom_leq,
    c_gamma,
    d_gamma,
    log2_binom_leq,
    smallest_s,
)
from .errors import CapExceededError, HypothesisWarning, PreconditionError
from .gf2poly import MAX_EVAL_M, PolyANF, _as_rng, popcounts, zeta_transform
from .rmcode import ENUM_DIM_CAP, CodeParams, enumerate_codewords, weight_counts

SAMPLE_BIASED_M_CAP = 24


@dataclass(frozen=True)
class WeightProfile:
    """counts[w] is the number of codewords of absolute weight w."""

    params: CodeParams
    counts: dict[int, int]

    @classmethod
    def from_array(cls, params: CodeParams, arr) -> WeightProfile:
        return cls(params, {int(w): int(c) for w, c in enumerate(arr) if c})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def W(self, beta) -> int:
        """Number of codewords of relative weight at most ``beta``."""
        limit = Fraction(beta) * self.params.n
        return sum(c for w, c in self.counts.items() if w <= limit)

    def is_symmetric(self) -> bool:
        n = self.params.n
        return all(self.counts.get(n - w, 0) == c for w, c in self.counts.items())

    def items(self) -> list[tuple[int, int]]:
        return sorted(self.counts.items())

    def to_csv(self) -> str:
        lines = ["weight,count"]
        lines += [f"{w},{c}" for w, c in self.items()]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "m": self.params.m,
            "r": self.params.r,
            "n": self.params.n,
            "dim": self.params.dim,
            # counts can exceed 2^53, so they are written as strings
            "counts": {str(w): str(c) for w, c in self.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _anf_weight_block(params: CodeParams, start: int, stop: int) -> np.ndarray:
    """Weight histogram of the codewords with message indices in [start, stop)."""
    masks = params.masks()
    n = params.n
    counts = np.zeros(n + 1, dtype=np.int64)
    batch = max(1, (1 << 22) // n)
    shifts = np.arange(params.dim, dtype=np.int64)
    for lo in range(start, stop, batch):
        idx = np.arange(lo, min(stop, lo + batch), dtype=np.int64)
        table = np.zeros((len(idx), n), dtype=np.uint8)
        table[:, masks] = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        zeta_transform(table, params.m)
        counts += np.bincount(table.sum(axis=1, dtype=np.int64), minlength=n + 1)
    return counts


def brute_force_profile(params: CodeParams, method: str = "anf", threads: int = 1) -> WeightProfile:
    """Exact weight enumerator by exhaustion over all 2^dim codewords.

    ``method="anf"`` builds every coefficient vector and evaluates it with
    the subset-sum transform; ``method="codewords"`` XORs generator rows.
    The two share no code beyond the monomial ordering. With ``threads > 1``
    the ANF message range is split into blocks whose histograms are summed.
    """
    if params.dim > ENUM_DIM_CAP:
        raise CapExceededError("dim", params.dim, ENUM_DIM_CAP)
    if method == "codewords":
        return WeightProfile.from_array(params, weight_counts(params))
    if method == "stream":
        counts = np.zeros(params.n + 1, dtype=np.int64)
        for _, cw in enumerate_codewords(params):
            counts[cw.abs_weight()] += 1
        return WeightProfile.from_array(params, counts)
    if method != "anf":
        raise PreconditionError(f"unknown method {method!r}")
    total = 1 << params.dim
    threads = max(1, int(threads))
    if threads == 1:
        return WeightProfile.from_array(params, _anf_weight_block(params, 0, total))
    n_blocks = min(total, 4 * threads)
    edges = [total * i // n_blocks for i in range(n_blocks + 1)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda i: _anf_weight_block(params, edges[i], edges[i + 1]), range(n_blocks)))
    return WeightProfile.from_array(params, sum(parts))


class ProfileEstimate(NamedTuple):
    beta: Fraction
    hits: int
    n_samples: int
    fraction: float
    ci_low: float
    ci_high: float
    count_low: float  # ci bounds scaled by 2^dim
    count_high: float


def mc_profile_estimate(params: CodeParams, beta, n_samples: int, rng, confidence: float = 0.95) -> ProfileEstimate:
    """Estimate W(beta) / 2^dim from uniformly random codewords, with a Wilson interval."""
    if params.m > MAX_EVAL_M:
        raise CapExceededError("m", params.m, MAX_EVAL_M)
    rng = _as_rng(rng)
    beta = Fraction(beta)
    limit = beta * params.n
    allowed = popcounts(params.m) <= params.r
    hits = 0
    batch = max(1, (1 << 22) // params.n)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        table = rng.integers(0, 2, size=(b, params.n), dtype=np.uint8)
        table[:, ~allowed] = 0
        zeta_transform(table, params.m)
        hits += int(np.count_nonzero(table.sum(axis=1, dtype=np.int64) <= limit))
        done += b
    ci = binomtest(hits, n_samples).proportion_ci(confidence_level=confidence, method="wilson")
    scale = 2.0**params.dim
    return ProfileEstimate(beta, hits, n_samples, hits / n_samples, ci.low, ci.high, ci.low * scale, ci.high * scale)


# -- bias concentration ---------------------------------------------------------------


class BiasTail(NamedTuple):
    empirical_prob: float
    bound: float
    exceedances: int
    n_samples: int


def bias_tail_bound(r: int, epsilon: float) -> float:
    """2 exp(-2^r eps^2 / 2)."""
    return 2.0 * math.exp(-(2.0**r) * epsilon**2 / 2.0)


def mc_bias_tail(m: int, r: int, epsilon: float, n_samples: int, rng) -> BiasTail:
    """Frequency of |bias(f)| > epsilon over uniformly random f of degree <= r."""
    if not 0 <= r <= m <= MAX_EVAL_M:
        raise PreconditionError(f"need 0 <= r <= m <= {MAX_EVAL_M}, got r={r}, m={m}")
    if n_samples < 1:
        raise PreconditionError("n_samples must be positive")
    rng = _as_rng(rng)
    n = 1 << m
    allowed = popcounts(m) <= r
    batch = max(1, (1 << 22) // n)
    # |1 - 2w/n| > eps  <=>  |n - 2w| > eps * n, compared exactly
    eps = Fraction(epsilon)
    exceed = 0
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        table = rng.integers(0, 2, size=(b, n), dtype=np.uint8)
        table[:, ~allowed] = 0
        zeta_transform(table, m)
        w = table.sum(axis=1, dtype=np.int64)
        exceed += sum(1 for x in np.abs(n - 2 * w).tolist() if x > eps * n)
        done += b
    return BiasTail(exceed / n_samples, bias_tail_bound(r, epsilon), exceed, n_samples)


# -- bound evaluators -------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    name: str
    log2_value: float
    leading_term: float
    slack_terms: dict[str, float]
    inputs: dict[str, float]
    extras: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "log2_value": self.log2_value,
            "leading_term": self.leading_term,
            "slack_terms": dict(self.slack_terms),
            "inputs": dict(self.inputs),
            "extras": dict(self.extras),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _scaled_binom(coef: float, m: int, r: int) -> float:
    """coef * binom(m, <= r) without overflowing to an exception."""
    if coef == 0:
        return 0.0
    exponent = math.log2(abs(coef)) + log2_binom_leq(m, r)
    if exponent > 1023:
        return math.copysign(math.inf, coef)
    if m <= 1000:
        return coef * binom_leq(m, r)
    return math.copysign(2.0**exponent, coef)


def _check_mr(m: int, r: int) -> None:
    if not 0 < r <= m:
        raise PreconditionError(f"need 0 < r <= m, got r={r}, m={m}")


def bound_low_weight(m: int, r: int, ell: int, m4_const: float = 0.0) -> BoundReport:
    """log2 of the upper bound on W(2^-ell) for RM(m, r)."""
    _check_mr(m, r)
    if not 1 <= ell <= r + 1:
        raise PreconditionError(f"need 1 <= ell <= r + 1, got ell={ell}")
    gamma = r / m
    if gamma >= 1:
        raise PreconditionError("gamma = 1 makes c_gamma undefined")
    coef = 17.0 * (c_gamma(gamma) * ell + d_gamma(gamma)) * gamma ** (ell - 1)
    leading = _scaled_binom(coef, m, r)
    slack = {"m4": m4_const * m**4}
    return BoundReport(
        name="low_weight",
        log2_value=leading + sum(slack.values()),
        leading_term=leading,
        slack_terms=slack,
        inputs={"m": m, "r": r, "ell": ell, "m4_const": m4_const},
        extras={"gamma": gamma, "coefficient": coef, "log2_binom_leq": log2_binom_leq(m, r)},
    )


def bound_net_A(m: int, r: int, k: int, t: int) -> int:
    """log2 bound on the size of the net of majorities of t order-k derivatives: mtk + t*binom(m-k, <= r-k)."""
    if not 0 <= k <= r <= m:
        raise PreconditionError(f"need 0 <= k <= r <= m, got {(m, r, k)}")
    if t < 1:
        raise PreconditionError("t must be positive")
    return m * t * k + t * binom_leq(m - k, r - k)


def bound_net_A1(m: int, r: int, t: int) -> int:
    """Sharper log2 bound for k = 1: mt + sum_{j=1}^{t} binom(m-j, <= r-1)."""
    if not 1 <= r <= m:
        raise PreconditionError(f"need 1 <= r <= m, got {(m, r)}")
    if not 1 <= t <= m:
        raise PreconditionError(f"need 1 <= t <= m, got t={t}")
    return m * t + sum(binom_leq(m - j, r - 1) for j in range(1, t + 1))


def bound_recursion(m: int, r: int, ell: int) -> int:
    """sum_{j=ell}^{r} bound_net_A(m, r, j-1, 17(j+2)); 0 for ell = r + 1."""
    if not 1 <= ell <= r + 1:
        raise PreconditionError(f"need 1 <= ell <= r + 1, got ell={ell}")
    return sum(bound_net_A(m, r, j - 1, 17 * (j + 2)) for j in range(ell, r + 1))


def bound_low_bias(m: int, r: int, ell: int, m4_const: float = 0.0) -> BoundReport:
    """log2 bound on W((1 - 2^-ell)/2) using the smallest admissible s."""
    _check_mr(m, r)
    gamma = r / m
    if gamma >= 0.5:
        raise PreconditionError(f"gamma = {gamma} >= 1/2: the bias bound is vacuous there")
    sp = smallest_s(gamma, ell, m)
    t = sp.t
    coef = (
        1.0
        - (1.0 - sp.gamma_tilde) ** t
        + 17.0 * (sp.c_gamma * (sp.s - 1) + sp.d_gamma) * gamma ** (sp.s - 2)
    )
    leading = _scaled_binom(coef, m, r)
    slack = {"m4": m4_const * m**4}
    return BoundReport(
        name="low_bias",
        log2_value=leading + sum(slack.values()),
        leading_term=leading,
        slack_terms=slack,
        inputs={"m": m, "r": r, "ell": ell, "m4_const": m4_const},
        extras={
            "gamma": gamma,
            "s": sp.s,
            "t": t,
            "gamma_tilde": sp.gamma_tilde,
            "coefficient": coef,
            "log2_binom_leq": log2_binom_leq(m, r),
            "c_gamma_ell": math.log2(1.0 / (1.0 - sp.gamma_tilde)) * t,
        },
    )


def lower_bound_log2(m: int, r: int, ell: int) -> int:
    """log2 of (1/2) exp2(sum_{j=1}^{ell-1} binom(m-j, <= r-1)).

    Outside r >= 20 and ell < r/3 the value is still returned, with a
    HypothesisWarning.
    """
    _check_mr(m, r)
    if ell < 1 or ell > m:
        raise PreconditionError(f"need 1 <= ell <= m, got ell={ell}")
    if r < 20 or 3 * ell >= r:
        warnings.warn(
            f"(m={m}, r={r}, ell={ell}) lies outside r >= 20, ell < r/3",
            HypothesisWarning,
            stacklevel=2,
        )
    return sum(binom_leq(m - j, r - 1) for j in range(1, ell)) - 1


# -- randomized construction ------------------------------------------------------------


def biased_poly_masks(m: int, r: int, ell: int) -> np.ndarray:
    """Boolean table over masks: True where x_i * (monomial in x_{i+1..m}) can occur, i <= ell."""
    pc = popcounts(m)
    idx = np.arange(1 << m, dtype=np.int64)
    low = idx & -idx  # lowest set bit; 0 for the empty mask
    if ell == 0:
        return np.zeros(1 << m, dtype=bool)
    return (pc <= r) & (low > 0) & (low <= 1 << (ell - 1))


def sample_biased_poly(m: int, r: int, ell: int, rng) -> tuple[PolyANF, Fraction]:
    """Draw g = sum_{i=1}^{ell} x_i f_i(x_{i+1}, ..., x_m), each f_i uniform of degree <= r-1.

    Returns g and its exact bias.
    """
    if not 0 <= ell <= r <= m:
        raise PreconditionError(f"need 0 <= ell <= r <= m, got {(m, r, ell)}")
    if m > SAMPLE_BIASED_M_CAP:
        raise CapExceededError("m", m, SAMPLE_BIASED_M_CAP)
    rng = _as_rng(rng)
    table = rng.integers(0, 2, size=1 << m, dtype=np.uint8)
    table[~biased_poly_masks(m, r, ell)] = 0
    g = PolyANF.from_dense(m, table)
    zeta_transform(table, m)
    w = int(table.sum(dtype=np.int64))
    return g, 1 - Fraction(2 * w, 1 << m)
