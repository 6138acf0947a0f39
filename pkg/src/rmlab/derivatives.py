"""Discrete derivatives on F_2^m and majority-of-derivatives approximators.

``derivative(f, y)`` is the function x -> f(x + y) + f(x). Higher-order
derivatives iterate it along a :class:`DirectionTuple`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapExceededError, PreconditionError
from .gf2 import rank
from .gf2poly import EvalVec, _arange, _as_rng, bias, weight

DEFAULT_RETRIES = 20
SUBSET_T_CAP = 20
FULL_EXPECTATION_CAP = 20


@dataclass(frozen=True)
class DirectionTuple:
    """An ordered tuple of vectors of F_2^m, each encoded as an integer below 2^m."""

    m: int
    vectors: tuple[int, ...]

    def __post_init__(self):
        vecs = tuple(int(v) for v in self.vectors)
        for v in vecs:
            if not 0 <= v < 1 << self.m:
                raise PreconditionError(f"direction {v:#x} outside F_2^{self.m}")
        object.__setattr__(self, "vectors", vecs)

    @property
    def k(self) -> int:
        return len(self.vectors)

    def rank(self) -> int:
        return rank(self.vectors)

    @property
    def independent(self) -> bool:
        return self.rank() == self.k

    def span(self) -> list[int]:
        """Sorted list of all elements of the span."""
        elems = {0}
        for v in self.vectors:
            elems |= {e ^ v for e in elems}
        return sorted(elems)

    @classmethod
    def random(cls, m: int, k: int, rng) -> DirectionTuple:
        rng = _as_rng(rng)
        return cls(m, tuple(rng.integers(0, 1 << m, size=k, dtype=np.int64).tolist()))


def _delta(bits: np.ndarray, y: int, m: int) -> np.ndarray:
    return bits[_arange(m) ^ y] ^ bits


def derivative(f: EvalVec, y: int) -> EvalVec:
    if not 0 <= y < f.n:
        raise PreconditionError(f"direction {y:#x} outside F_2^{f.m}")
    return EvalVec(f.m, _delta(f.bits, y, f.m))


def derivative_multi(f: EvalVec, Y: DirectionTuple) -> EvalVec:
    if Y.m != f.m:
        raise PreconditionError("direction tuple and function live on different cubes")
    bits = f.bits
    for y in Y.vectors:
        bits = _delta(bits, y, f.m)
    return EvalVec(f.m, bits)


def subset_sum_derivatives(f: EvalVec, ys: Sequence[int]) -> dict[int, EvalVec]:
    """Derivatives along every nonempty subset sum of ``ys``.

    Keys are subset masks: bit ``i`` set means ``ys[i]`` is in the subset.
    """
    t = len(ys)
    if t > SUBSET_T_CAP:
        raise CapExceededError("t", t, SUBSET_T_CAP)
    sums = _subset_sums(ys)
    return {mask: EvalVec(f.m, _delta(f.bits, int(sums[mask]), f.m)) for mask in range(1, 1 << t)}


def _subset_sums(ys: Sequence[int]) -> np.ndarray:
    sums = np.zeros(1 << len(ys), dtype=np.int64)
    for i, y in enumerate(ys):
        half = 1 << i
        sums[half : 2 * half] = sums[:half] ^ int(y)
    return sums


def subset_derivative_from_first_order(f: EvalVec, ys: Sequence[int], subset: int) -> EvalVec:
    """Rebuild the derivative along sum_{i in subset} y_i from first-order ones.

    Telescoping: with j_1 < ... < j_s the members of the subset,
    the result at x is sum_l (Delta_{y_{j_l}} f)(x + y_{j_1} + ... + y_{j_{l-1}}).
    """
    idx = _arange(f.m)
    out = np.zeros(f.n, dtype=np.uint8)
    shift = 0
    for i, y in enumerate(ys):
        if subset >> i & 1:
            first = _delta(f.bits, int(y), f.m)
            out ^= first[idx ^ shift]
            shift ^= int(y)
    return EvalVec(f.m, out)


# -- approximators -------------------------------------------------------------------


def majority(stack_counts: np.ndarray, t: int) -> np.ndarray:
    """Majority of t votes given the per-point count of ones; ties go to 1."""
    return (2 * stack_counts.astype(np.int64) >= t).astype(np.uint8)


def _ceil(x: float) -> int:
    # guard against log2 rounding just above an integer
    return math.ceil(x - 1e-9)


def low_weight_t(delta: float) -> int:
    if not 0 < delta < 1:
        raise PreconditionError(f"delta={delta} outside (0, 1)")
    return _ceil(17 * math.log2(1 / delta))


def low_bias_t(epsilon: float, delta: float) -> int:
    if not 0 < epsilon <= 1:
        raise PreconditionError(f"epsilon={epsilon} outside (0, 1]")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta={delta} outside (0, 1)")
    return _ceil(2 * math.log2(1 / epsilon) + math.log2(1 / delta) + 1)


@dataclass(frozen=True, eq=False)
class Approximator:
    kind: str  # "low-weight-maj", "low-bias-maj" or "weighted-sign"
    base_f: EvalVec
    directions: tuple[DirectionTuple, ...]
    t: int
    delta_target: float
    approx: EvalVec
    epsilon_target: float | None = None
    alphas: tuple[float, ...] = ()
    attempts: int = 1
    attempt_disagreements: tuple[Fraction, ...] = field(default=())

    @property
    def disagreement(self) -> Fraction:
        return disagreement(self.base_f, self.approx)


def disagreement(f: EvalVec, g: EvalVec) -> Fraction:
    return Fraction(int(np.count_nonzero(f.bits != g.bits)), f.n)


def _maj_of_order(f: EvalVec, tuples: Sequence[DirectionTuple]) -> EvalVec:
    counts = np.zeros(f.n, dtype=np.int64)
    for Y in tuples:
        counts += derivative_multi(f, Y).bits
    return EvalVec(f.m, majority(counts, len(tuples)))


def _maj_of_subset_sums(f: EvalVec, ys: Sequence[int]) -> EvalVec:
    counts = np.zeros(f.n, dtype=np.int64)
    sums = _subset_sums(ys)
    for mask in range(1, len(sums)):
        counts += _delta(f.bits, int(sums[mask]), f.m)
    return EvalVec(f.m, majority(counts, len(sums) - 1))


def _retry(build, rng, retries: int, delta: float):
    """Run ``build(child_rng)`` until the disagreement is <= delta; keep the best."""
    if retries < 1:
        raise PreconditionError("retries must be at least 1")
    children = _as_rng(rng).spawn(retries)
    best = None
    history = []
    for child in children:
        result = build(child)
        d = disagreement(result[0], result[1])
        history.append(d)
        if best is None or d < best[0]:
            best = (d, result)
        if d <= delta:
            break
    return best, tuple(history)


def low_weight_approximator(
    f: EvalVec, k: int, delta: float, rng, retries: int = DEFAULT_RETRIES
) -> tuple[Approximator, Fraction]:
    """Majority of t derivatives of order k-1 along uniformly random directions."""
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    if weight(f) > Fraction(1, 1 << k):
        raise PreconditionError(f"wt(f) = {weight(f)} exceeds 2^-{k}")
    t = low_weight_t(delta)

    def build(child):
        tuples = tuple(DirectionTuple.random(f.m, k - 1, child) for _ in range(t))
        return f, _maj_of_order(f, tuples), tuples

    (d, (_, g, tuples)), history = _retry(build, rng, retries, delta)
    approx = Approximator(
        kind="low-weight-maj",
        base_f=f,
        directions=tuples,
        t=t,
        delta_target=delta,
        approx=g,
        attempts=len(history),
        attempt_disagreements=history,
    )
    return approx, d


def low_bias_approximator(
    f: EvalVec, epsilon: float, delta: float, rng, retries: int = DEFAULT_RETRIES
) -> tuple[Approximator, Fraction]:
    """Majority over the 2^t - 1 derivatives along subset sums of t random directions."""
    if not epsilon > 0:
        raise PreconditionError("epsilon must be positive")
    if bias(f) < Fraction(epsilon):
        raise PreconditionError(f"bias(f) = {bias(f)} is below epsilon = {epsilon}")
    t = low_bias_t(epsilon, delta)
    if t > SUBSET_T_CAP:
        raise CapExceededError("t", t, SUBSET_T_CAP)

    def build(child):
        ys = tuple(child.integers(0, f.n, size=t, dtype=np.int64).tolist())
        return f, _maj_of_subset_sums(f, ys), ys

    (d, (_, g, ys)), history = _retry(build, rng, retries, delta)
    approx = Approximator(
        kind="low-bias-maj",
        base_f=f,
        directions=(DirectionTuple(f.m, ys),),
        t=t,
        delta_target=delta,
        approx=g,
        epsilon_target=epsilon,
        attempts=len(history),
        attempt_disagreements=history,
    )
    return approx, d


# -- weighted sign estimator ---------------------------------------------------------


def alpha_bound(k: int) -> Fraction:
    """1 / prod_{j=1}^{k} (1 - 2^-j)."""
    prod = Fraction(1)
    for j in range(1, k + 1):
        prod *= 1 - Fraction(1, 1 << j)
    return 1 / prod


ALPHA_LIMIT = 3.5


class SignEstimate(NamedTuple):
    alphas: list[Fraction]
    sign: EvalVec
    rejected: list[int]


def alpha_weight(f: EvalVec, Y: DirectionTuple) -> tuple[Fraction | None, EvalVec]:
    """(alpha_Y, Delta_Y f); alpha is None when some intermediate bias vanishes.

    alpha_Y is the reciprocal of bias(f) * bias(D_{y1} f) * ... taken over the
    first k-1 stages of the iterated derivative, the last stage excluded.
    """
    prod = Fraction(1)
    bits = f.bits
    for y in Y.vectors:
        b = bias(EvalVec(f.m, bits))
        if b == 0:
            return None, EvalVec(f.m, bits)
        prod *= b
        bits = _delta(bits, y, f.m)
    return 1 / prod, EvalVec(f.m, bits)


def weighted_sign_estimator(f: EvalVec, k: int, samples: Sequence[DirectionTuple]) -> SignEstimate:
    """Sign of the empirical mean of alpha_Y (-1)^{Delta_Y f(x)} over the samples.

    Samples whose chain of derivatives hits a zero-bias stage are rejected and
    listed by index. A zero mean is read as (-1)^1, matching the majority tie rule.
    """
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    valid_order = weight(f) <= Fraction(1, 1 << k)
    bound = alpha_bound(k)
    total = np.zeros(f.n, dtype=np.float64)
    alphas: list[Fraction] = []
    rejected: list[int] = []
    for i, Y in enumerate(samples):
        if Y.k != k - 1 or Y.m != f.m:
            raise PreconditionError(f"sample {i} has order {Y.k}, expected {k - 1}")
        alpha, d = alpha_weight(f, Y)
        if alpha is None:
            rejected.append(i)
            continue
        if valid_order and not alpha <= bound <= ALPHA_LIMIT:
            raise AssertionError(f"alpha_Y = {alpha} exceeds {bound}")
        alphas.append(alpha)
        a = float(alpha)
        total += np.where(d.bits == 0, a, -a)
    sign = (total <= 0).astype(np.uint8)
    return SignEstimate(alphas, EvalVec(f.m, sign), rejected)


def full_expectation(f: EvalVec, k: int) -> list[Fraction]:
    """E_Y[alpha_Y (-1)^{Delta_Y f(x)}] over all Y in (F_2^m)^{k-1}, per point x."""
    if k < 2:
        raise PreconditionError(f"k must be at least 2, got {k}")
    exponent = f.m * (k - 1)
    if exponent > FULL_EXPECTATION_CAP:
        raise CapExceededError("m*(k-1)", exponent, FULL_EXPECTATION_CAP)
    total = [Fraction(0)] * f.n
    count = 1 << exponent
    for code in range(count):
        vecs = tuple((code >> (f.m * j)) & (f.n - 1) for j in range(k - 1))
        alpha, d = alpha_weight(f, DirectionTuple(f.m, vecs))
        if alpha is None:
            raise PreconditionError(f"zero intermediate bias along {vecs}")
        for x in range(f.n):
            total[x] += -alpha if d.bits[x] else alpha
    return [v / count for v in total]
