"""Exact binomial sums, binary entropy, and the combinatorial inequalities
used by the weight-distribution bounds.

All logarithms are base 2 unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from scipy.optimize import bisect

from .errors import PreconditionError

# Above this m, binomial sums are evaluated in log space only.
EXACT_LOG2_LIMIT = 4096


@lru_cache(maxsize=1 << 16)
def binom_leq(m: int, r: int) -> int:
    """Return sum_{i=0}^{min(r,m)} C(m, i) exactly.

    ``r > m`` clamps to ``m``; a negative ``r`` gives the empty sum 0.
    """
    if m < 0:
        raise PreconditionError(f"m must be non-negative, got {m}")
    if r < 0:
        return 0
    r = min(r, m)
    total = 0
    term = 1
    for i in range(r + 1):
        total += term
        term = term * (m - i) // (i + 1)
    return total


def log2_int(x: int) -> float:
    """log2 of a positive integer of any size, without float overflow."""
    if x <= 0:
        raise PreconditionError(f"log2 of non-positive integer {x}")
    b = x.bit_length()
    if b <= 1000:
        return math.log2(x)
    shift = b - 64
    return shift + math.log2(x >> shift)


def _log2_factorial_stirling(n: int) -> tuple[float, float]:
    """Stirling series for log2(n!) with its truncation error bound."""
    if n < 256:
        return log2_int(math.factorial(n)), 1e-13
    ln = n * math.log(n) - n + 0.5 * math.log(2 * math.pi * n) + 1.0 / (12 * n)
    err = 1.0 / (360 * n**3)
    return ln / math.log(2), err / math.log(2)


def log2_binom_leq_with_error(m: int, r: int) -> tuple[float, float]:
    """log2 binom(m, <=r) and an absolute error bound on the returned value.

    Exact (to float rounding) for ``m <= EXACT_LOG2_LIMIT``; above that the
    terms are summed in log space from the Stirling series, whose truncation
    error is tracked term by term.
    """
    if r < 0:
        return -math.inf, 0.0
    r = min(r, m)
    if m <= EXACT_LOG2_LIMIT:
        return log2_int(binom_leq(m, r)), 1e-12
    lf_m, e_m = _log2_factorial_stirling(m)
    logs = []
    worst = 0.0
    for i in range(r + 1):
        lf_i, e_i = _log2_factorial_stirling(i)
        lf_j, e_j = _log2_factorial_stirling(m - i)
        logs.append(lf_m - lf_i - lf_j)
        worst = max(worst, e_m + e_i + e_j)
    top = max(logs)
    acc = math.fsum(2.0 ** (v - top) for v in logs)
    # float summation of up to r+1 terms adds at most (r+1) ulp in relative terms
    rounding = (r + 1) * 2.0**-52 / math.log(2)
    return top + math.log2(acc), worst + rounding


def log2_binom_leq(m: int, r: int) -> float:
    return log2_binom_leq_with_error(m, r)[0]


def binary_entropy(p: float) -> float:
    """Binary entropy H(p) in bits, with H(0) = H(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"entropy argument {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def entropy_taylor(xi: float, terms: int) -> float:
    """Partial sum of the expansion of H((1 - xi)/2) around 1/2.

    Returns ``1 - (1/(2 ln 2)) * sum_{k=1}^{terms} xi^(2k) / (k(2k-1))``.
    """
    if not 0.0 <= xi <= 1.0:
        raise PreconditionError(f"xi={xi} outside [0, 1]")
    if terms < 1:
        raise PreconditionError("terms must be positive")
    x2 = xi * xi
    power = 1.0
    s = []
    for k in range(1, terms + 1):
        power *= x2
        s.append(power / (k * (2 * k - 1)))
    return 1.0 - math.fsum(s) / (2.0 * math.log(2))


def xi_from_capacity_gap(c: float, rate: float) -> float:
    """Solve H((1 - xi)/2) = 1 - c*rate for xi in [0, 1].

    H((1 - xi)/2) is decreasing in xi, so the root is bracketed by [0, 1].
    """
    target = 1.0 - c * rate
    if c <= 0 or rate <= 0:
        raise PreconditionError("c and rate must be positive")
    if target < 0:
        raise PreconditionError(f"c*R = {c * rate} > 1: no crossover probability exists")
    if target >= 1.0:
        return 0.0
    if target == 0.0:
        return 1.0

    def gap(x: float) -> float:
        return binary_entropy((1.0 - x) / 2.0) - target

    xi = bisect(gap, 0.0, 1.0, xtol=1e-16, rtol=4 * 2.0**-52, maxiter=200)
    if abs(gap(xi)) > 1e-12:
        raise ArithmeticError(f"bisection did not reach 1e-12 on H (residual {gap(xi)})")
    return xi


# -- tail inequalities, evaluated as formulas --------------------------------


def hoeffding_bound(eps: float, ranges: list[float]) -> float:
    """Pr[mean - mu >= eps] <= exp(-2 eps^2 t^2 / sum (b_i - a_i)^2)."""
    t = len(ranges)
    return math.exp(-2.0 * eps**2 * t**2 / sum(w * w for w in ranges))


def chernoff_lower_tail(p: float, n: int, eps: float) -> float:
    """Pr[sum X_i <= (1 - eps) p n] <= exp(-p n eps^2 / 2)."""
    return math.exp(-p * n * eps**2 / 2.0)


def mcdiarmid_bound(eps: float, n: int, lipschitz: float) -> float:
    """Pr[|F - E F| >= eps] <= exp(-2 eps^2 / (n L^2)) for L-Lipschitz F."""
    return math.exp(-2.0 * eps**2 / (n * lipschitz**2))


# -- Hamming-ball estimates --------------------------------------------------


@dataclass(frozen=True)
class EntropyBall:
    n: int
    k: int
    log2_lower: float  # n H(k/n) - slack
    log2_binom: float  # log2 C(n, k)
    log2_ball: float  # log2 binom(n, <=k)
    log2_upper: float  # n H(k/n)

    @property
    def measured_slack(self) -> float:
        """How far log2 C(n, k) sits below n H(k/n)."""
        return self.log2_upper - self.log2_binom


def entropy_slack_allowance(n: int) -> float:
    # surrogate for the unspecified O(log n) term
    return 2.0 * math.log2(n) + 2.0


def entropy_ball(n: int, k: int) -> EntropyBall:
    if not (1 <= k and 2 * k <= n):
        raise PreconditionError(f"need 1 <= k <= n/2, got n={n}, k={k}")
    upper = n * binary_entropy(k / n)
    return EntropyBall(
        n=n,
        k=k,
        log2_lower=upper - entropy_slack_allowance(n),
        log2_binom=log2_int(math.comb(n, k)),
        log2_ball=log2_int(binom_leq(n, k)),
        log2_upper=upper,
    )


# -- binomial ratio inequalities ----------------------------------------------


def lemma_A1_ratio(m: int, r: int, ell: int) -> tuple[int, Fraction]:
    """binom(m - ell, <= r - ell) against (r/m)^ell * binom(m, <= r)."""
    if not 0 <= ell <= r <= m or m == 0:
        raise PreconditionError(f"need 0 <= ell <= r <= m, m > 0; got {(m, r, ell)}")
    gamma = Fraction(r, m)
    return binom_leq(m - ell, r - ell), gamma**ell * binom_leq(m, r)


def lemma_A2_ratio(m: int, r: int, t: int) -> tuple[int, Fraction]:
    """binom(m - t, <= r) against (1 - gamma~)^t * binom(m, <= r).

    gamma~ = (r/m)(1 + t/(m - t)) simplifies to r/(m - t), so the right side
    is an exact rational.
    """
    if not (t >= 0 and r >= 0 and t + r <= m and t < m):
        raise PreconditionError(f"need t + r <= m and t < m; got {(m, r, t)}")
    gamma_tilde = Fraction(r, m - t)
    return binom_leq(m - t, r), (1 - gamma_tilde) ** t * binom_leq(m, r)


@dataclass(frozen=True)
class SParams:
    gamma: float
    ell: int
    m: int
    s: int
    gamma_tilde: float
    c_gamma: float
    d_gamma: float

    @property
    def t(self) -> int:
        return 2 * self.ell + self.s + 1


def c_gamma(gamma: float) -> float:
    return 1.0 / (1.0 - gamma)


def d_gamma(gamma: float) -> float:
    return (2.0 - gamma) / (1.0 - gamma) ** 2


def gamma_tilde(gamma: float, t: int, m: int) -> float:
    return gamma * (1.0 + t / (m - t))


def s_inequality(gamma: float, ell: int, m: int, s: int) -> tuple[float, float]:
    """Both sides of 17(2s+4) gamma^(s-2) <= (1/2)(1 - gamma~)^(2 ell + s + 1)."""
    t = 2 * ell + s + 1
    if t >= m:
        raise PreconditionError(f"t = 2*ell + s + 1 = {t} must be below m = {m}")
    lhs = 17.0 * (2 * s + 4) * gamma ** (s - 2)
    rhs = 0.5 * (1.0 - gamma_tilde(gamma, t, m)) ** t
    return lhs, rhs


def smallest_s(gamma: float, ell: int, m: int) -> SParams:
    """Minimal s >= 1 satisfying the s-inequality, by ascending scan.

    gamma~ depends on s through t = 2*ell + s + 1 and is recomputed for every
    candidate.
    """
    if not 0.0 < gamma < 0.5:
        raise PreconditionError(f"gamma={gamma} outside (0, 1/2)")
    if ell < 1 or m < 1:
        raise PreconditionError("ell and m must be positive")
    for s in range(1, m + 1):
        t = 2 * ell + s + 1
        if t >= m:
            break
        lhs, rhs = s_inequality(gamma, ell, m, s)
        if lhs <= rhs:
            gt = gamma_tilde(gamma, t, m)
            if gt >= 0.5:
                raise PreconditionError(f"gamma~={gt} >= 1/2 at s={s}")
            return SParams(gamma, ell, m, s, gt, c_gamma(gamma), d_gamma(gamma))
    raise PreconditionError(f"no s <= m satisfies the inequality for gamma={gamma}, ell={ell}, m={m}")
