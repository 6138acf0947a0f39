import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmlab.combinatorics import (
    binary_entropy,
    binom_leq,
    entropy_ball,
    entropy_taylor,
    hoeffding_bound,
    lemma_A1_ratio,
    lemma_A2_ratio,
    log2_binom_leq,
    log2_binom_leq_with_error,
    s_inequality,
    smallest_s,
    xi_from_capacity_gap,
)
from rmlab.errors import PreconditionError


def naive_binom_leq(m, r):
    return sum(math.comb(m, i) for i in range(0, min(r, m) + 1)) if r >= 0 else 0


@pytest.mark.parametrize(
    "m,r,expected",
    [(4, 2, 11), (10, 10, 1024), (9, 4, 256), (5, 0, 1), (3, -1, 0), (3, 7, 8)],
)
def test_binom_leq_values(m, r, expected):
    assert binom_leq(m, r) == expected


@given(st.integers(0, 200), st.integers(-2, 210))
def test_binom_leq_matches_direct_sum(m, r):
    assert binom_leq(m, r) == naive_binom_leq(m, r)


def test_binom_leq_rejects_negative_m():
    with pytest.raises(PreconditionError):
        binom_leq(-1, 0)


def test_log2_binom_leq_exact_and_stirling_agree():
    for m, r in [(100, 30), (4096, 1000), (5000, 1200), (10**6, 10**5)]:
        value, err = log2_binom_leq_with_error(m, r)
        if m <= 4096:
            assert err <= 1e-12
            assert value == pytest.approx(math.log2(naive_binom_leq(m, r)), rel=1e-12)
        else:
            assert err < 1e-6
    exact = math.log2(naive_binom_leq(5000, 1200))
    assert log2_binom_leq(5000, 1200) == pytest.approx(exact, abs=0.01)


@pytest.mark.parametrize("p,expected", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.25, 0.8112781244591328)])
def test_binary_entropy_values(p, expected):
    assert binary_entropy(p) == pytest.approx(expected, abs=1e-12)


def test_binary_entropy_domain():
    with pytest.raises(PreconditionError):
        binary_entropy(1.5)


def test_entropy_taylor_values():
    assert entropy_taylor(0.0, 7) == 1.0
    assert abs(entropy_taylor(1.0, 200)) < 5e-3
    assert abs(entropy_taylor(0.5, 50) - binary_entropy(0.25)) <= 1e-10


@given(st.floats(0, 1), st.integers(1, 60))
def test_entropy_taylor_monotone_and_bounded_below(xi, k):
    a, b = entropy_taylor(xi, k), entropy_taylor(xi, k + 1)
    assert b <= a
    assert b >= binary_entropy((1 - xi) / 2) - 1e-12


@pytest.mark.parametrize(
    "c,rate,expected",
    [(1.0, 1.0, 1.0), (1.0, 0.5, 0.7799442711232809)],
)
def test_xi_from_capacity_gap_values(c, rate, expected):
    assert xi_from_capacity_gap(c, rate) == pytest.approx(expected, abs=1e-10)


def test_xi_small_gap_goes_to_zero():
    assert xi_from_capacity_gap(1.0, 1e-9) < 1e-3


@given(st.floats(1.0, 50.0), st.floats(1e-4, 1.0))
def test_xi_inverts_entropy(c, rate):
    if c * rate > 1:
        with pytest.raises(PreconditionError):
            xi_from_capacity_gap(c, rate)
        return
    xi = xi_from_capacity_gap(c, rate)
    assert 0 <= xi <= 1
    assert abs(binary_entropy((1 - xi) / 2) - (1 - c * rate)) <= 1e-12


def test_hoeffding_bound_shape():
    assert hoeffding_bound(0.0, [1.0] * 4) == 1.0
    # mean of 10 unit-range variables
    assert hoeffding_bound(0.5, [1.0] * 10) == pytest.approx(math.exp(-5.0))


@given(st.integers(1, 40).flatmap(lambda m: st.tuples(st.just(m), st.integers(1, m), st.integers(0, m))))
def test_difference_identity(mtr):
    m, t, r = mtr
    lhs = sum(binom_leq(m - j, r - 1) for j in range(1, t + 1))
    assert lhs == binom_leq(m, r) - binom_leq(m - t, r)


def test_difference_identity_full_grid():
    for m in range(1, 41):
        for r in range(m + 1):
            running = 0
            for t in range(1, m + 1):
                running += binom_leq(m - t, r - 1)
                assert running == binom_leq(m, r) - binom_leq(m - t, r)


@given(st.integers(2, 64).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n // 2))))
def test_entropy_sandwich(nk):
    n, k = nk
    ball = entropy_ball(n, k)
    assert math.comb(n, k) <= binom_leq(n, k)
    assert ball.log2_ball <= ball.log2_upper + 1e-9
    assert ball.log2_binom >= ball.log2_lower
    assert 0 <= ball.measured_slack <= 2 * math.log2(n) + 2


def test_lemma_A1_examples():
    lhs, rhs = lemma_A1_ratio(10, 5, 5)
    assert lhs == 1 and rhs == Fraction(638, 32)
    lhs, rhs = lemma_A1_ratio(20, 4, 2)
    assert lhs == 172 and rhs == Fraction(1, 25) * 6196
    lhs, rhs = lemma_A1_ratio(12, 3, 0)
    assert lhs == rhs == binom_leq(12, 3)


def test_lemma_A2_examples():
    lhs, rhs = lemma_A2_ratio(20, 5, 3)
    assert lhs == naive_binom_leq(17, 5) == 9402
    assert rhs == (1 - Fraction(5, 17)) ** 3 * binom_leq(20, 5)
    assert lhs >= rhs
    lhs, rhs = lemma_A2_ratio(12, 3, 2)
    assert lhs == binom_leq(10, 3) >= rhs
    lhs, rhs = lemma_A2_ratio(12, 3, 0)
    assert lhs == rhs


def test_lemmas_hold_on_full_grid():
    for m in range(1, 41):
        for r in range(m + 1):
            for ell in range(r + 1):
                lhs, rhs = lemma_A1_ratio(m, r, ell)
                assert lhs <= rhs
            for t in range(0, min(m - r, m - 1) + 1):
                lhs, rhs = lemma_A2_ratio(m, r, t)
                assert lhs >= rhs


def test_smallest_s_frozen():
    sp = smallest_s(0.1, 1, 10**6)
    assert sp.s == 6 and sp.t == 9
    lhs5, rhs5 = s_inequality(0.1, 1, 10**6, 5)
    lhs6, rhs6 = s_inequality(0.1, 1, 10**6, 6)
    assert lhs5 == pytest.approx(0.238, abs=1e-3) and rhs5 == pytest.approx(0.215, abs=1e-3)
    assert lhs6 == pytest.approx(0.0272, abs=1e-4) and rhs6 == pytest.approx(0.194, abs=1e-3)
    assert smallest_s(0.25, 4, 10**6).s == 12


@given(st.floats(0.005, 0.3), st.integers(1, 6), st.sampled_from([200, 10**4, 10**6]))
def test_smallest_s_is_minimal(gamma, ell, m):
    try:
        sp = smallest_s(gamma, ell, m)
    except PreconditionError:
        return
    lhs, rhs = s_inequality(gamma, ell, m, sp.s)
    assert lhs <= rhs
    if sp.s > 1:
        lhs, rhs = s_inequality(gamma, ell, m, sp.s - 1)
        assert lhs > rhs
    assert sp.gamma_tilde < 0.5


def test_smallest_s_non_increasing_as_gamma_shrinks():
    values = [smallest_s(g, 1, 10**6).s for g in (0.2, 0.1, 0.05, 0.01, 0.001)]
    assert values == sorted(values, reverse=True)
