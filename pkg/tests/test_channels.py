import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmlab.channels import (
    BEC,
    BSC,
    ERASED,
    ChannelSpec,
    ErasurePattern,
    bec_decode,
    bec_failure_exact,
    bec_recoverable,
    bec_recoverable_oracle,
    bec_transmit,
    bsc_bad_pairs_exact,
    bsc_transmit,
    capacity_sweep,
    certified_threshold,
    check_bec_constraints,
    check_bsc_constraints,
    estimate_lambda,
    ml_decode,
    mu_term,
    sweep_csv_rows,
    union_bound_bec,
    union_bound_bec_hypergeometric,
    union_bound_bsc,
)
from rmlab.combinatorics import binary_entropy
from rmlab.errors import CapExceededError, InconsistentWordError, PreconditionError
from rmlab.gf2poly import EvalVec
from rmlab.rmcode import CodeParams, encode, encode_index, enumerate_codewords
from rmlab.weightdist import brute_force_profile


def consistent_codewords(received, params):
    keep = received != ERASED
    return [cw for _, cw in enumerate_codewords(params) if np.array_equal(cw.bits[keep], received[keep])]


# -- channel specs


def test_channel_spec_derivation():
    bec = ChannelSpec.from_capacity(BEC, 2.0, 0.25)
    assert bec.p == 0.5 and bec.capacity == 0.5
    bsc = ChannelSpec.from_capacity(BSC, 1.0, 0.5)
    assert binary_entropy(bsc.p) == pytest.approx(0.5, abs=1e-12)
    assert bsc.capacity == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(PreconditionError):
        ChannelSpec(BEC, 0.3, c=2.0, rate=0.25)
    with pytest.raises(PreconditionError):
        ChannelSpec.from_capacity(BSC, 3.0, 0.5)
    with pytest.raises(PreconditionError):
        ChannelSpec("awgn", 0.1)


# -- erasures


def test_bec_transmit_extremes():
    cw = encode_index(CodeParams(4, 1), 5)
    received, pattern = bec_transmit(cw, 0.0, np.random.default_rng(0))
    assert pattern.n_erased == 0 and received.tolist() == cw.bits.tolist()
    received, pattern = bec_transmit(cw, 1.0, np.random.default_rng(0))
    assert pattern.n_erased == 16 and (received == ERASED).all()


def test_bec_transmit_rate():
    rng = np.random.default_rng(1)
    cw = EvalVec.zeros(10)
    fractions = [bec_transmit(cw, 0.5, rng)[1].n_erased / 1024 for _ in range(10_000)]
    assert abs(np.mean(fractions) - 0.5) <= 0.02


def test_recoverable_examples():
    p31 = CodeParams(3, 1)
    assert bec_recoverable(ErasurePattern.from_positions(3, []), p31)
    assert not bec_recoverable(ErasurePattern.from_positions(3, range(8)), p31)
    p21 = CodeParams(2, 1)
    for a in range(4):
        pat = ErasurePattern.from_positions(2, [a])
        assert bec_recoverable(pat, p21) and bec_recoverable_oracle(pat, p21)


@pytest.mark.parametrize("m,r", [(3, 1), (3, 2), (2, 1), (2, 2), (3, 3)])
def test_rank_test_matches_oracle_small(m, r):
    params = CodeParams(m, r)
    for value in range(1 << (1 << m)):
        pat = ErasurePattern.from_int(m, value)
        assert bec_recoverable(pat, params) == bec_recoverable_oracle(pat, params)


@pytest.mark.slow
def test_rank_test_matches_oracle_rm41():
    params = CodeParams(4, 1)
    for value in range(1 << 16):
        pat = ErasurePattern.from_int(4, value)
        assert bec_recoverable(pat, params) == bec_recoverable_oracle(pat, params)


def test_oracle_cap():
    with pytest.raises(CapExceededError):
        bec_recoverable_oracle(ErasurePattern.from_positions(10, []), CodeParams(10, 2))


@pytest.mark.parametrize("m,r", [(4, 1), (5, 2), (6, 3), (8, 2), (12, 1)])
def test_bec_decode_round_trip(m, r):
    params = CodeParams(m, r)
    rng = np.random.default_rng(m * 17 + r)
    for _ in range(1000 if m <= 8 else 200):
        msg = rng.integers(0, 2, params.dim, dtype=np.uint8)
        cw = encode(params, msg)
        received, pattern = bec_transmit(cw, float(rng.uniform(0, 0.8)), rng)
        decoded = bec_decode(received, params)
        if bec_recoverable(pattern, params):
            assert decoded == cw
        else:
            assert decoded is None


def test_bec_decode_ambiguous_has_several_solutions():
    params = CodeParams(3, 1)
    cw = encode_index(params, 6)
    received = cw.bits.astype(np.int8)
    received[[0, 1, 2, 3]] = ERASED
    assert bec_decode(received, params) is None
    assert len(consistent_codewords(received, params)) >= 2


def test_bec_decode_identity_and_inconsistency():
    params = CodeParams(4, 2)
    cw = encode_index(params, 300)
    assert bec_decode(cw.bits.astype(np.int8), params) == cw
    bad = cw.bits.astype(np.int8)
    bad[0] ^= 1
    with pytest.raises(InconsistentWordError):
        bec_decode(bad, params)


@given(st.integers(0, 15), st.integers(0, 255))
def test_decoded_agrees_off_erasures(index, erase_mask):
    params = CodeParams(3, 1)
    cw = encode_index(params, index)
    received = cw.bits.astype(np.int8)
    erased = [(erase_mask >> a) & 1 for a in range(8)]
    received[np.array(erased, dtype=bool)] = ERASED
    decoded = bec_decode(received, params)
    candidates = consistent_codewords(received, params)
    if decoded is None:
        assert len(candidates) >= 2
    else:
        assert candidates == [decoded]


# -- symmetric channel


def test_bsc_transmit_extremes_and_rate():
    cw = encode_index(CodeParams(5, 2), 77)
    assert bsc_transmit(cw, 0.0, np.random.default_rng(0)) == cw
    assert bsc_transmit(cw, 1.0, np.random.default_rng(0)) == cw ^ EvalVec.ones(5)
    rng = np.random.default_rng(3)
    flips = [(bsc_transmit(EvalVec.zeros(8), 0.1, rng)).abs_weight() for _ in range(2000)]
    sigma = math.sqrt(256 * 0.1 * 0.9 / 2000)
    assert abs(np.mean(flips) - 25.6) <= 3 * sigma


def test_ml_decode_examples():
    params = CodeParams(3, 1)
    for _, cw in enumerate_codewords(params):
        assert ml_decode(cw, params) == (cw, False)
        for a in range(8):
            flipped = EvalVec(3, cw.bits ^ (np.arange(8) == a))
            decoded, tie = ml_decode(flipped, params)
            assert decoded == cw and not tie
    _, tie = ml_decode(EvalVec(1, [0, 1]), CodeParams(1, 1))
    assert not tie
    _, tie = ml_decode(EvalVec(1, [0, 1]), CodeParams(1, 0))
    assert tie


def test_ml_decode_matches_brute_force_distance():
    params = CodeParams(4, 2)
    rng = np.random.default_rng(4)
    words = [cw for _, cw in enumerate_codewords(params)]
    for _ in range(50):
        z = EvalVec(4, rng.integers(0, 2, 16, dtype=np.uint8))
        dists = [int(np.count_nonzero(w.bits != z.bits)) for w in words]
        decoded, tie = ml_decode(z, params)
        assert int(np.count_nonzero(decoded.bits != z.bits)) == min(dists)
        assert tie == (dists.count(min(dists)) > 1)


def test_ml_cap():
    with pytest.raises(CapExceededError, match="dim"):
        ml_decode(EvalVec.zeros(10), CodeParams(10, 2))


# -- Monte Carlo


def test_lambda_zero_noise():
    for kind in (BEC, BSC):
        params = CodeParams(6, 1) if kind == BSC else CodeParams(10, 1)
        stats = estimate_lambda(params, ChannelSpec(kind, 0.0), 10, seed=1)
        assert stats.failures == 0 and stats.failure_rate == 0.0


def test_lambda_reproducible_and_thread_independent():
    params = CodeParams(6, 2)
    ch = ChannelSpec(BEC, 0.5)
    a = estimate_lambda(params, ch, 100, seed=9)
    b = estimate_lambda(params, ch, 100, seed=9, threads=3)
    assert a == b


@pytest.mark.parametrize("kind,params,p", [(BEC, CodeParams(6, 2), 0.55), (BSC, CodeParams(4, 1), 0.12)])
def test_lambda_codeword_independent(kind, params, p):
    ch = ChannelSpec(kind, p)
    zero = estimate_lambda(params, ch, 600, seed=2, mode="zero")
    rand = estimate_lambda(params, ch, 600, seed=3, mode="random")
    spread = math.hypot(zero.stderr, rand.stderr)
    assert abs(zero.failure_rate - rand.failure_rate) <= 2 * max(spread, 1e-3)


def test_bec_transition_rm10_1():
    params = CodeParams(10, 1)
    rate = float(params.rate)
    low = estimate_lambda(params, ChannelSpec(BEC, 1 - 8 * rate), 200, seed=7)
    high = estimate_lambda(params, ChannelSpec(BEC, 1 - rate / 2), 200, seed=7)
    assert low.failure_rate <= 0.05 and high.failure_rate >= 0.95


def test_sweep_rows():
    params = CodeParams(6, 1)
    rows = capacity_sweep(params, BEC, [8, 1], 50, seed=4)
    assert [r.c for r in rows] == [8.0, 1.0]
    assert rows[0].p == pytest.approx(1 - 8 * 7 / 64)
    assert rows[0].stats.failure_rate <= rows[1].stats.failure_rate
    lines = sweep_csv_rows(rows)
    assert lines[0].startswith("8.0,0.125,50,")


# -- union bounds


def test_union_bound_bec_examples():
    assert union_bound_bec(CodeParams(1, 1), 2) == Fraction(1, 2)
    params = CodeParams(3, 2)
    prof = brute_force_profile(params)
    expected = sum(c * (1 - Fraction(w, 8)) ** 16 for w, c in prof.counts.items() if w)
    assert union_bound_bec(params, 16) == expected
    assert union_bound_bec(CodeParams(1, 1), 40) == 2 * Fraction(1, 2) ** 40


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_union_bound_bec_dominates_exact(r):
    params = CodeParams(3, r)
    for s in range(0, 9):
        exact = bec_failure_exact(params, s)
        assert union_bound_bec_hypergeometric(params, s) >= exact
        assert union_bound_bec(params, s) >= exact


def test_mu_term_exposes_constant():
    assert mu_term(20, 0.1, 2.0, const=0.0) == 1.0
    assert mu_term(20, 0.1, 2.0, const=2.0) < mu_term(20, 0.1, 2.0, const=1.0) < 1.0


def test_union_bound_bsc_basics():
    params = CodeParams(3, 1)
    assert union_bound_bsc(params, 0) == 0
    assert union_bound_bsc(params, Fraction(1, 8)) == 0
    assert bsc_bad_pairs_exact(params, Fraction(1, 8)).pairs == 0
    with pytest.raises(PreconditionError):
        union_bound_bsc(params, Fraction(1, 3))


@pytest.mark.parametrize("r", [0, 1, 2])
@pytest.mark.parametrize("K", range(0, 5))
def test_union_bound_bsc_dominates_bad_pairs(r, K):
    params = CodeParams(3, r)
    p_tilde = Fraction(K, 8)
    exact = bsc_bad_pairs_exact(params, p_tilde)
    bound = union_bound_bsc(params, p_tilde)
    assert bound * math.comb(8, K) >= exact.pairs
    assert bound >= exact.failure_fraction


def test_union_bound_bsc_hand_count():
    # RM(3,1), K = 2: the weight-4 words need v inside the word's support
    params = CodeParams(3, 1)
    exact = bsc_bad_pairs_exact(params, Fraction(2, 8))
    assert exact.pairs == 14 * math.comb(4, 2)
    assert union_bound_bsc(params, Fraction(2, 8)) == Fraction(14 * 16 * 1, 28)


# -- capacity constraints


def test_constraint_checkers_at_quoted_thresholds():
    ok, margin = check_bec_constraints(1 / 50)
    assert ok and margin > 0
    ok, margin = check_bsc_constraints(1 / 70)
    assert ok and margin > 0
    assert not check_bec_constraints(0.4).ok
    assert not check_bsc_constraints(0.1).ok


def test_bsc_margin_grows_as_gamma_shrinks():
    assert check_bsc_constraints(1 / 200).worst_margin > check_bsc_constraints(1 / 70).worst_margin


@pytest.mark.parametrize("check", [check_bec_constraints, check_bsc_constraints])
def test_constraint_margins_monotone_near_threshold(check):
    grid = np.linspace(0.005, 0.03, 26)
    margins = [check(float(g)).worst_margin for g in grid]
    assert all(a >= b for a, b in zip(margins, margins[1:]))


@pytest.mark.parametrize("check,gamma", [(check_bec_constraints, 1 / 50), (check_bsc_constraints, 1 / 70)])
def test_scan_extension_is_stable(check, gamma):
    short, long = check(gamma, terms=500), check(gamma, terms=2000)
    assert short.ok == long.ok
    assert abs(short.worst_margin - long.worst_margin) <= 1e-12
    assert all(f.tail_ok for f in long.families)


def test_certified_thresholds_bracket_quoted_values():
    assert 1 / 50 < certified_threshold(BEC) < 0.4
    assert 1 / 70 < certified_threshold(BSC) < 0.1
