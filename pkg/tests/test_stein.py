import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from malign.aligner import Instance, brute_force_score
from malign.mc import DegenerateVariance
from malign.rng import stream
from malign.scoring import SequenceDistribution, lcs_indicator
from malign.stein import (
    IndexOutOfRange,
    PairedSample,
    TooLarge,
    bound_report,
    conditional_T_exact,
    delta_j,
    kappa,
    kappa_normalization,
    stein_exact,
    stein_sampled,
)

from oracles import stein_triple_loop
from strategies import score_models


def binary_pair(seed, n, m=2):
    dist = SequenceDistribution.uniform(2, m)
    return PairedSample.draw(dist, n, stream(seed, 0, 12345))


def test_delta_zero_when_coordinate_unchanged(lcs2):
    p = PairedSample([0, 1, 1, 0], [0, 0, 0, 0], 2, 2)
    assert delta_j(lcs2, p, 1) == 0
    with pytest.raises(IndexOutOfRange):
        delta_j(lcs2, p, 0)
    with pytest.raises(IndexOutOfRange):
        delta_j(lcs2, p, 5)


@given(st.data())
def test_delta_against_brute_force(data):
    model = lcs_indicator(2, 2)
    w = data.draw(st.lists(st.integers(0, 1), min_size=8, max_size=8))
    wp = data.draw(st.lists(st.integers(0, 1), min_size=8, max_size=8))
    j = data.draw(st.integers(1, 8))
    p = PairedSample(w, wp, 4, 2)
    swapped = list(w)
    swapped[j - 1] = wp[j - 1]
    expect = brute_force_score(Instance.of(w[:4], w[4:]), model) - brute_force_score(
        Instance.of(swapped[:4], swapped[4:]), model
    )
    got = delta_j(model, p, j)
    assert got == Fraction(expect, model.scale)
    assert got in (-1, 0, 1)


@given(score_models(m_values=(2, 3)), st.data())
def test_delta_bounded_by_D(model, data):
    n = data.draw(st.integers(1, 4))
    N = model.m * n
    w = data.draw(st.lists(st.integers(0, model.k - 1), min_size=N, max_size=N))
    wp = data.draw(st.lists(st.integers(0, model.k - 1), min_size=N, max_size=N))
    p = PairedSample(w, wp, n, model.m)
    for j in range(1, N + 1):
        assert abs(delta_j(model, p, j)) <= model.to_units(model.d_max)


def test_exact_vanishes_for_identical_copies(lcs2):
    w = [0, 1, 1, 0, 1, 0]
    est = stein_exact(lcs2, PairedSample(w, w, 3, 2))
    assert est.T == 0 and est.T_prime == 0 and est.se == 0


@pytest.mark.parametrize("seed", range(4))
def test_exact_matches_triple_loop_m2(lcs2, seed):
    p = binary_pair(seed, 2)
    T, Tp = stein_triple_loop(lcs2.table, p.W.tolist(), p.W_prime.tolist(), 2, 2)
    est = stein_exact(lcs2, p)
    unit = lcs2.scale**2
    assert (est.T_exact, est.T_prime_exact) == (T / unit, Tp / unit)


def test_exact_matches_triple_loop_m3_weighted():
    from malign.scoring import Alphabet, build_score_model

    model = build_score_model(Alphabet(2), 3, [((0, 0, 0), 1), ((1, 1, 1), Fraction(3, 2)), ((0, 0, 1), Fraction(1, 4))])
    p = PairedSample([0, 1, 1, 0, 0, 1], [1, 1, 0, 0, 1, 0], 2, 3)
    T, Tp = stein_triple_loop(model.table, p.W.tolist(), p.W_prime.tolist(), 3, 2)
    est = stein_exact(model, p)
    unit = model.scale**2
    assert (est.T_exact, est.T_prime_exact) == (T / unit, Tp / unit)
    assert est.T_exact != 0


def test_T_prime_dominates_when_deltas_nonnegative(lcs2):
    checked = 0
    for seed in range(30):
        p = binary_pair(seed, 3)
        d = [delta_j(lcs2, p, j) for j in range(1, 7)]
        if all(x >= 0 for x in d):
            est = stein_exact(lcs2, p)
            assert est.T_prime_exact >= est.T_exact
            checked += 1
    assert checked > 0


def test_exact_is_invariant_to_subset_order(lcs2):
    # reversing coordinates permutes the subset lattice; with the words reversed as well, f is unchanged
    p = binary_pair(9, 3)
    rev = PairedSample(
        np.concatenate([p.W[:3][::-1], p.W[3:][::-1]]), np.concatenate([p.W_prime[:3][::-1], p.W_prime[3:][::-1]]), 3, 2
    )
    assert stein_exact(lcs2, p).T_exact == stein_exact(lcs2, rev).T_exact


def test_exact_too_large(lcs2):
    with pytest.raises(TooLarge):
        stein_exact(lcs2, binary_pair(0, 8))


@pytest.mark.parametrize("N", range(1, 15))
def test_kappa_normalization(N):
    assert abs(kappa_normalization(N) - N) <= 1e-12
    assert sum(math.comb(N, a) * kappa(N, a) * (N - a) for a in range(N)) == N


def test_sampled_zero_for_identical_copies(lcs2):
    w = [0, 1, 1, 0]
    est = stein_sampled(lcs2, PairedSample(w, w, 2, 2), 500, stream(1, 0))
    assert est.T == 0 and est.se == 0


def test_sampled_unbiased_over_seeded_runs(lcs2):
    p = binary_pair(21, 5)
    exact = stein_exact(lcs2, p)
    runs = [stein_sampled(lcs2, p, 2000, stream(500, i)) for i in range(200)]
    mean_t = np.mean([r.T for r in runs])
    pooled = math.sqrt(sum(r.se**2 for r in runs)) / len(runs)
    assert abs(mean_t - exact.T) < 3 * pooled
    mean_p = np.mean([r.T_prime for r in runs])
    pooled_p = math.sqrt(sum(r.se_prime**2 for r in runs)) / len(runs)
    assert abs(mean_p - exact.T_prime) < 3 * pooled_p


def test_sampled_se_scales_with_samples(lcs2):
    p = binary_pair(5, 6)
    a = stein_sampled(lcs2, p, 40_000, stream(1, 0))
    b = stein_sampled(lcs2, p, 160_000, stream(1, 1))
    assert b.se == pytest.approx(a.se / 2, rel=0.2)


def test_conditional_expectation_is_average_over_copies(lcs2, uniform2):
    # E(T | W) = mean of T(W, W') over all 2^N equally likely copies W'
    w = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    total = Fraction(0)
    for code in range(1 << 8):
        wp = [(code >> i) & 1 for i in range(8)]
        total += stein_exact(lcs2, PairedSample(w, wp, 4, 2)).T_exact
    t, _ = conditional_T_exact(lcs2, uniform2, 4, w)
    assert t == pytest.approx(float(total / 256), abs=1e-12)


def test_bound_report_sampled_vs_exact_inner(lcs2, uniform2):
    kw = dict(seed=8, sigma_reps=1000)
    exact = bound_report(lcs2, uniform2, 6, 40, 0, inner="exact", **kw)
    samp = bound_report(lcs2, uniform2, 6, 40, 400, **kw)
    assert abs(samp.term_varT - exact.term_varT) < 3 * samp.term_varT_se
    assert abs(samp.term_varTprime - exact.term_varTprime) < 3 * samp.term_varTprime_se
    assert samp.term_sixth == exact.term_sixth and samp.term_third == exact.term_third
    for r in (exact, samp):
        parts = [r.term_varT, r.term_varTprime, r.term_sixth, r.term_third]
        assert min(parts) >= 0
        assert r.total == pytest.approx(sum(parts))


def test_bound_report_degenerate(lcs2):
    point = SequenceDistribution(np.array([[1.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(DegenerateVariance):
        bound_report(lcs2, point, 4, 30, 10, sigma_reps=50)
    with pytest.raises(ValueError):
        bound_report(lcs2, SequenceDistribution.uniform(2, 2), 4, 10, 10)


def test_bound_total_dominates_observed_distance(lcs2, uniform2):
    from malign.mc import McConfig, clt_row

    rep = bound_report(lcs2, uniform2, 6, 40, 200, seed=12, sigma_reps=2000)
    row = clt_row(lcs2, uniform2, 6, McConfig(seed=12, replicates=2000))
    assert rep.total + 3 * rep.total_se >= row.dk_hat - row.dk_band
