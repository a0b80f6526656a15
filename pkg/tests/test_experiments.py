import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from malign.aligner import Instance, align_exact
from malign.experiments import (
    BmConfig,
    NonSquare,
    NotPermutation,
    PermConfig,
    bm_field,
    bm_recursion,
    bm_study,
    composition,
    lis_oracle,
    perm_pair,
    perm_score_L,
    perm_study,
    perm_window_model,
)
from malign.rng import stream
from malign.scoring import lcs_indicator

from oracles import lis_brute


def test_bm_trivial_fields():
    assert bm_recursion(np.zeros((5, 5))) == 0
    assert bm_recursion([[1]]) == 1
    assert bm_recursion(np.eye(4)) == 4
    with pytest.raises(NonSquare):
        bm_recursion(np.zeros((2, 3)))


@given(st.integers(1, 30), st.integers(2, 4), st.integers(0, 2**32))
def test_dependent_field_matches_aligner(n, k, seed):
    rng = stream(seed, 0)
    x = rng.integers(0, k, n)
    y = rng.integers(0, k, n)
    field = (x[:, None] == y[None, :]).astype(np.int64)
    assert bm_recursion(field) == align_exact(Instance.of(x, y), lcs_indicator(k, 2)).value


def test_bm_modes():
    dep = bm_field(BmConfig(50, "dependent", 0.25), stream(0, 0))
    assert dep.shape == (50, 50) and set(np.unique(dep)) <= {0, 1}
    assert BmConfig(10, p=0.25).alphabet == 4
    study = bm_study(BmConfig(40, "independent", 0.5, seed=1), 50)
    assert study.replicates == 50 and 0 < study.mean <= 40
    with pytest.raises(ValueError):
        BmConfig(10, mode="other")


def test_lis_trivial():
    assert lis_oracle(range(10)) == 10
    assert lis_oracle(range(10, 0, -1)) == 1
    assert lis_oracle([]) == 0
    with pytest.raises(NotPermutation):
        lis_oracle([0, 0, 1])
    with pytest.raises(NotPermutation):
        lis_oracle([2, 3, 4])


@given(st.permutations(list(range(8))))
def test_lis_matches_exhaustive_search(perm):
    assert lis_oracle(perm) == lis_brute(perm)


def test_window_model_tables():
    model = perm_window_model(5, 0)
    assert model.scale == 4
    assert (model.table == 4 * np.eye(5, dtype=np.int64)).all()
    wide = perm_window_model(5, 1)
    assert wide.table[0, 1] == 3 and wide.table[0, 2] == 0
    literal = perm_window_model(5, 0, literal=True)
    assert (literal.table == 4).all()


@pytest.mark.parametrize("n", [2, 7, 64])
def test_perm_c0_equals_lis_of_composition(n):
    cfg = PermConfig(n, 0.0, seed=3)
    model = perm_window_model(n, 0)
    for i in range(20):
        pi, rho = perm_pair(cfg, i)
        assert perm_score_L(cfg, model, i) == lis_oracle(composition(pi, rho))


def test_identity_pair_scores_n_with_full_window():
    n = 12
    model = perm_window_model(n, n - 1)
    ident = np.arange(n)
    assert align_exact(Instance.of(ident, ident), model).value == n


def test_perm_study_moments():
    s = perm_study(PermConfig(100, 0.0, seed=1), 30)
    assert 1.0 < s.mean_over_sqrt_n < 2.5
    with pytest.raises(ValueError):
        PermConfig(1)
    with pytest.raises(ValueError):
        PermConfig(5, -1)
