import itertools

import numpy as np
from hypothesis import strategies as st

from malign.aligner import Instance
from malign.scoring import Alphabet, build_score_model


@st.composite
def score_models(draw, m_values=(2, 3), k_max=3, max_num=4):
    """Random valid symmetric models: one score per sorted orbit representative."""
    m = draw(st.sampled_from(m_values))
    k = draw(st.integers(1, k_max))
    reps = list(itertools.combinations_with_replacement(range(k), m))
    nums = draw(st.lists(st.integers(0, max_num), min_size=len(reps), max_size=len(reps)))
    if not any(nums):
        nums[draw(st.integers(0, len(reps) - 1))] = 1
    dens = draw(st.lists(st.sampled_from([1, 2, 4]), min_size=len(reps), max_size=len(reps)))
    from fractions import Fraction

    entries = [(r, Fraction(a, b)) for r, a, b in zip(reps, nums, dens)]
    return build_score_model(Alphabet(k), m, entries)


@st.composite
def instances(draw, model, max_len=7, min_len=0):
    seqs = []
    for _ in range(model.m):
        n = draw(st.integers(min_len, max_len))
        seqs.append(draw(st.lists(st.integers(0, model.k - 1), min_size=n, max_size=n)))
    return Instance(tuple(np.array(s, dtype=np.int64) for s in seqs))


@st.composite
def model_and_instance(draw, m_values=(2, 3), max_len=7, min_len=0):
    model = draw(score_models(m_values))
    return model, draw(instances(model, max_len, min_len))
