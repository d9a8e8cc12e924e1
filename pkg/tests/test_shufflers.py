import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from shufflelab.oracle import (exact_perm_law_riffle, exact_perm_law_riffle_forward,
                               exact_perm_law_topm, exact_perm_law_topm_forward)
from shufflelab.perm import Permutation, inversions, invert
from shufflelab.shufflers import (AlphaConstrained, Convolution, OrderedTopM, ProbabilityVector,
                                  RandomWord, RiffleForward, RiffleInverse, RngStream,
                                  UniformPermutation, alpha_pile_sizes, child_seed, compose,
                                  displacement_image, interleave, inverse_shuffle,
                                  multinomial_cut, sample, sample_alpha_constrained,
                                  sample_batch, sample_convolution, sample_riffle_forward,
                                  sample_riffle_inverse, sample_top_m, sample_top_m_inverse,
                                  sample_uniform, sample_uniform_by_ranks, tensor_product,
                                  uniform_interleave)

F = Fraction
HALF = ProbabilityVector.uniform(2)


def freq(draws):
    c = Counter(draws)
    return {k: v / len(draws) for k, v in c.items()}


# --- probability vectors -------------------------------------------------

def test_probability_vector_normalises_and_validates():
    assert ProbabilityVector([1, 3]).probs == (F(1, 4), F(3, 4))
    assert ProbabilityVector.parse("1/3,2/3").probs == (F(1, 3), F(2, 3))
    assert ProbabilityVector([0.25, 0.75]).from_float
    with pytest.raises(ValueError):
        ProbabilityVector([-1, 2])
    with pytest.raises(ValueError):
        ProbabilityVector([0, 0])


def test_tensor_product_examples():
    p = ProbabilityVector.parse("1/3,2/3")
    assert tensor_product(p, ProbabilityVector([1])) == p
    assert tensor_product(HALF, p).probs == (F(1, 6), F(1, 3), F(1, 6), F(1, 3))
    assert tensor_product(HALF, HALF) == ProbabilityVector.uniform(4)
    q = ProbabilityVector.parse("1/4,3/4")
    assert tensor_product(p, q)[1] == p[0] * q[1]


# --- streams -------------------------------------------------------------

def test_streams_are_deterministic_and_distinct():
    assert child_seed(1, 0) == child_seed(1, 0)
    assert len({child_seed(1, i) for i in range(100)}) == 100
    a = RngStream(9, 3).uniform(20)
    b = RngStream(9, 3).uniform(20)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, RngStream(9, 4).uniform(20))


def test_child_seed_frozen_values():
    # pinned so a library upgrade that changes the mix is caught
    assert child_seed(0, 0) == 8668861027912758289
    assert child_seed(2024, 3) == 11206937725199309287
    assert isinstance(child_seed(2 ** 64 - 1, 2 ** 63), int)
    assert child_seed(7, 1) != child_seed(1, 7)


# --- deterministic maps --------------------------------------------------

def test_inverse_shuffle_reference_word():
    word = (1, 1, 2, 1, 2, 2, 1)
    rho = inverse_shuffle(word)
    assert rho.values == (1, 2, 5, 3, 6, 7, 4)
    assert invert(rho).values == (1, 2, 4, 7, 3, 5, 6)
    assert displacement_image(word) == rho.values
    assert inverse_shuffle((3, 3, 3)) == Permutation.identity(3)
    assert inverse_shuffle((2, 1)).values == (2, 1)


def test_interleave_admits_two_pile_outcome():
    # piles (4, 3): pile 2 cards 5, 6, 7 land at positions 3, 5, 6
    assert interleave((1, 1, 2, 1, 2, 2, 1)).values == (1, 2, 5, 3, 6, 7, 4)
    assert interleave((1, 1, 1)) == Permutation.identity(3)


@given(st.lists(st.integers(1, 5), min_size=1, max_size=60))
def test_lemma_pairs_on_words(word):
    rho = inverse_shuffle(word).values
    n = len(word)
    for i in range(n):
        for k in range(i + 1, n):
            assert (rho[i] > rho[k]) == (word[i] > word[k])


def test_compose_convention():
    s = Permutation((2, 1, 3))
    t = Permutation((1, 3, 2))
    assert compose(s, t).values == (2, 3, 1)
    assert compose(s, Permutation.identity(3)) == s


# --- samplers ------------------------------------------------------------

def test_multinomial_cut_examples():
    rng = RngStream(1)
    assert multinomial_cut(5, ProbabilityVector([1, 0]), rng) == (5, 0)
    assert multinomial_cut(4, ProbabilityVector([1]), rng) == (4,)
    cuts = [multinomial_cut(2, HALF, rng) for _ in range(40_000)]
    f = freq(cuts)
    assert abs(f[(2, 0)] - 0.25) < 0.01 and abs(f[(1, 1)] - 0.5) < 0.01


def test_uniform_interleave_examples():
    rng = RngStream(2)
    assert uniform_interleave((5, 0, 0), rng) == Permutation.identity(5)
    f = freq([uniform_interleave((1, 1), rng).values for _ in range(20_000)])
    assert abs(f[(1, 2)] - 0.5) < 0.015


def test_riffle_forward_examples():
    rng = RngStream(3)
    assert sample_riffle_forward(6, 1, None, rng) == Permutation.identity(6)
    draws = [sample_riffle_forward(4, 2, None, rng) for _ in range(40_000)]
    assert abs(freq(draws)[Permutation.identity(4)] - 5 / 16) < 0.01
    draws = [sample_riffle_forward(3, 3, None, rng) for _ in range(40_000)]
    assert abs(freq(draws)[Permutation.identity(3)] - 10 / 27) < 0.01


def test_riffle_inverse_examples():
    rng = RngStream(4)
    s = sample_riffle_inverse(10, 3, "1/2,1/4,1/4", rng)
    assert s.permutation.values == displacement_image(s.word.digits)
    assert sample_riffle_inverse(5, 1, None, rng).permutation == Permutation.identity(5)


def test_uniform_samplers():
    rng = RngStream(5)
    assert sample_uniform(1, rng).values == (1,)
    a = [sample_uniform(3, rng).values for _ in range(100_000)]
    b = [sample_uniform_by_ranks(3, rng).values for _ in range(100_000)]
    fa, fb = freq(a), freq(b)
    assert chisquare([a.count(p) for p in itertools.permutations((1, 2, 3))]).pvalue > 1e-3
    tv = sum(abs(fa.get(p, 0) - fb.get(p, 0)) for p in set(fa) | set(fb)) / 2
    assert tv < 0.01


def test_top_m_examples():
    rng = RngStream(6)
    assert sample_top_m(5, 0, rng) == Permutation.identity(5)
    assert sample_top_m(5, 5, rng) == Permutation.identity(5)
    f = freq([sample_top_m(2, 1, rng).values for _ in range(20_000)])
    assert abs(f[(2, 1)] - 0.5) < 0.015
    s = sample_top_m_inverse(4, 0, rng)
    assert s.word.digits == (2, 2, 2, 2) and s.permutation == Permutation.identity(4)
    words = Counter(sample_top_m_inverse(3, 1, rng).word.digits for _ in range(30_000))
    assert len(words) == 3 and all(abs(c / 30_000 - 1 / 3) < 0.015 for c in words.values())
    law = exact_perm_law_topm_forward(7, 4)
    assert Permutation((1, 2, 5, 3, 6, 7, 4)) in law
    with pytest.raises(ValueError):
        OrderedTopM(3, 4)


def test_alpha_examples():
    assert alpha_pile_sizes(10, Fraction(2, 5)) == [(4, 6), (5, 5), (6, 4)]
    assert alpha_pile_sizes(10, 0.4) == [(4, 6), (5, 5), (6, 4)]
    assert alpha_pile_sizes(5, 0) == [(1, 4), (2, 3), (3, 2), (4, 1)]
    with pytest.raises(ValueError, match="alpha too large for n"):
        alpha_pile_sizes(4, 0.6)
    with pytest.raises(ValueError, match="alpha too large for n"):
        AlphaConstrained(4, 0.6)
    rng = RngStream(7)
    p = sample_alpha_constrained(10, 0.4, rng)
    assert sorted(p.values) == list(range(1, 11))


def test_convolution_examples():
    rng1, rng2 = RngStream(8), RngStream(8)
    single = RiffleForward(5, 3)
    assert sample_convolution([single], rng1) == sample(single, rng2)
    with pytest.raises(ValueError):
        Convolution((RiffleForward(3, 2), RiffleForward(4, 2)))
    with pytest.raises(ValueError):
        Convolution(())


# --- exact agreement -----------------------------------------------------

@pytest.mark.parametrize("n", range(1, 6))
@pytest.mark.parametrize("a", [1, 2, 3])
def test_forward_and_inverse_laws_agree(n, a):
    assert exact_perm_law_riffle_forward(n, a) == exact_perm_law_riffle(n, a)
    if a >= 2:
        p = ProbabilityVector(list(range(1, a + 1)))
        assert exact_perm_law_riffle_forward(n, a, p) == exact_perm_law_riffle(n, a, p)


@pytest.mark.parametrize("n", range(1, 7))
def test_top_m_laws_agree(n):
    for m in range(n + 1):
        assert exact_perm_law_topm_forward(n, m) == exact_perm_law_topm(n, m)


# --- batch sampler -------------------------------------------------------

MODELS = [RiffleForward(4, 2), RiffleInverse(4, 3, "1/2,1/3,1/6"), UniformPermutation(3),
          OrderedTopM(4, 2), AlphaConstrained(4, Fraction(1, 4)),
          Convolution((RiffleForward(3, 2), RiffleInverse(3, 2)))]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.describe()["model"])
def test_batch_sampler_matches_exact_law(model):
    from shufflelab.cli import exact_perm_law
    law = exact_perm_law(model)
    perms, _ = sample_batch(model, 60_000, RngStream(10))
    got = Counter(map(tuple, perms.tolist()))
    tv = sum(abs(got.get(p.values, 0) / 60_000 - float(w)) for p, w in law.items()) / 2
    tv += sum(c for k, c in got.items() if Permutation(k) not in law) / 60_000 / 2
    assert tv < 0.02


def test_batch_sampler_coupling_and_words():
    perms, words = sample_batch(RiffleInverse(12, 3), 500, RngStream(11))
    for p, w in zip(perms.tolist(), words.tolist()):
        assert tuple(p) == displacement_image(w)
    perms, words = sample_batch(RandomWord(9, 4), 10, RngStream(11))
    assert perms is None and words.shape == (10, 9) and words.min() >= 1 and words.max() <= 4


def test_batch_sampler_deterministic():
    a, _ = sample_batch(RiffleForward(20, 2), 100, RngStream(12, 5))
    b, _ = sample_batch(RiffleForward(20, 2), 100, RngStream(12, 5))
    assert np.array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(1, 5), st.integers(0, 2 ** 32))
def test_coupled_sample_inversions_match_word(n, a, seed):
    s = sample_riffle_inverse(n, a, None, RngStream(seed))
    assert inversions(s.permutation.values) == inversions(s.word.digits)
