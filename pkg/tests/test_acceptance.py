"""End-to-end acceptance criteria, one test (or group) per criterion.

A summary line per criterion is printed at the end of the pytest run.
"""

import json
import math
import time
from collections import Counter
from fractions import Fraction

import pytest

from shufflelab.analysis import (convolution_check, dominance_check, kolmogorov_to_normal,
                                 mcdiarmid_tail_check, normality, rate_check,
                                 run_monte_carlo, theorem24_check, tv_bound, verify_couplings)
from shufflelab.cli import main
from shufflelab.moments import (des_moments_riffle, inv_moments_riffle, la_moments_riffle2,
                                la_moments_uniform, la_moments_words)
from shufflelab.oracle import (convolve_laws, exact_dist_uniform, exact_dist_words,
                               exact_inv_dist_via_galois, exact_perm_law_riffle,
                               exact_perm_law_riffle_forward, exact_perm_law_topm,
                               exact_perm_law_topm_forward)
from shufflelab.perm import Permutation
from shufflelab.qpoly import IntPolynomial, q_multinomial
from shufflelab.shufflers import (ProbabilityVector, RandomWord, RiffleForward, RiffleInverse,
                                  RngStream, UniformPermutation, sample_batch,
                                  sample_riffle_forward, sample_riffle_inverse, tensor_product)

F = Fraction
criterion = pytest.mark.criterion


def law_tv(counts, total, law):
    seen = sum(abs(counts.get(p.values, 0) / total - float(w)) for p, w in law.items())
    stray = sum(c for k, c in counts.items() if Permutation(k) not in law) / total
    return (seen + stray) / 2


# 1 ------------------------------------------------------------------------

@criterion(1, "coupling identities hold on every sample (n=60; a=2, a=5, biased a=3)")
def test_c01_coupling_exactness():
    start = time.perf_counter()
    for a, p in [(2, None), (5, None), (3, "1/2,1/3,1/6")]:
        rep = verify_couplings(60, a, p, 10_000, 2024)
        assert rep.total_failures == 0, rep.failure_examples
        assert all(v == 10_000 for v in rep.checks.values())
        if a == 2:
            assert {"la_two_shuffle", "extremum_max_iff_descent",
                    "extremum_min_iff_prior_descent"} <= set(rep.checks)
            print(f"a=2: strict-tail variant of the LA identity misses "
                  f"{rep.strict_tail_mismatches}/10000 samples")
        print(f"a={a}: LA(shuffle) == LA(word) on {rep.la_pathwise_agreement}/10000 samples")
    assert time.perf_counter() - start < 10


# 2 ------------------------------------------------------------------------

@criterion(2, "forward and inverse samplers: exact laws agree; 10^6 draws within TV 0.005")
@pytest.mark.parametrize("n", range(1, 6))
@pytest.mark.parametrize("a", [1, 2, 3])
def test_c02_exact_forward_inverse(n, a):
    assert exact_perm_law_riffle_forward(n, a) == exact_perm_law_riffle(n, a)
    if a > 1:
        p = ProbabilityVector(list(range(1, a + 1)))
        assert exact_perm_law_riffle_forward(n, a, p) == exact_perm_law_riffle(n, a, p)


@criterion(2, "forward and inverse samplers: exact laws agree; 10^6 draws within TV 0.005")
def test_c02_empirical_laws():
    start = time.perf_counter()
    law = exact_perm_law_riffle(4, 2)
    for k, model in enumerate([RiffleForward(4, 2), RiffleInverse(4, 2)]):
        perms, _ = sample_batch(model, 1_000_000, RngStream(77, k))
        tv = law_tv(Counter(map(tuple, perms.tolist())), 1_000_000, law)
        print(f"{model.describe()['model']}: TV = {tv:.5f}")
        assert tv < 0.005
    # the one-at-a-time samplers, on a smaller run
    rng = RngStream(77, 2)
    for draw in (lambda: sample_riffle_forward(4, 2, None, rng),
                 lambda: sample_riffle_inverse(4, 2, None, rng).permutation):
        counts = Counter(draw().values for _ in range(100_000))
        assert law_tv(counts, 100_000, law) < 0.01
    assert time.perf_counter() - start < 30


# 3 ------------------------------------------------------------------------

@criterion(3, "closed-form moments equal oracle moments exactly (n<=7, a<=4)")
@pytest.mark.parametrize("n", range(1, 8))
def test_c03_closed_form_moments(n):
    for a in range(1, 5):
        inv = exact_dist_words(n, a, None, "inv")
        des = exact_dist_words(n, a, None, "des")
        r = inv_moments_riffle(n, a)
        assert (r.mean, r.variance) == (inv.mean(), inv.variance())
        r = des_moments_riffle(n, a)
        assert (r.mean, r.variance) == (des.mean(), des.variance())
    la = exact_dist_uniform(n, "la")
    r = la_moments_uniform(n)
    assert (r.mean, r.variance) == (la.mean(), la.variance())


@criterion(3, "closed-form moments equal oracle moments exactly (n<=7, a<=4)")
def test_c03_quoted_values():
    assert inv_moments_riffle(7, 2).variance == F(133, 16) == F(8.3125)
    assert la_moments_uniform(7).variance == F(211, 180)
    assert exact_dist_uniform(7, "la").variance() == F(211, 180)


# 4 ------------------------------------------------------------------------

@criterion(4, "exact TV to uniform within 1 - prod (a-i)/a; bound decreasing in a")
@pytest.mark.parametrize("n", range(2, 6))
def test_c04_tv_bound(n):
    for a in range(n, n + 4):
        for stat in ("des", "inv"):
            out = theorem24_check(n, a, stat)
            assert isinstance(out["tv"], Fraction) and out["tv"] <= out["bound"]
    bounds = [tv_bound(n, a) for a in range(n, n + 50)]
    assert all(x > y for x, y in zip(bounds, bounds[1:]))


# 5 ------------------------------------------------------------------------

@criterion(5, "composition of shuffles is the shuffle of the tensor product")
def test_c05_convolution():
    p42 = exact_perm_law_riffle(4, 2)
    assert convolve_laws(p42, p42) == exact_perm_law_riffle(4, 4)
    assert convolution_check(4, [F(1, 2)] * 2, [F(1, 2)] * 2)["tv"] == 0
    p, q = ProbabilityVector.parse("1/3,2/3"), ProbabilityVector.parse("1/4,3/4")
    out = convolution_check(3, p, q)
    assert out["tv"] == 0
    assert exact_perm_law_riffle(3, 4, tensor_product(p, q)) == convolve_laws(
        exact_perm_law_riffle(3, 2, p), exact_perm_law_riffle(3, 2, q))


# 6 ------------------------------------------------------------------------

@criterion(6, "ordered top-m: forward and inverse descriptions agree over S_6")
@pytest.mark.parametrize("m", range(0, 7))
def test_c06_top_m(m):
    assert exact_perm_law_topm_forward(6, m) == exact_perm_law_topm(6, m)


# 7 ------------------------------------------------------------------------

GRID = [50, 100, 200, 400]


@criterion(7, "des and inv CLT: d_K < 0.05 at n=400 and d_K*sqrt(n) not growing")
@pytest.mark.parametrize("a", [2, 4])
@pytest.mark.parametrize("stat", ["des", "inv"])
def test_c07_clt_rate(a, stat):
    rep = rate_check(lambda n: RiffleForward(n, a), stat, GRID, 100_000, 700 + a, workers=4)
    for row in rep.grid:
        print(f"a={a} {stat} n={row['n']}: d_K={row['d_k']:.4f} d_K*sqrt(n)={row['scaled']:.4f}")
    assert rep.grid[-1]["d_k"] < 0.05
    assert rep.verdict == "PASS"


# 8 ------------------------------------------------------------------------

@criterion(8, "LA normality (uniform, 2-shuffle, words) and the word variance constant")
def test_c08_uniform_la():
    rep = normality(UniformPermutation(400), "la", 100_000, 801, workers=4)
    print(f"uniform n=400: d_K={rep.d_k:.4f}")
    assert rep.d_k < 0.05


@criterion(8, "LA normality (uniform, 2-shuffle, words) and the word variance constant")
def test_c08_two_shuffle_la():
    mom = la_moments_riffle2(400)  # LA = 2 des + [X_{n-1} <= X_n], moments from descents
    emp = run_monte_carlo(RiffleInverse(400, 2), "la", 100_000, 802, workers=4)
    rep = kolmogorov_to_normal(emp, float(mom.mean), mom.sd)
    print(f"2-shuffle n=400: d_K={rep.d_k:.4f}")
    assert rep.d_k < 0.05


@criterion(8, "LA normality (uniform, 2-shuffle, words) and the word variance constant")
def test_c08_word_la_normality():
    mom = la_moments_words(400, 3)
    emp = run_monte_carlo(RandomWord(400, 3), "la", 100_000, 803, workers=4)
    rep = kolmogorov_to_normal(emp, float(mom.mean), mom.sd)
    print(f"words a=3 n=400: d_K={rep.d_k:.4f}")
    assert rep.d_k < 0.08


@criterion(8, "LA normality (uniform, 2-shuffle, words) and the word variance constant")
def test_c08_word_la_variance_constant():
    n = 10_000
    emp = run_monte_carlo(RandomWord(n, 2), "la", 10_000, 804, workers=4)
    ratio = emp.variance() / n
    gamma2 = float(la_moments_words(1, 2).variance)
    print(f"Var(LA)/n = {ratio:.4f}; gamma^2 = {gamma2}")
    assert abs(ratio - gamma2) <= 0.05 * gamma2


# 9 ------------------------------------------------------------------------

@criterion(9, "inversions: CDF of 2-shuffle >= a-shuffle >= uniform, exactly")
@pytest.mark.parametrize("n", range(2, 6))
def test_c09_dominance(n):
    out = dominance_check(n, [2, 3, 4])
    assert out["violations"] == [] and out["verdict"] == "PASS"


# 10 -----------------------------------------------------------------------

@criterion(10, "generalized Galois DP equals word enumeration exactly")
@pytest.mark.parametrize("n", range(1, 9))
def test_c10_galois(n):
    for a, p in [(1, None), (2, None), (3, None), (2, "1/3,2/3")]:
        assert exact_inv_dist_via_galois(n, a, p) == exact_dist_words(n, a, p, "inv")
    assert q_multinomial((2, 1)) == IntPolynomial([1, 1, 1])


# 11 -----------------------------------------------------------------------

@criterion(11, "LA tail of uniform permutations within 2 exp(-2t^2/9n)")
def test_c11_tail():
    out = mcdiarmid_tail_check(100, 100_000, 1100, workers=4)
    assert [r["t"] for r in out["rows"]] == list(range(1, 31))
    bad = [r for r in out["rows"] if not r["ok"]]
    assert not bad and out["verdict"] == "PASS"


# 12 -----------------------------------------------------------------------

ANALYSIS_COMMANDS = [
    ["simulate", "--model", "riffle", "--n", "50", "--a", "2", "--stat", "inv", "--samples", "200000"],
    ["normality", "--model", "uniform", "--n", "60", "--stat", "la", "--samples", "200000"],
    ["verify-couplings", "--n", "30", "--a", "3", "--samples", "150000"],
    ["rate", "--a", "2", "--stat", "des", "--grid", "10,20,40", "--samples", "140000"],
    ["tail", "--n", "50", "--samples", "140000"],
]


@criterion(12, "analysis commands give byte-identical JSON across --workers")
@pytest.mark.parametrize("argv", ANALYSIS_COMMANDS, ids=lambda a: a[0])
def test_c12_reproducible(argv, capsys):
    texts = []
    for workers in ("1", "4"):
        code = main(argv + ["--seed", "12", "--workers", workers])
        out = capsys.readouterr().out
        assert code in (0, 4)
        data = json.loads(out)
        data.pop("runtime")  # timing (and the worker count) only
        texts.append(json.dumps(data, sort_keys=True, indent=2))
    assert texts[0] == texts[1]
