"""Closed-form means and variances, and the standardisations built on them.

Exact moments are returned as ``Fraction`` so they can be compared with
the enumeration oracles without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .perm import StatisticKind
from .shufflers import (RandomWord, RiffleForward, RiffleInverse,
                        UniformPermutation, _resolve_p)

__all__ = [
    "MomentReport", "inv_moments_riffle", "des_moments_riffle", "inv_moments_uniform",
    "des_moments_uniform", "la_moments_uniform", "la_moments_riffle2",
    "la_moments_words", "word_la_gamma2", "standardize", "unstandardize",
    "inv_std_scale_theorem", "des_std_scale_theorem", "moments_for",
]


@dataclass(frozen=True)
class MomentReport:
    statistic: StatisticKind
    model: dict
    mean: Fraction
    variance: Fraction
    exact: bool = True

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("negative variance")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def to_dict(self):
        return {"statistic": self.statistic.value, "model": self.model,
                "mean": float(self.mean), "variance": float(self.variance),
                "mean_exact": str(self.mean), "variance_exact": str(self.variance),
                "exact": self.exact}


def _check(n, a=1):
    if n < 1:
        raise ValueError("n must be >= 1")
    if a < 1:
        raise ValueError("a must be >= 1")


def inv_moments_riffle(n: int, a: int) -> MomentReport:
    """Inversions under the unbiased a-shuffle."""
    _check(n, a)
    mean = Fraction(n * (n - 1) * (a - 1), 4 * a)
    var = Fraction(n * (n - 1) * (2 * n + 5) * (a * a - 1), 72 * a * a)
    return MomentReport(StatisticKind.INVERSIONS, {"model": "riffle", "n": n, "a": a},
                        mean, var)


def des_moments_riffle(n: int, a: int, p=None) -> MomentReport:
    """Descents under the a-shuffle, optionally biased.

    With q = P(X1 > X2) and r = P(X1 > X2 > X3) for i.i.d. letters,
    mean = (n-1)q and variance = (n-1)q(1-q) + 2(n-2)(r - q^2). In the
    unbiased case this is (n-1)(a-1)/(2a) and (a^2-1)(n+1)/(12a^2).
    """
    _check(n, a)
    pv = _resolve_p(a, p)
    probs = pv.probs
    below = [sum(probs[:i], Fraction(0)) for i in range(a)]
    q = sum((probs[i] * below[i] for i in range(a)), Fraction(0))
    # r = sum_i p_i * P(X2 < i, X2 > X3)
    below_desc = [sum((probs[j] * below[j] for j in range(i)), Fraction(0)) for i in range(a)]
    r = sum((probs[i] * below_desc[i] for i in range(a)), Fraction(0))
    mean = (n - 1) * q
    var = (n - 1) * q * (1 - q) + 2 * max(n - 2, 0) * (r - q * q)
    model = {"model": "riffle", "n": n, "a": a, "p": [str(x) for x in probs]}
    return MomentReport(StatisticKind.DESCENTS, model, mean, var)


def inv_moments_uniform(n: int) -> MomentReport:
    _check(n)
    return MomentReport(StatisticKind.INVERSIONS, {"model": "uniform", "n": n},
                        Fraction(n * (n - 1), 4), Fraction(n * (n - 1) * (2 * n + 5), 72))


def des_moments_uniform(n: int) -> MomentReport:
    _check(n)
    var = Fraction(n + 1, 12) if n >= 2 else Fraction(0)
    return MomentReport(StatisticKind.DESCENTS, {"model": "uniform", "n": n},
                        Fraction(n - 1, 2), var)


# The variance 8n/45 - 13/180 holds from n = 4 on; smaller n are exact values.
_LA_UNIFORM_SMALL = {1: (Fraction(1), Fraction(0)),
                     2: (Fraction(3, 2), Fraction(1, 4)),
                     3: (Fraction(13, 6), Fraction(17, 36))}


def la_moments_uniform(n: int) -> MomentReport:
    """Longest alternating subsequence of a uniform permutation."""
    _check(n)
    if n in _LA_UNIFORM_SMALL:
        mean, var = _LA_UNIFORM_SMALL[n]
    else:
        mean = Fraction(2 * n, 3) + Fraction(1, 6)
        var = Fraction(8 * n, 45) - Fraction(13, 180)
    return MomentReport(StatisticKind.LONGEST_ALTERNATING, {"model": "uniform", "n": n},
                        mean, var)


def la_moments_riffle2(n: int, p=None) -> MomentReport:
    """LA of a 2-shuffle, from LA = 1 + 2 des - [X_{n-1} > X_n].

    That identity holds sample by sample for the coupled word, so the
    moments follow from the descent indicators alone.
    """
    _check(n)
    pv = _resolve_p(2, p)
    model = {"model": "riffle", "n": n, "a": 2, "p": [str(x) for x in pv.probs]}
    if n == 1:
        return MomentReport(StatisticKind.LONGEST_ALTERNATING, model, Fraction(1), Fraction(0))
    q = pv.probs[0] * pv.probs[1]  # P(X_i > X_{i+1}); no strict 3-chain on 2 letters
    des = des_moments_riffle(n, 2, pv)
    var_last = q * (1 - q)
    cov_last = var_last - (q * q if n >= 3 else 0)
    mean = 1 + 2 * des.mean - q
    var = 4 * des.variance + var_last - 4 * cov_last
    return MomentReport(StatisticKind.LONGEST_ALTERNATING, model, mean, var)


def word_la_gamma2(a: int, corrected: bool = False) -> Fraction:
    """Per-letter asymptotic variance of LA for a uniform word on a letters.

    The default is the commonly quoted expression with denominator 1 - 2/(a+1).
    ``corrected=True`` uses 1 - 1/a, which matches the exact transfer-matrix
    variance (see ``oracle.exact_la_word_dist_dp``); e.g. 1/4 rather than
    3/8 at a = 2.
    """
    if a < 2:
        raise ValueError("degenerate alphabet")
    a = Fraction(a)
    core = (1 + 1 / a) * (1 - 3 / (4 * a)) * (1 - 1 / (2 * a))
    denom = (1 - 1 / a) if corrected else (1 - 2 / (a + 1))
    return Fraction(8, 45) * core / denom


def la_moments_words(n: int, a: int, corrected: bool = False) -> MomentReport:
    """Asymptotic mean n(2/3 - 1/(3a)) and variance n * gamma^2."""
    _check(n)
    if a == 1:
        raise ValueError("degenerate alphabet")
    mean = n * (Fraction(2, 3) - Fraction(1, 3 * a))
    var = n * word_la_gamma2(a, corrected)
    model = {"model": "word", "n": n, "a": a, "gamma2": "corrected" if corrected else "quoted"}
    return MomentReport(StatisticKind.LONGEST_ALTERNATING, model, mean, var, exact=False)


def standardize(value, report: MomentReport) -> float:
    if report.variance <= 0:
        raise ValueError("degenerate statistic")
    return float(value - report.mean) / report.sd


def unstandardize(z: float, report: MomentReport) -> float:
    return float(report.mean) + z * report.sd


def inv_std_scale_theorem(n: int, a: int) -> float:
    """sqrt(n) (n-1) sqrt((a^2-1)/(36a^2)): the U-statistic projection scale."""
    if n < 2 or a < 2:
        raise ValueError("requires n >= 2 and a >= 2")
    return math.sqrt(n) * (n - 1) * math.sqrt((a * a - 1) / (36 * a * a))


def des_std_scale_theorem(n: int, a: int) -> float:
    """sqrt((a^2-1)(n-1)/(12a^2)), the normaliser quoted with the descent CLT.

    Asymptotically equivalent to the exact standard deviation, which has
    n+1 in place of n-1.
    """
    if n < 2 or a < 2:
        raise ValueError("requires n >= 2 and a >= 2")
    return math.sqrt((a * a - 1) * (n - 1) / (12 * a * a))


def moments_for(model, stat) -> MomentReport:
    """Closed-form moments for a (model, statistic) pair, where one exists."""
    stat = StatisticKind.parse(stat)
    if isinstance(model, UniformPermutation):
        table = {StatisticKind.INVERSIONS: inv_moments_uniform,
                 StatisticKind.DESCENTS: des_moments_uniform,
                 StatisticKind.LONGEST_ALTERNATING: la_moments_uniform}
        if stat in table:
            return table[stat](model.n)
    elif isinstance(model, (RiffleForward, RiffleInverse, RandomWord)):
        if stat is StatisticKind.DESCENTS:
            return des_moments_riffle(model.n, model.a, model.p)
        if stat is StatisticKind.INVERSIONS and model.p.is_uniform:
            return inv_moments_riffle(model.n, model.a)
        if stat is StatisticKind.LONGEST_ALTERNATING:
            if isinstance(model, RandomWord) and model.p.is_uniform and model.a >= 2:
                return la_moments_words(model.n, model.a)
            if not isinstance(model, RandomWord) and model.a == 2:
                return la_moments_riffle2(model.n, model.p)
    raise ValueError(f"no closed-form moments for {stat.value} under "
                     f"{model.describe()['model']}; supply mean and sd explicitly")
