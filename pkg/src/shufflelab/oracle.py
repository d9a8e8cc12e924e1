"""Exact laws by enumeration and by polynomial DPs, in rational arithmetic.

Everything here is ground truth for the samplers and the closed-form
moments, so floats never enter.  Enumeration sizes are guarded by an
explicit budget (``SHUFFLELAB_BUDGET`` overrides the default); exceeding
it raises :class:`BudgetExceeded` rather than falling back silently.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .perm import Permutation, StatisticKind, statistic
from .qpoly import IntPolynomial, multinomial, q_multinomial
from .shufflers import (ProbabilityVector, _resolve_p, alpha_pile_sizes, interleave,
                        inverse_shuffle, warn_if_float)

__all__ = [
    "DEFAULT_BUDGET", "BudgetExceeded", "ExactDistribution", "current_budget",
    "exact_dist_words", "exact_dist_uniform", "exact_perm_law_riffle",
    "exact_perm_law_riffle_forward", "exact_perm_law_uniform", "exact_perm_law_topm",
    "exact_perm_law_topm_forward", "exact_perm_law_alpha", "pushforward",
    "q_multinomial", "IntPolynomial", "exact_inv_dist_via_galois", "exact_des_dist_dp",
    "exact_la_word_dist_dp", "exact_dist_topm", "convolve_laws", "la_law_comparison",
    "compositions",
]

DEFAULT_BUDGET = 10 ** 8


class BudgetExceeded(ValueError):
    pass


def current_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get("SHUFFLELAB_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def _spend(cost: int, budget: int | None, what: str, hint: str):
    limit = current_budget(budget)
    if cost > limit:
        raise BudgetExceeded(f"{what} needs {cost} steps, over the budget of {limit}; {hint}")


_WORD_HINT = "use exact_inv_dist_via_galois / exact_des_dist_dp or Monte Carlo"
_PERM_HINT = "use Monte Carlo for larger n"


@dataclass
class ExactDistribution:
    """Law of an integer statistic with rational probabilities."""

    support: dict[int, Fraction]
    model: dict = field(default_factory=dict)
    statistic: str = ""

    def __post_init__(self):
        cleaned = {int(v): Fraction(p) for v, p in self.support.items() if p != 0}
        if any(p < 0 for p in cleaned.values()):
            raise ValueError("negative probability")
        if sum(cleaned.values()) != 1:
            raise ValueError("probabilities do not sum to 1")
        self.support = dict(sorted(cleaned.items()))

    def __eq__(self, other):
        if isinstance(other, ExactDistribution):
            return self.support == other.support
        return NotImplemented

    def pmf(self, v) -> Fraction:
        return self.support.get(v, Fraction(0))

    def cdf(self, v) -> Fraction:
        return sum((p for k, p in self.support.items() if k <= v), Fraction(0))

    def mean(self) -> Fraction:
        return sum((k * p for k, p in self.support.items()), Fraction(0))

    def variance(self) -> Fraction:
        m = self.mean()
        return sum((k * k * p for k, p in self.support.items()), Fraction(0)) - m * m

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "model": self.model,
                "distribution": {str(k): _frac_str(p) for k, p in self.support.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExactDistribution":
        support = {int(k): Fraction(v) for k, v in data["distribution"].items()}
        return cls(support, dict(data.get("model", {})), data.get("statistic", ""))

    @classmethod
    def from_json(cls, text: str) -> "ExactDistribution":
        return cls.from_dict(json.loads(text))


def _frac_str(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _model(name, **kw):
    out = {"model": name}
    for k, v in kw.items():
        out[k] = [str(x) for x in v] if isinstance(v, ProbabilityVector) else v
    return out


# ---------------------------------------------------------------------------
# Enumerations

def _word_weight(word, probs) -> Fraction:
    w = Fraction(1)
    for d in word:
        w *= probs[d - 1]
    return w


def _words_in_range(n: int, a: int, start: int, stop: int):
    """Words with index in [start, stop); index = base-a number, first digit most significant."""
    for idx in range(start, stop):
        digits = [0] * n
        for pos in range(n - 1, -1, -1):
            idx, r = divmod(idx, a)
            digits[pos] = r + 1
        yield tuple(digits)


def _merge(parts: Iterable[Mapping]) -> dict:
    out = defaultdict(Fraction)
    for part in parts:
        for k, v in part.items():
            out[k] += v
    return dict(out)


def exact_dist_words(n: int, a: int, p=None, stat="inv", *, budget=None,
                     partitions: int = 1) -> ExactDistribution:
    """Law of a statistic of an i.i.d.-p word, by enumerating all a^n words.

    Statistics are taken on the word itself (ties allowed; LA is tie-aware).
    The word space can be split into ``partitions`` contiguous index ranges;
    the merged result is identical for any split.
    """
    stat = StatisticKind.parse(stat)
    pv = _resolve_p(a, p)
    warn_if_float(pv)
    _spend(a ** n * n, budget, f"enumerating {a}^{n} words", _WORD_HINT)
    total = a ** n
    bounds = [total * i // partitions for i in range(partitions + 1)]

    def run(lo, hi):
        acc = defaultdict(Fraction)
        for word in _words_in_range(n, a, lo, hi):
            acc[statistic(stat, word, ties=True)] += _word_weight(word, pv.probs)
        return acc

    support = _merge(run(lo, hi) for lo, hi in zip(bounds, bounds[1:]))
    return ExactDistribution(support, _model("word", n=n, a=a, p=pv), stat.value)


def exact_perm_law_uniform(n: int, *, budget=None) -> dict[Permutation, Fraction]:
    _spend(math.factorial(n) * n, budget, f"enumerating S_{n}", _PERM_HINT)
    w = Fraction(1, math.factorial(n))
    return {Permutation(p): w for p in itertools.permutations(range(1, n + 1))}


def exact_dist_uniform(n: int, stat="inv", *, budget=None) -> ExactDistribution:
    stat = StatisticKind.parse(stat)
    law = exact_perm_law_uniform(n, budget=budget)
    return pushforward(law, stat, _model("uniform", n=n))


def exact_perm_law_riffle(n: int, a: int, p=None, *, budget=None) -> dict[Permutation, Fraction]:
    """Law of the a-shuffle via the inverse description: push words through the sort."""
    pv = _resolve_p(a, p)
    warn_if_float(pv)
    _spend(a ** n * n, budget, f"enumerating {a}^{n} words", _WORD_HINT)
    law = defaultdict(Fraction)
    for word in itertools.product(range(1, a + 1), repeat=n):
        law[inverse_shuffle(word)] += _word_weight(word, pv.probs)
    return dict(law)


def compositions(n: int, parts: int):
    """All (b_1..b_parts) of non-negative integers summing to n."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def _arrangements(counts: list[int], prefix: list[int], out: list):
    """Distinct arrangements of the multiset with the given letter counts."""
    if not any(counts):
        out.append(tuple(prefix))
        return
    for letter, c in enumerate(counts):
        if c:
            counts[letter] -= 1
            prefix.append(letter + 1)
            _arrangements(counts, prefix, out)
            prefix.pop()
            counts[letter] += 1


def _multiset_arrangements(composition) -> list[tuple[int, ...]]:
    out: list = []
    _arrangements(list(composition), [], out)
    return out


def exact_perm_law_riffle_forward(n: int, a: int, p=None, *, budget=None) -> dict[Permutation, Fraction]:
    """Law of the a-shuffle via cut-then-interleave: sum over pile sizes b of
    the multinomial cut probability spread evenly over the interleavings."""
    pv = _resolve_p(a, p)
    warn_if_float(pv)
    _spend(a ** n * n, budget, "enumerating cuts and interleavings", _WORD_HINT)
    law = defaultdict(Fraction)
    for b in compositions(n, a):
        cut = Fraction(multinomial(b))
        for prob, size in zip(pv.probs, b):
            cut *= prob ** size
        if cut == 0:
            continue
        ways = _multiset_arrangements(b)
        each = cut / len(ways)
        for labels in ways:
            law[interleave(labels)] += each
    return dict(law)


def exact_perm_law_topm(n: int, m: int, *, budget=None) -> dict[Permutation, Fraction]:
    """Inverse description: uniform binary words with m low digits, then sort."""
    if not 0 <= m <= n:
        raise ValueError("m must satisfy 0 <= m <= n")
    _spend(math.comb(n, m) * n, budget, f"enumerating C({n},{m}) words", _PERM_HINT)
    words = _multiset_arrangements((m, n - m))
    w = Fraction(1, len(words))
    law = defaultdict(Fraction)
    for word in words:
        law[inverse_shuffle(word)] += w
    return dict(law)


def exact_perm_law_topm_forward(n: int, m: int, *, budget=None) -> dict[Permutation, Fraction]:
    """Forward description: interleave the top m cards uniformly into the rest."""
    if not 0 <= m <= n:
        raise ValueError("m must satisfy 0 <= m <= n")
    _spend(math.comb(n, m) * n, budget, f"enumerating C({n},{m}) interleavings", _PERM_HINT)
    ways = _multiset_arrangements((m, n - m))
    law = defaultdict(Fraction)
    for labels in ways:
        law[interleave(labels)] += Fraction(1, len(ways))
    return dict(law)


def exact_perm_law_alpha(n: int, alpha, *, budget=None) -> dict[Permutation, Fraction]:
    sizes = alpha_pile_sizes(n, alpha)
    _spend(2 ** n * n, budget, "enumerating constrained interleavings", _PERM_HINT)
    law = defaultdict(Fraction)
    for n0, n1 in sizes:
        ways = _multiset_arrangements((n0, n1))
        for labels in ways:
            law[interleave(labels)] += Fraction(1, len(sizes) * len(ways))
    return dict(law)


def pushforward(law: Mapping[Permutation, Fraction], stat, model=None) -> ExactDistribution:
    stat = StatisticKind.parse(stat)
    support = defaultdict(Fraction)
    for perm, prob in law.items():
        support[statistic(stat, perm.values)] += prob
    return ExactDistribution(dict(support), model or {}, stat.value)


def exact_dist_topm(n: int, m: int, stat="inv", *, budget=None) -> ExactDistribution:
    law = exact_perm_law_topm(n, m, budget=budget)
    return pushforward(law, stat, _model("topm", n=n, m=m))


def convolve_laws(first: Mapping, second: Mapping, *, budget=None) -> dict[Permutation, Fraction]:
    """Law of the deck after a draw from ``first`` followed by one from ``second``."""
    if not first or not second:
        raise ValueError("empty law")
    n = len(next(iter(first)))
    if len(next(iter(second))) != n:
        raise ValueError("laws live on different S_n")
    _spend(len(first) * len(second) * n, budget, "convolving laws", _PERM_HINT)
    law = defaultdict(Fraction)
    for f, pf in first.items():
        fv = f.values
        for s, ps in second.items():
            law[Permutation(tuple(fv[j - 1] for j in s.values))] += pf * ps
    return dict(law)


# ---------------------------------------------------------------------------
# Polynomial DPs

def exact_inv_dist_via_galois(n: int, a: int, p=None, *, budget=None) -> ExactDistribution:
    """Inversions of the a-shuffle as a mixture of q-multinomial laws.

    Given pile sizes b, an i.i.d. word is a uniform arrangement of the
    multiset {1^b1..a^ba}; its inversion generating function is the
    q-multinomial, whose coefficients sum to the number of arrangements.
    """
    pv = _resolve_p(a, p)
    warn_if_float(pv)
    _spend(math.comb(n + a - 1, a - 1), budget, "summing over compositions", _PERM_HINT)
    support = defaultdict(Fraction)
    for b in compositions(n, a):
        weight = Fraction(1)
        for prob, size in zip(pv.probs, b):
            weight *= prob ** size
        if weight == 0:
            continue
        poly = q_multinomial(b)
        for k, c in enumerate(poly.coeffs):
            if c:
                support[k] += weight * c
    return ExactDistribution(dict(support), _model("riffle", n=n, a=a, p=pv), "inv")


def exact_des_dist_dp(n: int, a: int, p=None, *, budget=None) -> ExactDistribution:
    """Descents by a transfer-matrix DP over (last letter, descents so far)."""
    pv = _resolve_p(a, p)
    warn_if_float(pv)
    if n < 1:
        raise ValueError("n must be >= 1")
    _spend(n * a * a * n, budget, "descent DP", _PERM_HINT)
    probs = pv.probs
    state = {(d, 0): probs[d - 1] for d in range(1, a + 1) if probs[d - 1]}
    for _ in range(n - 1):
        nxt = defaultdict(Fraction)
        for (last, k), w in state.items():
            for d in range(1, a + 1):
                if probs[d - 1]:
                    nxt[(d, k + (last > d))] += w * probs[d - 1]
        state = nxt
    support = defaultdict(Fraction)
    for (_, k), w in state.items():
        support[k] += w
    return ExactDistribution(dict(support), _model("riffle", n=n, a=a, p=pv), "des")


def exact_la_word_dist_dp(n: int, a: int, p=None, *, budget=None) -> ExactDistribution:
    """Tie-aware LA of an i.i.d. word by a DP over (last letter, last move).

    Runs of equal letters collapse; LA is then 1 + [first move is down] +
    (number of changes of direction), which the DP tracks incrementally.
    """
    pv = _resolve_p(a, p)
    warn_if_float(pv)
    if n < 1:
        raise ValueError("n must be >= 1")
    _spend(n * 3 * a * a * n, budget, "LA word DP", _PERM_HINT)
    probs = pv.probs
    # state: (last letter, sign of last non-zero move or 0, la so far)
    state = defaultdict(Fraction)
    for d in range(1, a + 1):
        if probs[d - 1]:
            state[(d, 0, 1)] += probs[d - 1]
    for _ in range(n - 1):
        nxt = defaultdict(Fraction)
        for (last, move, la), w in state.items():
            for d in range(1, a + 1):
                pd = probs[d - 1]
                if not pd:
                    continue
                step = (d > last) - (d < last)
                if step == 0:
                    nxt[(d, move, la)] += w * pd
                    continue
                if move == 0:
                    gain = 1 if step < 0 else 0
                else:
                    gain = 1 if step != move else 0
                nxt[(d, step, la + gain)] += w * pd
        state = nxt
    support = defaultdict(Fraction)
    for (_, _, la), w in state.items():
        support[la] += w
    return ExactDistribution(dict(support), _model("word", n=n, a=a, p=pv), "la")


def la_law_comparison(n: int, a: int, p=None, *, budget=None) -> dict:
    """LA of the shuffled permutation versus tie-aware LA of its word.

    Returns both laws, their total variation distance, and the fraction of
    word mass on which the two agree sample by sample.
    """
    pv = _resolve_p(a, p)
    _spend(a ** n * n, budget, f"enumerating {a}^{n} words", _WORD_HINT)
    perm_side = defaultdict(Fraction)
    word_side = defaultdict(Fraction)
    agree = Fraction(0)
    for word in itertools.product(range(1, a + 1), repeat=n):
        w = _word_weight(word, pv.probs)
        if not w:
            continue
        la_perm = statistic("la", inverse_shuffle(word).values)
        la_w = statistic("la", word, ties=True)
        perm_side[la_perm] += w
        word_side[la_w] += w
        if la_perm == la_w:
            agree += w
    model = _model("riffle", n=n, a=a, p=pv)
    perm_law = ExactDistribution(dict(perm_side), model, "la")
    word_law = ExactDistribution(dict(word_side), _model("word", n=n, a=a, p=pv), "la")
    keys = set(perm_law.support) | set(word_law.support)
    tv = sum(abs(perm_law.pmf(k) - word_law.pmf(k)) for k in keys) / 2
    return {"permutation": perm_law, "word": word_law, "tv": tv, "pathwise_agreement": agree}
