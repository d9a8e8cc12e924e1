"""Seedable samplers for riffle shuffles and related models.

A permutation in one-line notation is read as a deck: position i holds
card ``values[i-1]``.  Applying shuffle ``s`` to deck ``d`` gives the deck
``d[s[i]]``, so a forward a-shuffle of the sorted deck is the permutation
itself, and ``compose(first, second)`` is "first, then second".
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .perm import Permutation, Word, invert, rank_sequence

__all__ = [
    "ProbabilityVector", "RngStream", "child_seed", "CoupledSample",
    "RiffleForward", "RiffleInverse", "RandomWord", "UniformPermutation",
    "OrderedTopM", "AlphaConstrained", "Convolution", "ShuffleModel",
    "multinomial_cut", "uniform_interleave", "interleave", "inverse_shuffle",
    "displacement_image", "sample_riffle_forward", "sample_riffle_inverse",
    "sample_uniform", "sample_uniform_by_ranks", "sample_top_m",
    "sample_top_m_inverse", "sample_alpha_constrained", "alpha_pile_sizes",
    "sample_convolution", "tensor_product", "compose", "sample", "sample_batch",
]

MASK64 = (1 << 64) - 1


def _to_fraction(x) -> tuple[Fraction, bool]:
    """Exact conversion; the flag reports whether a float was involved."""
    if isinstance(x, float):
        return Fraction(x), True
    if isinstance(x, (int, Fraction)):
        return Fraction(x), False
    if isinstance(x, str):
        return Fraction(x.strip()), False
    if isinstance(x, np.floating):
        return Fraction(float(x)), True
    if isinstance(x, np.integer):
        return Fraction(int(x)), False
    raise TypeError(f"cannot use {x!r} as a probability")


@dataclass(frozen=True)
class ProbabilityVector:
    """Pile-size bias p = (p_1..p_a), stored as exact rationals.

    Inputs are normalised on construction. Strings such as ``"1/3"`` are
    exact; floats are taken at their exact binary value and the vector is
    marked ``from_float`` so exact oracles can warn.
    """

    probs: tuple[Fraction, ...]
    from_float: bool = field(default=False, compare=False)

    def __init__(self, probs: Iterable, from_float: bool = False):
        vals, flags = [], [from_float]
        for x in probs:
            f, is_float = _to_fraction(x)
            vals.append(f)
            flags.append(is_float)
        if not vals:
            raise ValueError("probability vector needs at least one entry")
        for i, v in enumerate(vals, start=1):
            if v < 0:
                raise ValueError(f"negative probability at position {i}: {v}")
        total = sum(vals)
        if total == 0:
            raise ValueError("probabilities sum to zero")
        object.__setattr__(self, "probs", tuple(v / total for v in vals))
        object.__setattr__(self, "from_float", any(flags))

    @classmethod
    def uniform(cls, a: int) -> "ProbabilityVector":
        if a < 1:
            raise ValueError("a must be >= 1")
        return _uniform_pv(int(a))

    @classmethod
    def parse(cls, text: str) -> "ProbabilityVector":
        """Parse ``"1/3,2/3"`` or ``"0.25,0.75"`` (decimal strings are exact)."""
        return cls([part for part in text.split(",") if part.strip()])

    def __len__(self):
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    @property
    def a(self) -> int:
        return len(self.probs)

    @cached_property
    def is_uniform(self) -> bool:
        return all(p == self.probs[0] for p in self.probs)

    def as_floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    @cached_property
    def _cut_points(self) -> np.ndarray:
        # inner boundaries of the cumulative sums, for inverse-CDF sampling
        return np.cumsum(self.as_floats())[:-1]

    def __str__(self):
        return ",".join(str(p) for p in self.probs)


@lru_cache(maxsize=None)
def _uniform_pv(a: int) -> ProbabilityVector:
    return ProbabilityVector([Fraction(1, a)] * a)


def tensor_product(p, q) -> ProbabilityVector:
    """(p_1 q_1, ..., p_1 q_b, ..., p_a q_b) in lexicographic order."""
    p, q = _as_pv(p), _as_pv(q)
    return ProbabilityVector([x * y for x in p.probs for y in q.probs],
                             from_float=p.from_float or q.from_float)


def _as_pv(p) -> ProbabilityVector:
    if isinstance(p, str):
        return ProbabilityVector.parse(p)
    return p if isinstance(p, ProbabilityVector) else ProbabilityVector(p)


def child_seed(master_seed: int, stream_index: int) -> int:
    """Frozen 64-bit mix of (master_seed, stream_index).

    Delegates to numpy's SeedSequence hashing, which is specified to be
    stable across platforms and numpy releases.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed) & MASK64,
                                spawn_key=(int(stream_index) & MASK64,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RngStream:
    """Deterministic stream for one (master_seed, stream_index) pair.

    Single owner: do not share one stream between threads.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self.generator = np.random.Generator(
            np.random.PCG64(child_seed(self.master_seed, self.stream_index)))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"

    def below(self, k: int) -> int:
        """Uniform integer in 0..k-1."""
        return int(self.generator.integers(0, k))

    def uniform(self, size=None):
        return self.generator.random(size)

    def categorical(self, p: ProbabilityVector, size) -> np.ndarray:
        """Draws from {1..a} with law p."""
        if p.is_uniform:
            return self.generator.integers(1, p.a + 1, size=size)
        u = self.generator.random(size)
        return np.searchsorted(p._cut_points, u, side="right") + 1


# ---------------------------------------------------------------------------
# Models

def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError("n must be >= 1")


def _resolve_p(a, p):
    if int(a) != a or a < 1:
        raise ValueError("a must be >= 1")
    pv = ProbabilityVector.uniform(a) if p is None else _as_pv(p)
    if pv.a != a:
        raise ValueError(f"p has {pv.a} entries but a = {a}")
    return pv


@dataclass(frozen=True)
class RiffleForward:
    """Cut by multinomial pile sizes, then interleave uniformly."""

    n: int
    a: int
    p: ProbabilityVector = None

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "p", _resolve_p(self.a, self.p))

    def describe(self):
        return {"model": "riffle", "n": self.n, "a": self.a, "p": [str(x) for x in self.p]}


@dataclass(frozen=True)
class RiffleInverse:
    """Riffle shuffle drawn through the inverse (digit-sorting) description."""

    n: int
    a: int
    p: ProbabilityVector = None

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "p", _resolve_p(self.a, self.p))

    def describe(self):
        return {"model": "riffle-inverse", "n": self.n, "a": self.a,
                "p": [str(x) for x in self.p]}


@dataclass(frozen=True)
class RandomWord:
    """i.i.d. word with law p; statistics are evaluated on the word itself."""

    n: int
    a: int
    p: ProbabilityVector = None

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "p", _resolve_p(self.a, self.p))

    def describe(self):
        return {"model": "word", "n": self.n, "a": self.a, "p": [str(x) for x in self.p]}


@dataclass(frozen=True)
class UniformPermutation:
    n: int

    def __post_init__(self):
        _check_n(self.n)

    def describe(self):
        return {"model": "uniform", "n": self.n}


@dataclass(frozen=True)
class OrderedTopM:
    """Cut exactly the top m cards and interleave them uniformly."""

    n: int
    m: int

    def __post_init__(self):
        _check_n(self.n)
        if int(self.m) != self.m or not 0 <= self.m <= self.n:
            raise ValueError("m must satisfy 0 <= m <= n")

    def describe(self):
        return {"model": "topm", "n": self.n, "m": self.m}


def _exact_alpha(alpha) -> Fraction:
    # decimal text of a float, so 0.4 means 2/5 rather than its binary value
    if isinstance(alpha, float):
        return Fraction(repr(alpha))
    return _to_fraction(alpha)[0]


def alpha_pile_sizes(n: int, alpha) -> list[tuple[int, int]]:
    """All (n0, n1) with n0 + n1 = n, n0, n1 >= 1 and min(n0, n1) >= alpha*n."""
    alpha = _exact_alpha(alpha)
    if not 0 <= alpha < 1:
        raise ValueError("alpha must satisfy 0 <= alpha < 1")
    lo = max(1, math.ceil(alpha * n))
    sizes = [(n0, n - n0) for n0 in range(lo, n - lo + 1)]
    if not sizes:
        raise ValueError("alpha too large for n")
    return sizes


@dataclass(frozen=True)
class AlphaConstrained:
    """Two-pile shuffle with pile sizes uniform over a constrained set."""

    n: int
    alpha: Fraction

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "alpha", _exact_alpha(self.alpha))
        alpha_pile_sizes(self.n, self.alpha)

    def describe(self):
        return {"model": "alpha", "n": self.n, "alpha": str(self.alpha)}


@dataclass(frozen=True)
class Convolution:
    """Independent shuffles applied to the deck in list order."""

    models: tuple = field(default_factory=tuple)

    def __post_init__(self):
        models = tuple(self.models)
        object.__setattr__(self, "models", models)
        if not models:
            raise ValueError("convolution needs at least one model")
        if any(isinstance(m, RandomWord) for m in models):
            raise ValueError("convolution entries must be shuffles, not words")
        if len({m.n for m in models}) != 1:
            raise ValueError("all convolution entries must share n")

    @property
    def n(self):
        return self.models[0].n

    def describe(self):
        return {"model": "convolution", "n": self.n,
                "parts": [m.describe() for m in self.models]}


ShuffleModel = Union[RiffleForward, RiffleInverse, RandomWord, UniformPermutation,
                     OrderedTopM, AlphaConstrained, Convolution]


# ---------------------------------------------------------------------------
# Deterministic maps shared by samplers and exact oracles

def interleave(labels: Sequence[int]) -> Permutation:
    """Forward placement: position i takes the next card of pile labels[i].

    Pile k holds cards b_1+..+b_{k-1}+1 .. b_1+..+b_k, kept in order.
    """
    labels = list(labels)
    a = max(labels)
    sizes = [0] * (a + 1)
    for d in labels:
        sizes[d] += 1
    next_card = [0] * (a + 1)
    running = 0
    for k in range(1, a + 1):
        next_card[k] = running + 1
        running += sizes[k]
    out = []
    for d in labels:
        out.append(next_card[d])
        next_card[d] += 1
    return Permutation(tuple(out))


def inverse_shuffle(word: Sequence[int]) -> Permutation:
    """Stable-sort the cards by digit, then invert the resulting arrangement."""
    digits = list(word)
    sigma = sorted(range(1, len(digits) + 1), key=lambda card: digits[card - 1])
    return invert(sigma)


def displacement_image(word: Sequence[int]) -> tuple[int, ...]:
    """rho(i) = #{j : X_j < X_i} + #{j <= i : X_j = X_i}, computed by counting."""
    digits = list(word)
    a = max(digits)
    counts = [0] * (a + 2)
    for d in digits:
        counts[d] += 1
    below = [0] * (a + 2)
    for k in range(1, a + 2):
        below[k] = below[k - 1] + counts[k - 1]
    seen = [0] * (a + 2)
    out = []
    for d in digits:
        seen[d] += 1
        out.append(below[d] + seen[d])
    return tuple(out)


@dataclass(frozen=True)
class CoupledSample:
    word: Word
    permutation: Permutation

    def __post_init__(self):
        assert self.permutation.values == displacement_image(self.word.digits), \
            "permutation is not the inverse-shuffle image of the word"


def compose(first, second) -> Permutation:
    """Deck after shuffling by ``first`` and then by ``second``."""
    f = first.values if isinstance(first, Permutation) else tuple(first)
    s = second.values if isinstance(second, Permutation) else tuple(second)
    if len(f) != len(s):
        raise ValueError("cannot compose permutations of different sizes")
    return Permutation(tuple(f[j - 1] for j in s))


# ---------------------------------------------------------------------------
# Scalar samplers

def _fisher_yates(items: list, rng: RngStream) -> list:
    n = len(items)
    if n < 2:
        return items
    # one bounded integer per swap, all drawn in a single call
    picks = rng.generator.integers(0, np.arange(n, 1, -1)).tolist()
    for i, j in zip(range(n - 1, 0, -1), picks):
        items[i], items[j] = items[j], items[i]
    return items


def multinomial_cut(n: int, p, rng: RngStream) -> tuple[int, ...]:
    """Pile sizes ~ multinomial(n; p), tallied from n categorical draws."""
    _check_n(n)
    p = _as_pv(p)
    counts = [0] * p.a
    for d in rng.categorical(p, n):
        counts[d - 1] += 1
    return tuple(counts)


def uniform_interleave(pile_sizes: Sequence[int], rng: RngStream) -> Permutation:
    """Uniform interleaving of piles that keep their internal order."""
    labels = [k for k, b in enumerate(pile_sizes, start=1) for _ in range(b)]
    if not labels:
        raise ValueError("pile sizes must sum to n >= 1")
    return interleave(_fisher_yates(labels, rng))


def sample_riffle_forward(n: int, a: int, p=None, rng: RngStream = None) -> Permutation:
    p = _resolve_p(a, p)
    return uniform_interleave(multinomial_cut(n, p, rng), rng)


def sample_riffle_inverse(n: int, a: int, p=None, rng: RngStream = None) -> CoupledSample:
    _check_n(n)
    p = _resolve_p(a, p)
    word = Word(tuple(rng.categorical(p, n)), a)
    return CoupledSample(word, inverse_shuffle(word.digits))


def sample_uniform(n: int, rng: RngStream) -> Permutation:
    _check_n(n)
    return Permutation(tuple(_fisher_yates(list(range(1, n + 1)), rng)))


def sample_uniform_by_ranks(n: int, rng: RngStream) -> Permutation:
    """Ranks of n i.i.d. U(0,1) draws; the cross-check for :func:`sample_uniform`."""
    _check_n(n)
    return rank_sequence(rng.uniform(n).tolist())


def sample_top_m(n: int, m: int, rng: RngStream) -> Permutation:
    OrderedTopM(n, m)
    return uniform_interleave((m, n - m), rng)


def sample_top_m_inverse(n: int, m: int, rng: RngStream) -> CoupledSample:
    """Uniform arrangement of m low digits (1) and n-m high digits (2)."""
    OrderedTopM(n, m)
    word = Word(tuple(_fisher_yates([1] * m + [2] * (n - m), rng)), 2)
    return CoupledSample(word, inverse_shuffle(word.digits))


def sample_alpha_constrained(n: int, alpha, rng: RngStream) -> Permutation:
    sizes = alpha_pile_sizes(n, alpha)
    return uniform_interleave(sizes[rng.below(len(sizes))], rng)


def sample_convolution(models: Sequence, rng: RngStream) -> Permutation:
    conv = models if isinstance(models, Convolution) else Convolution(tuple(models))
    deck = None
    for model in conv.models:
        draw = sample(model, rng)
        deck = draw if deck is None else compose(deck, draw)
    return deck


def sample(model, rng: RngStream):
    """One draw from ``model``: a Permutation, or a Word for RandomWord."""
    if isinstance(model, RiffleForward):
        return sample_riffle_forward(model.n, model.a, model.p, rng)
    if isinstance(model, RiffleInverse):
        return sample_riffle_inverse(model.n, model.a, model.p, rng).permutation
    if isinstance(model, RandomWord):
        return Word(tuple(rng.categorical(model.p, model.n)), model.a)
    if isinstance(model, UniformPermutation):
        return sample_uniform(model.n, rng)
    if isinstance(model, OrderedTopM):
        return sample_top_m(model.n, model.m, rng)
    if isinstance(model, AlphaConstrained):
        return sample_alpha_constrained(model.n, model.alpha, rng)
    if isinstance(model, Convolution):
        return sample_convolution(model, rng)
    raise TypeError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Batched sampling for Monte Carlo

def _batch_image(words: np.ndarray) -> np.ndarray:
    rows, n = words.shape
    sigma = np.argsort(words, axis=1, kind="stable")
    rho = np.empty_like(sigma)
    positions = np.broadcast_to(np.arange(1, n + 1), (rows, n))
    np.put_along_axis(rho, sigma, positions, axis=1)
    return rho


def _batch_words(rng: RngStream, p: ProbabilityVector, rows: int, n: int) -> np.ndarray:
    return rng.categorical(p, (rows, n))


def sample_batch(model, rows: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray | None]:
    """Draw ``rows`` samples at once.

    Returns ``(perms, words)``: permutations as a (rows, n) array (None for
    RandomWord) and the coupled words for models drawn through digits
    (None otherwise).
    """
    gen = rng.generator
    n = model.n
    if isinstance(model, RandomWord):
        return None, _batch_words(rng, model.p, rows, n)
    if isinstance(model, RiffleInverse):
        words = _batch_words(rng, model.p, rows, n)
        return _batch_image(words), words
    if isinstance(model, RiffleForward):
        # sorted draws are the cut; permuting them interleaves uniformly
        cut = np.sort(_batch_words(rng, model.p, rows, n), axis=1)
        return _batch_image(gen.permuted(cut, axis=1)), None
    if isinstance(model, UniformPermutation):
        deck = np.tile(np.arange(1, n + 1), (rows, 1))
        return gen.permuted(deck, axis=1), None
    if isinstance(model, OrderedTopM):
        labels = np.tile(np.array([1] * model.m + [2] * (n - model.m)), (rows, 1))
        words = gen.permuted(labels, axis=1)
        return _batch_image(words), words
    if isinstance(model, AlphaConstrained):
        sizes = np.array([s[0] for s in alpha_pile_sizes(n, model.alpha)])
        n0 = sizes[gen.integers(0, len(sizes), size=rows)]
        labels = (np.arange(n)[None, :] >= n0[:, None]).astype(np.int64) + 1
        return _batch_image(gen.permuted(labels, axis=1)), None
    if isinstance(model, Convolution):
        deck = None
        for part in model.models:
            draw, _ = sample_batch(part, rows, rng)
            deck = draw if deck is None else np.take_along_axis(deck, draw - 1, axis=1)
        return deck, None
    raise TypeError(f"unknown model {model!r}")


def warn_if_float(p: ProbabilityVector):
    if p.from_float:
        warnings.warn("probability vector built from floats; exact results use "
                      "their binary values", stacklevel=3)
