"""Permutation and word types, and the statistic kernels.

Positions are 1-based in docs and error messages; storage is 0-based.
Scalar kernels take any integer sequence. The ``batch_*`` kernels take a
2-D numpy array (one sample per row) and are what the Monte Carlo engine
uses; each is cross-checked against its scalar twin in the tests.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Permutation", "Word", "StatisticKind",
    "descents", "inversions", "inversions_naive", "la_distinct", "la_word",
    "local_extrema_distinct", "word_extrema", "invert", "rank_sequence",
    "statistic", "batch_statistic", "batch_descents", "batch_inversions",
    "batch_la_distinct", "batch_word_extrema_counts",
]


@dataclass(frozen=True)
class Permutation:
    """One-line notation: ``values[i]`` is the card at position i+1."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        n = len(vals)
        if n < 1:
            raise ValueError("permutation must have n >= 1")
        if sorted(vals) != list(range(1, n + 1)):
            raise ValueError(f"not a bijection on 1..{n}: {vals}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class Word:
    digits: tuple[int, ...]
    alphabet_size: int

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be >= 1")
        for pos, d in enumerate(digits, start=1):
            if not 1 <= d <= self.alphabet_size:
                raise ValueError(
                    f"digit {d} at position {pos} outside 1..{self.alphabet_size}")

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, i):
        return self.digits[i]


class StatisticKind(str, enum.Enum):
    DESCENTS = "des"
    INVERSIONS = "inv"
    LONGEST_ALTERNATING = "la"
    LOCAL_MAX_COUNT = "lmax"
    LOCAL_MIN_COUNT = "lmin"

    @classmethod
    def parse(cls, value) -> "StatisticKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown statistic {value!r} (expected one of {names})") from None


def _as_list(seq) -> list[int]:
    xs = list(seq)
    if not xs:
        raise ValueError("empty sequence")
    return xs


def _require_distinct(xs):
    if len(set(xs)) != len(xs):
        raise ValueError("requires distinct entries (use la_word for sequences with ties)")


def descents(seq: Sequence[int]) -> int:
    xs = _as_list(seq)
    return sum(1 for i in range(len(xs) - 1) if xs[i] > xs[i + 1])


def inversions_naive(seq: Sequence[int]) -> int:
    """O(n^2) pair count; kept as the oracle for :func:`inversions`."""
    xs = _as_list(seq)
    n = len(xs)
    return sum(1 for i in range(n) for j in range(i + 1, n) if xs[i] > xs[j])


def inversions(seq: Sequence[int]) -> int:
    """Count pairs i < j with seq[i] > seq[j] by merge sort, O(n log n).

    Ties are not inversions.
    """
    xs = _as_list(seq)
    count = 0
    width = 1
    n = len(xs)
    buf = list(xs)
    while width < n:
        merged = []
        for lo in range(0, n, 2 * width):
            left = buf[lo:lo + width]
            right = buf[lo + width:lo + 2 * width]
            i = j = 0
            while i < len(left) and j < len(right):
                if right[j] < left[i]:
                    # every remaining left element is > right[j]
                    count += len(left) - i
                    merged.append(right[j])
                    j += 1
                else:
                    merged.append(left[i])
                    i += 1
            merged.extend(left[i:])
            merged.extend(right[j:])
        buf = merged
        width *= 2
    return count


def local_extrema_distinct(seq: Sequence[int]) -> tuple[set[int], set[int]]:
    """Interior strict local maxima and minima of a tie-free sequence.

    Returns ``(max_positions, min_positions)`` as 1-based position sets.
    """
    xs = _as_list(seq)
    _require_distinct(xs)
    maxima, minima = set(), set()
    for k in range(1, len(xs) - 1):
        if xs[k - 1] < xs[k] > xs[k + 1]:
            maxima.add(k + 1)
        elif xs[k - 1] > xs[k] < xs[k + 1]:
            minima.add(k + 1)
    return maxima, minima


def la_distinct(seq: Sequence[int]) -> int:
    """Length of the longest alternating subsequence x1 > x2 < x3 > ...

    Uses 1 + [x1 > x2] + (number of interior local extrema), valid for
    distinct entries only.
    """
    xs = _as_list(seq)
    _require_distinct(xs)
    if len(xs) == 1:
        return 1
    maxima, minima = local_extrema_distinct(xs)
    return 1 + (xs[0] > xs[1]) + len(maxima) + len(minima)


def word_extrema(seq: Sequence[int]) -> tuple[set[int], set[int]]:
    """Tie-aware local maxima and minima of a word (1-based positions).

    A minimum at k needs (x_k < x_{k+1} or k = n) and some j < k with
    x_j > x_{j+1} = ... = x_k.  A maximum at k needs (x_k > x_{k+1} or
    k = n) and either some j < k with x_j < x_{j+1} = ... = x_k, or
    x_j = x_k for every j < k.
    """
    xs = _as_list(seq)
    n = len(xs)
    maxima, minima = set(), set()
    for k in range(n):
        last = k == n - 1
        # j: nearest position before k whose value differs from x_k
        j = k - 1
        while j >= 0 and xs[j] == xs[k]:
            j -= 1
        if (last or xs[k] > xs[k + 1]) and (j < 0 or xs[j] < xs[k]):
            maxima.add(k + 1)
        if (last or xs[k] < xs[k + 1]) and j >= 0 and xs[j] > xs[k]:
            minima.add(k + 1)
    return maxima, minima


def la_word(word: Sequence[int]) -> int:
    """Longest alternating subsequence length of a word with ties."""
    maxima, minima = word_extrema(word)
    return len(maxima) + len(minima)


def invert(perm) -> Permutation:
    p = perm if isinstance(perm, Permutation) else Permutation(tuple(perm))
    out = [0] * len(p)
    for i, v in enumerate(p.values, start=1):
        out[v - 1] = i
    return Permutation(tuple(out))


def rank_sequence(reals: Sequence[float]) -> Permutation:
    xs = list(reals)
    if not xs:
        raise ValueError("empty sequence")
    if len(set(xs)) != len(xs):
        raise ValueError("ranks undefined under ties")
    order = sorted(range(len(xs)), key=xs.__getitem__)
    ranks = [0] * len(xs)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return Permutation(tuple(ranks))


def statistic(kind, seq: Sequence[int], *, ties: bool = False) -> int:
    """Evaluate a statistic on one sequence.

    With ``ties=True`` the sequence is treated as a word: LA and the
    extremum counts use the tie-aware definitions.
    """
    kind = StatisticKind.parse(kind)
    if kind is StatisticKind.DESCENTS:
        return descents(seq)
    if kind is StatisticKind.INVERSIONS:
        return inversions(seq)
    if ties:
        maxima, minima = word_extrema(seq)
    else:
        if kind is StatisticKind.LONGEST_ALTERNATING:
            return la_distinct(seq)
        maxima, minima = local_extrema_distinct(seq)
    if kind is StatisticKind.LONGEST_ALTERNATING:
        return len(maxima) + len(minima)
    if kind is StatisticKind.LOCAL_MAX_COUNT:
        return len(maxima)
    return len(minima)


# ---------------------------------------------------------------------------
# Batched kernels: arr has shape (samples, n), integer dtype.

def batch_descents(arr: np.ndarray) -> np.ndarray:
    return (arr[:, :-1] > arr[:, 1:]).sum(axis=1)


def batch_inversions(arr: np.ndarray) -> np.ndarray:
    """Inversions per row via a Fenwick tree vectorised across rows.

    Entries must be positive integers; ties allowed. Works right-to-left,
    counting entries already seen that are strictly smaller. The trees for
    all rows live in one flat buffer indexed ``value * rows + row``.
    """
    rows, n = arr.shape
    if n < 2:
        return np.zeros(rows, dtype=np.int64)
    vmax = int(arr.max())
    sink = vmax + 1  # overflow slot for updates walking past vmax
    flat = np.zeros((vmax + 2) * rows, dtype=np.int32)
    r = np.arange(rows, dtype=np.int64)
    total = np.zeros(rows, dtype=np.int64)
    levels = vmax.bit_length()
    cols = np.ascontiguousarray(arr.T, dtype=np.int64)
    for col in range(n - 1, -1, -1):
        v = cols[col]
        idx = v - 1
        for _ in range(levels):
            # slot 0 is never written, so exhausted walks add zero
            total += flat[idx * rows + r]
            idx &= idx - 1
        idx = v.copy()
        for _ in range(levels):
            flat[idx * rows + r] += 1
            idx = np.minimum(idx + (idx & -idx), sink)
    return total


def _interior_extrema(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    left, mid, right = arr[:, :-2], arr[:, 1:-1], arr[:, 2:]
    maxima = (left < mid) & (mid > right)
    minima = (left > mid) & (mid < right)
    return maxima, minima


def batch_la_distinct(arr: np.ndarray) -> np.ndarray:
    rows, n = arr.shape
    if n == 1:
        return np.ones(rows, dtype=np.int64)
    maxima, minima = _interior_extrema(arr)
    return 1 + (arr[:, 0] > arr[:, 1]) + maxima.sum(axis=1) + minima.sum(axis=1)


def _word_turns(arr: np.ndarray):
    """Per row: sign of the first non-zero step and the direction changes.

    Collapsing runs of equal letters leaves a tie-free sequence whose
    interior extrema are exactly the sign changes between consecutive
    non-zero steps.
    """
    steps = np.sign(np.diff(arr.astype(np.int64), axis=1))
    rows, m = steps.shape
    nonzero = steps != 0
    # index of the most recent non-zero step strictly before each column
    last = np.where(nonzero, np.arange(m), -1)
    last = np.maximum.accumulate(last, axis=1)
    prev = np.concatenate([np.full((rows, 1), -1), last[:, :-1]], axis=1)
    prev_sign = np.where(prev >= 0, np.take_along_axis(steps, np.maximum(prev, 0), axis=1), 0)
    turn_up = nonzero & (prev_sign < 0) & (steps > 0)     # a minimum ended here
    turn_down = nonzero & (prev_sign > 0) & (steps < 0)   # a maximum ended here
    any_step = nonzero.any(axis=1)
    first = np.take_along_axis(steps, nonzero.argmax(axis=1)[:, None], axis=1)[:, 0]
    first = np.where(any_step, first, 0)
    final = np.where(last[:, -1] >= 0,
                     np.take_along_axis(steps, np.maximum(last[:, -1:], 0), axis=1)[:, 0], 0)
    return first, final, turn_up.sum(axis=1), turn_down.sum(axis=1)


def batch_word_extrema_counts(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tie-aware (maxima, minima) counts per row; matches :func:`word_extrema`."""
    rows, n = arr.shape
    if n == 1:
        return np.ones(rows, dtype=np.int64), np.zeros(rows, dtype=np.int64)
    first, final, ups, downs = _word_turns(arr)
    # a max at the end of the first run iff the first move is downward;
    # the last position is a max after an upward move (or no move at all)
    maxima = downs + (first < 0) + (final >= 0)
    minima = ups + (final < 0)
    return maxima.astype(np.int64), minima.astype(np.int64)


def batch_statistic(kind, arr: np.ndarray, *, ties: bool = False) -> np.ndarray:
    kind = StatisticKind.parse(kind)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError("expected a 2-D array with n >= 1 columns")
    if kind is StatisticKind.DESCENTS:
        return batch_descents(arr)
    if kind is StatisticKind.INVERSIONS:
        return batch_inversions(arr)
    if ties:
        maxima, minima = batch_word_extrema_counts(arr)
    elif kind is StatisticKind.LONGEST_ALTERNATING:
        return batch_la_distinct(arr)
    elif arr.shape[1] < 3:
        zeros = np.zeros(arr.shape[0], dtype=np.int64)
        maxima, minima = zeros, zeros
    else:
        mx, mn = _interior_extrema(arr)
        maxima, minima = mx.sum(axis=1), mn.sum(axis=1)
    if kind is StatisticKind.LONGEST_ALTERNATING:
        return maxima + minima
    if kind is StatisticKind.LOCAL_MAX_COUNT:
        return maxima
    return minima
