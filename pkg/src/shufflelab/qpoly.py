"""Integer polynomials in q and Gaussian (q-)binomial / q-multinomial coefficients."""

from __future__ import annotations

from functools import lru_cache
from math import factorial
from typing import Sequence

__all__ = ["IntPolynomial", "q_binomial", "q_multinomial", "multinomial"]


class IntPolynomial:
    """Polynomial with integer coefficients; ``coeffs[k]`` multiplies q**k.

    Trailing zeros are stripped, so the zero polynomial has no coefficients.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[int] = ()):
        cs = [int(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> "IntPolynomial":
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def __eq__(self, other):
        if isinstance(other, IntPolynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, int):
            return self.coeffs == IntPolynomial([other]).coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return IntPolynomial(out)

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        if not self.coeffs or not other.coeffs:
            return IntPolynomial()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    out[i + j] += x * y
        return IntPolynomial(out)

    def shift(self, k: int) -> "IntPolynomial":
        """Multiply by q**k."""
        return IntPolynomial([0] * k + list(self.coeffs)) if self.coeffs else self

    def __call__(self, q):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * q + c
        return acc

    def coefficient_sum(self) -> int:
        return sum(self.coeffs)

    def __getitem__(self, k: int) -> int:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __repr__(self):
        return f"IntPolynomial({list(self.coeffs)})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if k == 0 else ("q" if k == 1 else f"q^{k}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}{mono}")
        return " + ".join(terms)


@lru_cache(maxsize=None)
def q_binomial(n: int, k: int) -> IntPolynomial:
    """[n choose k]_q via [n;k] = [n-1;k-1] + q^k [n-1;k]."""
    if k < 0 or k > n:
        return IntPolynomial()
    if k == 0 or k == n:
        return IntPolynomial([1])
    return q_binomial(n - 1, k - 1) + q_binomial(n - 1, k).shift(k)


def q_multinomial(composition: Sequence[int]) -> IntPolynomial:
    """Inversion generating function of arrangements of {1^b1, ..., a^ba}.

    Built as the product of [b1+..+bi choose bi]_q over i.
    """
    result = IntPolynomial([1])
    total = 0
    for b in composition:
        if b < 0:
            raise ValueError("composition parts must be >= 0")
        total += b
        result = result * q_binomial(total, b)
    return result


def multinomial(composition: Sequence[int]) -> int:
    out = factorial(sum(composition))
    for b in composition:
        out //= factorial(b)
    return out
