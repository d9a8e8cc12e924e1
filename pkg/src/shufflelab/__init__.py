"""Riffle shuffles, their permutation statistics, exact laws and Monte Carlo checks."""

__version__ = "0.1.0"

from .perm import (Permutation, StatisticKind, Word, descents, inversions, la_distinct,
                   la_word, local_extrema_distinct, statistic, word_extrema)
from .shufflers import (AlphaConstrained, CoupledSample, Convolution, OrderedTopM,
                        ProbabilityVector, RandomWord, RiffleForward, RiffleInverse,
                        RngStream, UniformPermutation, child_seed, sample,
                        sample_riffle_forward, sample_riffle_inverse, sample_uniform)
from .oracle import BudgetExceeded, ExactDistribution
from .analysis import EmpiricalDistribution, run_monte_carlo

__all__ = [
    "__version__", "Permutation", "StatisticKind", "Word", "descents", "inversions",
    "la_distinct", "la_word", "local_extrema_distinct", "statistic", "word_extrema",
    "AlphaConstrained", "CoupledSample", "Convolution", "OrderedTopM", "ProbabilityVector",
    "RandomWord", "RiffleForward", "RiffleInverse", "RngStream", "UniformPermutation",
    "child_seed", "sample", "sample_riffle_forward", "sample_riffle_inverse",
    "sample_uniform", "BudgetExceeded", "ExactDistribution", "EmpiricalDistribution",
    "run_monte_carlo",
]
