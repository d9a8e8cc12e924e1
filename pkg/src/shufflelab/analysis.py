"""Monte Carlo engine and the statistical checks built on it.

Sampling is split into fixed-size chunks; chunk i always draws from
``RngStream(master_seed, i)``, so counts do not depend on how many workers
run the chunks or in which order they finish.
"""

from __future__ import annotations

import dataclasses
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from . import moments as mom
from .oracle import (ExactDistribution, exact_dist_uniform, exact_dist_words,
                     exact_inv_dist_via_galois, exact_perm_law_riffle, convolve_laws,
                     pushforward)
from .perm import (StatisticKind, batch_descents, batch_inversions, batch_la_distinct,
                   batch_statistic)
from .shufflers import (RandomWord, RiffleForward, RiffleInverse, RngStream,
                        UniformPermutation, _resolve_p, sample_batch, tensor_product)

__all__ = [
    "CHUNK_SIZE", "EmpiricalDistribution", "NormalityReport", "RateReport",
    "run_monte_carlo", "kolmogorov_to_normal", "tv_distance", "tv_bound",
    "theorem24_check", "convolution_check", "verify_couplings", "rate_check",
    "dominance_check", "mcdiarmid_tail_check", "KS_SE_FACTOR",
]

CHUNK_SIZE = 2 ** 16
# cap on array elements per generated sub-batch
_BATCH_CELLS = 2 ** 22
KS_SE_FACTOR = 0.87


def _sub_batch_rows(n: int, cells_per_row: int | None = None) -> int:
    per_row = cells_per_row if cells_per_row is not None else n
    return max(1, _BATCH_CELLS // max(per_row, 1))


@dataclass
class EmpiricalDistribution:
    counts: dict[int, int]
    n_samples: int
    model: dict
    statistic: str
    master_seed: int
    worker_count: int = 1
    chunk_size: int = CHUNK_SIZE

    def __post_init__(self):
        self.counts = dict(sorted((int(k), int(v)) for k, v in self.counts.items() if v))
        if sum(self.counts.values()) != self.n_samples:
            raise ValueError("counts do not sum to n_samples")

    def probabilities(self) -> dict[int, float]:
        return {k: c / self.n_samples for k, c in self.counts.items()}

    def mean(self) -> float:
        return sum(k * c for k, c in self.counts.items()) / self.n_samples

    def variance(self) -> float:
        m = self.mean()
        return sum(c * (k - m) ** 2 for k, c in self.counts.items()) / self.n_samples

    def to_dict(self) -> dict:
        # worker_count is deliberately absent: results must not depend on it
        return {"statistic": self.statistic, "model": self.model,
                "n_samples": self.n_samples, "seed": self.master_seed,
                "chunk_size": self.chunk_size,
                "counts": {str(k): v for k, v in self.counts.items()}}

    @classmethod
    def from_dict(cls, data: Mapping) -> "EmpiricalDistribution":
        return cls({int(k): v for k, v in data["counts"].items()}, data["n_samples"],
                   data["model"], data["statistic"], data["seed"],
                   chunk_size=data.get("chunk_size", CHUNK_SIZE))


def _chunk_counts(model, stat: StatisticKind, rows: int, master_seed: int, index: int) -> Counter:
    rng = RngStream(master_seed, index)
    step = _sub_batch_rows(model.n)
    counts: Counter = Counter()
    done = 0
    while done < rows:
        take = min(step, rows - done)
        perms, words = sample_batch(model, take, rng)
        if isinstance(model, RandomWord):
            values = batch_statistic(stat, words, ties=True)
        else:
            values = batch_statistic(stat, perms)
        keys, freq = np.unique(values, return_counts=True)
        counts.update(dict(zip(keys.tolist(), freq.tolist())))
        done += take
    return counts


def _chunks(n_samples: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(i, min(chunk_size, n_samples - start))
            for i, start in enumerate(range(0, n_samples, chunk_size))]


def _map_chunks(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def run_monte_carlo(model, stat, n_samples: int, master_seed: int, workers: int = 1,
                    chunk_size: int = CHUNK_SIZE) -> EmpiricalDistribution:
    stat = StatisticKind.parse(stat)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(model, stat, rows, master_seed, idx) for idx, rows in _chunks(n_samples, chunk_size)]
    total: Counter = Counter()
    for part in _map_chunks(_chunk_counts, jobs, workers):
        total.update(part)
    return EmpiricalDistribution(dict(total), n_samples, model.describe(), stat.value,
                                 master_seed, workers, chunk_size)


# ---------------------------------------------------------------------------
# Distances

@dataclass
class NormalityReport:
    d_k: float
    standardization: str
    mean: float
    sd: float
    moment_source: str
    n: int | None
    n_samples: int | None

    def to_dict(self):
        return dataclasses.asdict(self)


def _support_probs(dist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dist, EmpiricalDistribution):
        keys = np.array(list(dist.counts), dtype=float)
        probs = np.array(list(dist.counts.values()), dtype=float) / dist.n_samples
    elif isinstance(dist, ExactDistribution):
        keys = np.array(list(dist.support), dtype=float)
        probs = np.array([float(p) for p in dist.support.values()])
    else:
        items = sorted(dist.items())
        keys = np.array([k for k, _ in items], dtype=float)
        probs = np.array([float(v) for _, v in items])
    order = np.argsort(keys)
    return keys[order], probs[order]


def kolmogorov_to_normal(dist, mean: float, sd: float, *, standardization: str = "exact-variance",
                         moment_source: str = "supplied", n: int | None = None) -> NormalityReport:
    """sup_z |F(z) - Phi(z)| for a discrete law standardised by (mean, sd).

    The sup over the reals is reached at a jump: compare Phi with the CDF
    both just before and at each support point.
    """
    if not sd > 0:
        raise ValueError("sd must be > 0 (got sd ≤ 0)")
    keys, probs = _support_probs(dist)
    if len(keys) == 0:
        raise ValueError("empty distribution")
    cdf_at = np.cumsum(probs)
    cdf_before = np.concatenate([[0.0], cdf_at[:-1]])
    # ndtr is the Cephes normal CDF (absolute error ~1e-16)
    phi = ndtr((keys - float(mean)) / float(sd))
    d_k = float(max(np.abs(cdf_at - phi).max(), np.abs(cdf_before - phi).max()))
    n_samples = dist.n_samples if isinstance(dist, EmpiricalDistribution) else None
    return NormalityReport(min(d_k, 1.0), standardization, float(mean), float(sd),
                           moment_source, n, n_samples)


def _as_prob_map(dist) -> dict:
    if isinstance(dist, ExactDistribution):
        return dict(dist.support)
    if isinstance(dist, EmpiricalDistribution):
        return {k: Fraction(c, dist.n_samples) for k, c in dist.counts.items()}
    return dict(dist)


def tv_distance(d1, d2):
    """Half the L1 distance between two integer-valued laws.

    Exact (``Fraction``) when both inputs are rational.
    """
    p, q = _as_prob_map(d1), _as_prob_map(d2)
    for dist in (p, q):
        total = sum(dist.values())
        if any(v < 0 for v in dist.values()):
            raise ValueError("negative probability")
        exact = all(isinstance(v, (int, Fraction)) for v in dist.values())
        if (exact and total != 1) or (not exact and abs(total - 1) > 1e-9):
            raise ValueError("distribution is not normalised")
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys) / 2


def tv_bound(n: int, a: int) -> Fraction:
    """1 - a(a-1)...(a-n+1)/a^n: the chance an a-letter word of length n repeats a letter."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if a < n:
        raise ValueError("bound requires a ≥ n")
    distinct = Fraction(1)
    for i in range(n):
        distinct *= Fraction(a - i, a)
    return 1 - distinct


def theorem24_check(n: int, a: int, stat="inv", *, budget=None) -> dict:
    """Exact TV between the statistic under the unbiased a-shuffle and under S_n."""
    stat = StatisticKind.parse(stat)
    riffle = pushforward(exact_perm_law_riffle(n, a, budget=budget), stat)
    uniform = exact_dist_uniform(n, stat, budget=budget)
    tv = tv_distance(riffle, uniform)
    bound = tv_bound(n, a)
    return {"n": n, "a": a, "statistic": stat.value, "tv": tv, "bound": bound,
            "holds": tv <= bound}


def convolution_check(n: int, p, q, *, budget=None) -> dict:
    """TV between (shuffle with p, then with q) and the single shuffle with p (x) q."""
    pv, qv = _resolve_p(len(p), p), _resolve_p(len(q), q)
    left = convolve_laws(exact_perm_law_riffle(n, pv.a, pv, budget=budget),
                         exact_perm_law_riffle(n, qv.a, qv, budget=budget), budget=budget)
    pq = tensor_product(pv, qv)
    right = exact_perm_law_riffle(n, pq.a, pq, budget=budget)
    tv = sum(abs(left.get(k, 0) - right.get(k, 0)) for k in set(left) | set(right)) / 2
    return {"n": n, "p": [str(x) for x in pv], "q": [str(x) for x in qv],
            "product": [str(x) for x in pq], "tv": tv, "holds": tv == 0}


# ---------------------------------------------------------------------------
# Coupling identities

@dataclass
class CouplingReport:
    n: int
    a: int
    p: list
    n_samples: int
    seed: int
    checks: dict[str, int]
    failures: dict[str, int]
    failure_examples: list = field(default_factory=list)
    strict_tail_mismatches: int | None = None
    la_pathwise_agreement: int = 0

    @property
    def total_failures(self) -> int:
        return sum(self.failures.values())

    @property
    def passed(self) -> bool:
        return self.total_failures == 0

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["total_failures"] = self.total_failures
        out["verdict"] = "PASS" if self.passed else "FAIL"
        return out


_MAX_EXAMPLES = 20


def _coupling_chunk(n, a, pv, rows, seed, index):
    rng = RngStream(seed, index)
    model = RiffleInverse(n, a, pv)
    step = _sub_batch_rows(n, n * n)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    lower_eq = np.tril(np.ones((n, n), dtype=bool))
    checks = Counter()
    failures = Counter()
    examples = []
    strict_mismatch = 0
    la_agree = 0
    done = 0

    def record(name, bad, offset, words):
        checks[name] += bad.shape[0]
        hits = np.flatnonzero(bad)
        failures[name] += len(hits)
        for row in hits[:_MAX_EXAMPLES - len(examples)]:
            examples.append({"check": name, "stream_index": index, "row": int(offset + row),
                             "word": words[row].tolist()})

    while done < rows:
        take = min(step, rows - done)
        rho, x = sample_batch(model, take, rng)
        gt_x = x[:, :, None] > x[:, None, :]
        # rho(i) = #{j : X_j < X_i} + #{j <= i : X_j = X_i}
        image = (x[:, None, :] < x[:, :, None]).sum(axis=2) + \
            ((x[:, None, :] == x[:, :, None]) & lower_eq).sum(axis=2)
        record("displacement", (image != rho).any(axis=1), done, x)
        pair_rho = rho[:, :, None] > rho[:, None, :]
        record("lemma_pairs", ((pair_rho != gt_x) & upper).any(axis=(1, 2)), done, x)
        word_inv = (gt_x & upper).sum(axis=(1, 2))
        record("inversions", batch_inversions(rho) != word_inv, done, x)
        word_des = (x[:, :-1] > x[:, 1:]).sum(axis=1)
        record("descents", batch_descents(rho) != word_des, done, x)
        la_rho = batch_la_distinct(rho)
        if a == 2 and n >= 2:
            tail_le = x[:, -2] <= x[:, -1]
            record("la_two_shuffle", la_rho != 2 * word_des + tail_le, done, x)
            strict_mismatch += int((la_rho != 2 * word_des + (x[:, -2] < x[:, -1])).sum())
            if n >= 3:
                mid = rho[:, 1:-1]
                is_max = (rho[:, :-2] < mid) & (mid > rho[:, 2:])
                is_min = (rho[:, :-2] > mid) & (mid < rho[:, 2:])
                desc_here = x[:, 1:-1] > x[:, 2:]
                desc_before = x[:, :-2] > x[:, 1:-1]
                record("extremum_max_iff_descent", (is_max != desc_here).any(axis=1), done, x)
                record("extremum_min_iff_prior_descent", (is_min != desc_before).any(axis=1), done, x)
        la_agree += int((la_rho == batch_statistic("la", x, ties=True)).sum())
        done += take
    return checks, failures, examples, strict_mismatch, la_agree


def verify_couplings(n: int, a: int, p=None, n_samples: int = 10_000, seed: int = 0,
                     workers: int = 1, chunk_size: int = CHUNK_SIZE) -> CouplingReport:
    """Check the word/shuffle identities on every coupled sample.

    Asserted per sample: the displacement formula; rho(i) > rho(k) iff
    X_i > X_k for i < k; inv and des agree with their word counterparts;
    and for a = 2, LA(rho) = 2 des(X) + [X_{n-1} <= X_n] together with
    "local max at k iff descent at k, local min at k iff descent at k-1".
    Recorded only: mismatches of the variant with a strict X_{n-1} < X_n,
    and how often LA(rho) equals the tie-aware LA of the word.
    """
    pv = _resolve_p(a, p)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    jobs = [(n, a, pv, rows, seed, idx) for idx, rows in _chunks(n_samples, chunk_size)]
    checks, failures = Counter(), Counter()
    examples, strict, agree = [], 0, 0
    for c, f, ex, pm, la in _map_chunks(_coupling_chunk, jobs, workers):
        checks.update(c)
        failures.update(f)
        examples.extend(ex)
        strict += pm
        agree += la
    examples = sorted(examples, key=lambda e: (e["stream_index"], e["row"], e["check"]))
    return CouplingReport(n, a, [str(x) for x in pv], n_samples, seed,
                          dict(sorted(checks.items())),
                          {k: failures.get(k, 0) for k in sorted(checks)},
                          examples[:_MAX_EXAMPLES],
                          strict if a == 2 and n >= 2 else None, agree)


# ---------------------------------------------------------------------------
# Rates

@dataclass
class RateReport:
    statistic: str
    standardization: str
    grid: list[dict]
    c_hat: float
    n_samples: int
    seed: int
    verdict: str
    rule: str

    def to_dict(self):
        return dataclasses.asdict(self)


def _standardizer(model, stat: StatisticKind, standardization: str):
    report = mom.moments_for(model, stat)
    if standardization == "exact-variance":
        if report.variance <= 0:
            raise ValueError("degenerate statistic")
        return float(report.mean), report.sd, "closed-form"
    if standardization in ("theorem", "theorem-denominator"):
        if not isinstance(model, (RiffleForward, RiffleInverse, RandomWord)) or model.a < 2:
            raise ValueError("theorem scaling is defined for a-shuffles with a >= 2")
        if stat is StatisticKind.INVERSIONS:
            return float(report.mean), mom.inv_std_scale_theorem(model.n, model.a), "theorem"
        if stat is StatisticKind.DESCENTS:
            return float(report.mean), mom.des_std_scale_theorem(model.n, model.a), "theorem"
        raise ValueError("theorem scaling only exists for des and inv")
    raise ValueError(f"unknown standardization {standardization!r}")


def normality(model, stat, n_samples: int, seed: int, *, standardization="exact-variance",
              workers: int = 1) -> NormalityReport:
    stat = StatisticKind.parse(stat)
    mean, sd, source = _standardizer(model, stat, standardization)
    emp = run_monte_carlo(model, stat, n_samples, seed, workers)
    return kolmogorov_to_normal(emp, mean, sd, standardization=standardization,
                                moment_source=source, n=model.n)


def rate_check(family: Callable[[int], object], stat, grid: Sequence[int], n_samples: int,
               seed: int, *, standardization="exact-variance", workers: int = 1,
               growth: float = 1.25) -> RateReport:
    """d_K(n) * sqrt(n) over an increasing grid; PASS when it does not grow.

    Rule: value at the largest n <= growth * value at the smallest n
    + 3 Monte Carlo standard errors (0.87/sqrt(samples), scaled by sqrt(n)).
    Each grid point uses its own stream family (seed + grid position).
    """
    stat = StatisticKind.parse(stat)
    grid = list(grid)
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid needs at least 3 increasing points")
    rows = []
    for pos, n in enumerate(grid):
        model = family(n)
        rep = normality(model, stat, n_samples, seed + pos, standardization=standardization,
                        workers=workers)
        rows.append({"n": n, "d_k": rep.d_k, "scaled": rep.d_k * math.sqrt(n),
                     "mean": rep.mean, "sd": rep.sd})
    c_hat = max(r["scaled"] for r in rows)
    se = KS_SE_FACTOR / math.sqrt(n_samples)
    limit = growth * rows[0]["scaled"] + 3 * se * math.sqrt(grid[-1])
    verdict = "PASS" if rows[-1]["scaled"] <= limit else "FAIL"
    rule = f"scaled(n_max) <= {growth} * scaled(n_min) + 3 * {KS_SE_FACTOR}/sqrt(samples) * sqrt(n_max)"
    return RateReport(stat.value, standardization, rows, c_hat, n_samples, seed, verdict, rule)


# ---------------------------------------------------------------------------
# Dominance and tails

def dominance_check(n: int, a_list: Sequence[int], *, budget=None) -> dict:
    """Inversions: CDF of the 2-shuffle >= CDF of the a-shuffle >= uniform CDF, pointwise."""
    a_list = sorted(set(a_list) | {2})
    laws = {a: exact_inv_dist_via_galois(n, a, budget=budget) for a in a_list}
    uniform = exact_dist_uniform(n, "inv", budget=budget)
    top = n * (n - 1) // 2
    violations = []
    for a in a_list:
        for v in range(top + 1):
            f2, fa, fu = laws[2].cdf(v), laws[a].cdf(v), uniform.cdf(v)
            if not f2 >= fa >= fu:
                violations.append({"a": a, "v": v, "F2": str(f2), "Fa": str(fa), "Funiform": str(fu)})
    return {"n": n, "a_list": a_list, "violations": violations,
            "verdict": "PASS" if not violations else "FAIL",
            "cdf": {str(a): [str(laws[a].cdf(v)) for v in range(top + 1)] for a in a_list}
            | {"uniform": [str(uniform.cdf(v)) for v in range(top + 1)]}}


def mcdiarmid_tail_check(n: int, n_samples: int, seed: int, workers: int = 1) -> dict:
    """Empirical P(|LA - mean| >= t) against 2 exp(-2 t^2 / (9 n)) for uniform permutations."""
    if n < 2:
        raise ValueError("n must be >= 2")
    mu = mom.la_moments_uniform(n).mean
    emp = run_monte_carlo(UniformPermutation(n), "la", n_samples, seed, workers)
    rows = []
    for t in range(1, math.ceil(3 * math.sqrt(n)) + 1):
        hits = sum(c for k, c in emp.counts.items() if abs(k - mu) >= t)
        freq = hits / n_samples
        bound = 2 * math.exp(-2 * t * t / (9 * n))
        b = min(bound, 1.0)
        slack = 3 * math.sqrt(b * (1 - b) / n_samples)
        rows.append({"t": t, "frequency": freq, "bound": bound, "ok": freq <= bound + slack})
    return {"n": n, "n_samples": n_samples, "seed": seed, "mean": str(mu), "rows": rows,
            "verdict": "PASS" if all(r["ok"] for r in rows) else "FAIL"}
