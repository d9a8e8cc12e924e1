"""Command-line front end: ``shufflelab <command> [flags]``.

stdout carries data (JSON by default), stderr diagnostics. Exit codes:
0 ok, 2 bad input, 3 enumeration budget exceeded, 4 a checked claim failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction

from . import __version__
from . import analysis, moments, oracle
from .perm import StatisticKind
from .shufflers import (AlphaConstrained, Convolution, OrderedTopM, ProbabilityVector,
                        RandomWord, RiffleForward, RiffleInverse, RngStream,
                        UniformPermutation, sample_batch)

SCHEMA_VERSION = 1
EXIT_BAD_INPUT, EXIT_BUDGET, EXIT_VERDICT = 2, 3, 4
MODELS = ["riffle", "riffle-inverse", "uniform", "topm", "alpha", "word", "convolution"]


class InputError(ValueError):
    pass


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if hasattr(obj, "item"):  # numpy scalar
        return obj.item()
    if isinstance(obj, StatisticKind):
        return obj.value
    return obj


# ---------------------------------------------------------------------------
# Model construction

def _parse_p(text):
    if text is None:
        return None
    try:
        return ProbabilityVector.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"--p: {exc}") from None


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise InputError(f"--{name} is required for this command/model")


def _check_positive(args):
    if getattr(args, "n", None) is not None and args.n < 1:
        raise InputError("--n: n must be ≥ 1")
    if getattr(args, "a", None) is not None and args.a < 1:
        raise InputError("a must be ≥ 1")
    if getattr(args, "samples", None) is not None and args.samples < 1:
        raise InputError("--samples: must be ≥ 1")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        raise InputError("--workers: must be ≥ 1")


def _single_model(name, n, a=None, p=None, m=None, alpha=None):
    if name in ("riffle", "riffle-inverse", "word"):
        if p is not None and a is None:
            a = p.a
        if a is None:
            raise InputError(f"--a is required for model {name}")
        if a < 1:
            raise InputError("a must be ≥ 1")
        if p is not None and p.a != a:
            raise InputError(f"--p has {p.a} entries but --a is {a}")
        cls = {"riffle": RiffleForward, "riffle-inverse": RiffleInverse, "word": RandomWord}[name]
        return cls(n, a, p)
    if name == "uniform":
        return UniformPermutation(n)
    if name == "topm":
        if m is None:
            raise InputError("--m is required for model topm")
        return OrderedTopM(n, m)
    if name == "alpha":
        if alpha is None:
            raise InputError("--alpha is required for model alpha")
        try:
            return AlphaConstrained(n, Fraction(alpha))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"--alpha: {exc}") from None
    raise InputError(f"--model: unknown model {name!r}")


def parse_conv(spec: str, n: int) -> Convolution:
    """``riffle:a=2;riffle:a=2:p=1/3,2/3;topm:m=3`` -> Convolution, applied left to right."""
    parts = []
    for chunk in filter(None, (c.strip() for c in spec.split(";"))):
        name, *fields = chunk.split(":")
        kw = {}
        for item in fields:
            key, _, value = item.partition("=")
            if key == "a" or key == "m":
                kw[key] = int(value)
            elif key == "p":
                kw["p"] = _parse_p(value)
            elif key == "alpha":
                kw["alpha"] = value
            else:
                raise InputError(f"--conv: unknown key {key!r} in {chunk!r}")
        if name in ("convolution", "word"):
            raise InputError(f"--conv: {name} cannot be a convolution factor")
        parts.append(_single_model(name, n, **kw))
    if not parts:
        raise InputError("--conv: empty convolution")
    return Convolution(tuple(parts))


def build_model(args):
    _require(args, "n")
    if args.model == "convolution":
        _require(args, "conv")
        return parse_conv(args.conv, args.n)
    return _single_model(args.model, args.n, args.a, _parse_p(args.p), args.m, args.alpha)


# ---------------------------------------------------------------------------
# Exact laws for any model

def exact_law(model, stat: StatisticKind, budget=None) -> oracle.ExactDistribution:
    if isinstance(model, RandomWord):
        if stat is StatisticKind.LONGEST_ALTERNATING:
            return oracle.exact_la_word_dist_dp(model.n, model.a, model.p, budget=budget)
        if stat is StatisticKind.INVERSIONS:
            return oracle.exact_inv_dist_via_galois(model.n, model.a, model.p, budget=budget)
        if stat is StatisticKind.DESCENTS:
            return oracle.exact_des_dist_dp(model.n, model.a, model.p, budget=budget)
        return oracle.exact_dist_words(model.n, model.a, model.p, stat, budget=budget)
    if isinstance(model, (RiffleForward, RiffleInverse)):
        # the shuffle inherits inv and des from its coupled word
        if stat is StatisticKind.INVERSIONS:
            dist = oracle.exact_inv_dist_via_galois(model.n, model.a, model.p, budget=budget)
        elif stat is StatisticKind.DESCENTS:
            dist = oracle.exact_des_dist_dp(model.n, model.a, model.p, budget=budget)
        else:
            law = oracle.exact_perm_law_riffle(model.n, model.a, model.p, budget=budget)
            return oracle.pushforward(law, stat, model.describe())
        return oracle.ExactDistribution(dist.support, model.describe(), stat.value)
    if isinstance(model, UniformPermutation):
        return oracle.exact_dist_uniform(model.n, stat, budget=budget)
    return oracle.pushforward(exact_perm_law(model, budget), stat, model.describe())


def exact_perm_law(model, budget=None):
    if isinstance(model, (RiffleForward, RiffleInverse)):
        return oracle.exact_perm_law_riffle(model.n, model.a, model.p, budget=budget)
    if isinstance(model, UniformPermutation):
        return oracle.exact_perm_law_uniform(model.n, budget=budget)
    if isinstance(model, OrderedTopM):
        return oracle.exact_perm_law_topm(model.n, model.m, budget=budget)
    if isinstance(model, AlphaConstrained):
        return oracle.exact_perm_law_alpha(model.n, model.alpha, budget=budget)
    if isinstance(model, Convolution):
        law = None
        for part in model.models:
            nxt = exact_perm_law(part, budget)
            law = nxt if law is None else oracle.convolve_laws(law, nxt, budget=budget)
        return law
    raise InputError("no permutation law for a word model")


# ---------------------------------------------------------------------------
# Commands. Each returns (result dict, verdict ok?)

def cmd_sample(args):
    model = build_model(args)
    perms, words = sample_batch(model, args.samples, RngStream(args.seed, 0))
    rows = (words if perms is None else perms).tolist()
    return {"model": model.describe(), "samples": rows}, True


def cmd_exact(args):
    model = build_model(args)
    dist = exact_law(model, StatisticKind.parse(args.stat))
    out = dist.to_dict()
    out["mean"], out["variance"] = dist.mean(), dist.variance()
    return out, True


def cmd_simulate(args):
    model = build_model(args)
    emp = analysis.run_monte_carlo(model, args.stat, args.samples, args.seed, args.workers)
    out = emp.to_dict()
    out["mean"], out["variance"] = emp.mean(), emp.variance()
    return out, True


def cmd_moments(args):
    model = build_model(args)
    stat = StatisticKind.parse(args.stat)
    if isinstance(model, RandomWord) and stat is StatisticKind.LONGEST_ALTERNATING:
        rep = moments.la_moments_words(model.n, model.a, corrected=args.corrected)
    else:
        rep = moments.moments_for(model, stat)
    return rep.to_dict(), True


def _normality_report(args, model):
    stat = StatisticKind.parse(args.stat)
    if args.mean is not None or args.sd is not None:
        _require(args, "mean", "sd")
        emp = analysis.run_monte_carlo(model, stat, args.samples, args.seed, args.workers)
        return analysis.kolmogorov_to_normal(emp, args.mean, args.sd, standardization="supplied",
                                             moment_source="command line", n=model.n)
    return analysis.normality(model, stat, args.samples, args.seed,
                              standardization=args.standardization, workers=args.workers)


def cmd_normality(args):
    rep = _normality_report(args, build_model(args))
    out = rep.to_dict()
    ok = True
    if args.threshold is not None:
        ok = rep.d_k < args.threshold
        out["threshold"] = args.threshold
        out["verdict"] = "PASS" if ok else "FAIL"
    return out, ok


def cmd_tvbound(args):
    _require(args, "n", "a")
    bound = analysis.tv_bound(args.n, args.a)
    out = {"bound": float(bound), "bound_exact": bound}
    ok = True
    if args.stat is not None:
        check = analysis.theorem24_check(args.n, args.a, args.stat)
        out.update(tv=check["tv"], holds=check["holds"], statistic=check["statistic"])
        out["verdict"] = "PASS" if check["holds"] else "FAIL"
        ok = check["holds"]
    return out, ok


def cmd_convolution_check(args):
    _require(args, "n", "p", "q")
    out = analysis.convolution_check(args.n, _parse_p(args.p), _parse_p(args.q))
    out["verdict"] = "PASS" if out["holds"] else "FAIL"
    return out, out["holds"]


def cmd_dominance(args):
    _require(args, "n")
    out = analysis.dominance_check(args.n, _int_list(args.a_list, "--a-list"))
    return out, out["verdict"] == "PASS"


def cmd_verify_couplings(args):
    _require(args, "n", "a")
    rep = analysis.verify_couplings(args.n, args.a, _parse_p(args.p), args.samples, args.seed,
                                    workers=args.workers)
    out = rep.to_dict()
    out["failures_by_check"] = out.pop("failures")
    out["failures"] = out.pop("total_failures")
    return out, rep.passed


def cmd_rate(args):
    _require(args, "a")
    grid = _int_list(args.grid, "--grid")
    p = _parse_p(args.p)
    name = args.model or "riffle"

    def family(n):
        return _single_model(name, n, args.a, p, args.m, args.alpha)

    rep = analysis.rate_check(family, args.stat, grid, args.samples, args.seed,
                              standardization=args.standardization, workers=args.workers)
    return rep.to_dict(), rep.verdict == "PASS"


def cmd_tail(args):
    _require(args, "n")
    out = analysis.mcdiarmid_tail_check(args.n, args.samples, args.seed, args.workers)
    return out, out["verdict"] == "PASS"


def cmd_la_compare(args):
    _require(args, "n", "a")
    out = oracle.la_law_comparison(args.n, args.a, _parse_p(args.p))
    return out, True


def _int_list(text, flag):
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except (AttributeError, ValueError):
        raise InputError(f"{flag}: expected comma-separated integers") from None
    if not values:
        raise InputError(f"{flag}: empty list")
    return values


# ---------------------------------------------------------------------------
# Parser

def _add_model_flags(p, default_model=None):
    p.add_argument("--model", choices=MODELS, default=default_model)
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--p", help="probability vector, e.g. 1/3,2/3 or 0.25,0.75")
    p.add_argument("--m", type=int, help="top-m cut size")
    p.add_argument("--alpha", help="pile-size constraint, e.g. 1/4")
    p.add_argument("--conv", help="convolution factors, e.g. 'riffle:a=2;riffle:a=2:p=1/3,2/3'")


def _add_stat(p, default="inv"):
    p.add_argument("--stat", default=default, choices=[k.value for k in StatisticKind])


def _add_mc(p, samples=None):
    p.add_argument("--samples", type=int, default=samples, required=samples is None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)


def _add_standardization(p):
    p.add_argument("--standardization", default="exact-variance",
                   choices=["exact-variance", "theorem-denominator"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shufflelab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("--format", choices=["json", "csv", "text"], default="json")
        p.add_argument("--output", help="write to this file instead of stdout")
        return p

    p = command("sample", cmd_sample, "draw permutations (or words)")
    _add_model_flags(p, "riffle")
    _add_mc(p, samples=1)

    p = command("exact", cmd_exact, "exact law of a statistic")
    _add_model_flags(p, "riffle")
    _add_stat(p)

    p = command("simulate", cmd_simulate, "Monte Carlo counts of a statistic")
    _add_model_flags(p, "riffle")
    _add_stat(p)
    _add_mc(p)

    p = command("moments", cmd_moments, "closed-form mean and variance")
    _add_model_flags(p, "riffle")
    _add_stat(p)
    p.add_argument("--corrected", action="store_true",
                   help="word LA: use the transfer-matrix variance constant")

    p = command("normality", cmd_normality, "Kolmogorov distance to the normal law")
    _add_model_flags(p, "riffle")
    _add_stat(p)
    _add_mc(p)
    _add_standardization(p)
    p.add_argument("--mean", type=float)
    p.add_argument("--sd", type=float)
    p.add_argument("--threshold", type=float, help="exit 4 unless d_K is below this")

    p = command("tvbound", cmd_tvbound, "finite-a total variation bound")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--stat", choices=[k.value for k in StatisticKind],
                   help="also compute the exact distance for this statistic")

    p = command("convolution-check", cmd_convolution_check, "p-shuffle then q-shuffle vs the p(x)q shuffle")
    p.add_argument("--n", type=int)
    p.add_argument("--p")
    p.add_argument("--q")

    p = command("dominance", cmd_dominance, "CDF ordering of inversions across a")
    p.add_argument("--n", type=int)
    p.add_argument("--a-list", default="2,3,4")

    p = command("verify-couplings", cmd_verify_couplings, "pathwise word/shuffle identities")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--p")
    _add_mc(p, samples=10_000)

    p = command("rate", cmd_rate, "d_K * sqrt(n) over a grid of n")
    _add_model_flags(p, "riffle")
    _add_stat(p)
    p.add_argument("--grid", default="50,100,200,400")
    _add_mc(p)
    _add_standardization(p)

    p = command("tail", cmd_tail, "LA concentration under uniform permutations")
    p.add_argument("--n", type=int)
    _add_mc(p)

    p = command("la-compare", cmd_la_compare, "exact LA law of the shuffle vs of its word")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--p")
    return parser


# ---------------------------------------------------------------------------
# Output

_SKIP_PARAMS = {"func", "format", "output", "workers", "command"}


def make_report(args, result, elapsed):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _SKIP_PARAMS}
    runtime = {"elapsed_seconds": round(elapsed, 6)}
    if getattr(args, "workers", None) is not None:
        runtime["workers"] = args.workers
    return _jsonable({"schema_version": SCHEMA_VERSION, "version": __version__,
                      "command": args.command, "parameters": params,
                      "result": result, "runtime": runtime})


def _render_csv(args, result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if "distribution" in result:
        writer.writerow(["value", "probability"])
        writer.writerows(result["distribution"].items())
    elif "counts" in result:
        writer.writerow(["value", "count"])
        writer.writerows(result["counts"].items())
    elif "samples" in result:
        writer.writerows(result["samples"])
    else:
        raise InputError("--format csv: only distributions, counts and samples have a CSV form")
    return buf.getvalue()


def render(args, report) -> str:
    if args.format == "csv":
        return _render_csv(args, report["result"])
    if args.format == "text":
        if args.command != "sample":
            raise InputError("--format text: only for sample")
        return "".join(" ".join(map(str, row)) + "\n" for row in report["result"]["samples"])
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        _check_positive(args)
        result, ok = args.func(args)
        text = render(args, make_report(args, result, time.perf_counter() - start))
    except oracle.BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("verdict: FAIL", file=sys.stderr)
        return EXIT_VERDICT
    return 0


if __name__ == "__main__":
    sys.exit(main())
