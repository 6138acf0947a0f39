"""Command-line experiment driver.

Every run echoes its configuration: as ``# key=value`` lines ahead of CSV
data, or under a ``"config"`` key in JSON. Identical configurations produce
byte-identical output; the thread count is not part of the configuration
because it never changes results.

Exit codes: 0 success, 2 precondition or size-cap violation, 1 internal
error, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import __version__
from .channels import (
    BEC,
    BSC,
    SWEEP_HEADER,
    ChannelSpec,
    capacity_sweep,
    check_bec_constraints,
    check_bsc_constraints,
    estimate_lambda,
    trial_rng,
)
from .combinatorics import (
    binary_entropy,
    binom_leq,
    entropy_taylor,
    smallest_s,
    xi_from_capacity_gap,
)
from .derivatives import (
    DirectionTuple,
    low_bias_approximator,
    low_weight_approximator,
    weighted_sign_estimator,
)
from .errors import HypothesisWarning, RMLabError
from .gf2poly import EvalVec, PolyANF, anf_to_eval
from .rmcode import CodeParams
from .weightdist import (
    bound_low_bias,
    bound_low_weight,
    bound_net_A,
    bound_net_A1,
    bound_recursion,
    brute_force_profile,
    lower_bound_log2,
    mc_bias_tail,
    sample_biased_poly,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PRECONDITION = 2
EXIT_USAGE = 64

RANDOMIZED = {"bias-tail", "lower-bound-sample", "approx", "simulate", "sweep"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class Table:
    def __init__(self, columns: Sequence[str], rows: Sequence[Sequence[Any]]):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]


def _record(d: dict[str, Any]) -> Table:
    return Table(["key", "value"], [[k, v] for k, v in d.items()])


def render(config: dict[str, Any], table: Table, fmt: str) -> str:
    if fmt == "json":
        payload = {
            "config": _jsonable(config),
            "columns": table.columns,
            "rows": _jsonable(table.rows),
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in config.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


# -- handlers -------------------------------------------------------------------------


def _params(args) -> CodeParams:
    return CodeParams(args.m, args.r)


def cmd_weight_profile(args) -> Table:
    prof = brute_force_profile(_params(args), method=args.method, threads=args.threads)
    return Table(["weight", "count"], prof.items())


def cmd_bias_tail(args) -> Table:
    res = mc_bias_tail(args.m, args.r, args.epsilon, args.samples, np.random.default_rng(args.seed))
    return _record(
        {
            "exceedances": res.exceedances,
            "samples": res.n_samples,
            "empirical_prob": res.empirical_prob,
            "bound": res.bound,
        }
    )


def cmd_bounds(args) -> Table:
    kind = args.kind
    if kind == "low-weight":
        return _record(_flatten(bound_low_weight(args.m, args.r, args.ell, args.m4_const).to_dict()))
    if kind == "low-bias":
        return _record(_flatten(bound_low_bias(args.m, args.r, args.ell, args.m4_const).to_dict()))
    if kind == "net-a":
        return _record({"log2_size": bound_net_A(args.m, args.r, args.k, args.t)})
    if kind == "net-a1":
        return _record({"log2_size": bound_net_A1(args.m, args.r, args.t)})
    if kind == "recursion":
        return _record({"log2_size": bound_recursion(args.m, args.r, args.ell)})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", HypothesisWarning)
        value = lower_bound_log2(args.m, args.r, args.ell)
    return _record({"log2_count": value, "outside_hypotheses": bool(caught)})


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[f"{prefix}{k}"] = v
    return out


def cmd_lower_bound_sample(args) -> Table:
    target = Fraction(1, 1 << (args.ell + 1))
    rows = []
    for i in range(args.samples):
        _, b = sample_biased_poly(args.m, args.r, args.ell, trial_rng(args.seed, i))
        rows.append([i, float(b), int(b >= target)])
    return Table(["sample", "bias", "meets_target"], rows)


def _target_function(args) -> EvalVec:
    if args.poly:
        return anf_to_eval(PolyANF.from_hex_list(args.m, args.poly.split(",")))
    variables = [int(x) for x in args.monomial.split(",") if x.strip()]
    return anf_to_eval(PolyANF.monomial(args.m, *variables))


def cmd_approx(args) -> Table:
    f = _target_function(args)
    rng = np.random.default_rng(args.seed)
    if args.kind == "low-weight":
        approx, d = low_weight_approximator(f, args.k, args.delta, rng, retries=args.retries)
    elif args.kind == "low-bias":
        approx, d = low_bias_approximator(f, args.epsilon, args.delta, rng, retries=args.retries)
    else:
        samples = [DirectionTuple.random(args.m, args.k - 1, trial_rng(args.seed, i)) for i in range(args.samples)]
        est = weighted_sign_estimator(f, args.k, samples)
        d = Fraction(int(np.count_nonzero(est.sign.bits != f.bits)), f.n)
        return _record(
            {
                "samples": args.samples,
                "rejected": len(est.rejected),
                "max_alpha": float(max(est.alphas)) if est.alphas else "",
                "disagreement": d,
            }
        )
    return _record(
        {
            "t": approx.t,
            "attempts": approx.attempts,
            "disagreement": d,
            "disagreement_float": float(d),
            "within_delta": d <= Fraction(args.delta),
        }
    )


def _channel(args, params: CodeParams) -> ChannelSpec:
    if args.c is not None:
        return ChannelSpec.from_capacity(args.channel, args.c, params.rate)
    return ChannelSpec(args.channel, args.p)


def cmd_simulate(args) -> Table:
    params = _params(args)
    channel = _channel(args, params)
    stats = estimate_lambda(params, channel, args.trials, args.seed, mode=args.mode, threads=args.threads)
    return _record(
        {
            "p": channel.p,
            "rate": float(params.rate),
            "trials": stats.trials,
            "failures": stats.failures,
            "failure_rate": stats.failure_rate,
            "seed": stats.seed,
        }
    )


def cmd_sweep(args) -> Table:
    params = _params(args)
    grid = [float(x) for x in args.c_grid.split(",")]
    rows = capacity_sweep(params, args.channel, grid, args.trials, args.seed, threads=args.threads)
    return Table(
        SWEEP_HEADER.split(","),
        [[row.c, row.p, row.stats.trials, row.stats.failures, row.stats.failure_rate, row.stats.seed] for row in rows],
    )


def cmd_check(args) -> Table:
    check = check_bec_constraints if args.channel == BEC else check_bsc_constraints
    rep = check(args.gamma, terms=args.terms)
    out = {"ok": rep.ok, "worst_margin": rep.worst_margin}
    for fam in rep.families:
        out[f"{fam.name}.worst_margin"] = fam.worst
        out[f"{fam.name}.worst_index"] = fam.worst_index
        out[f"{fam.name}.tail_ok"] = fam.tail_ok
    return _record(out)


def cmd_combinatorics(args) -> Table:
    op = args.op
    if op == "binom-leq":
        return _record({"value": binom_leq(args.m, args.r)})
    if op == "entropy":
        return _record({"value": binary_entropy(args.p)})
    if op == "entropy-taylor":
        return _record({"value": entropy_taylor(args.xi, args.terms)})
    if op == "xi":
        xi = xi_from_capacity_gap(args.c, args.rate)
        return _record({"xi": xi, "p": (1 - xi) / 2})
    sp = smallest_s(args.gamma, args.ell, args.m)
    return _record({"s": sp.s, "t": sp.t, "gamma_tilde": sp.gamma_tilde, "c_gamma": sp.c_gamma, "d_gamma": sp.d_gamma})


HANDLERS = {
    "weight-profile": cmd_weight_profile,
    "bias-tail": cmd_bias_tail,
    "bounds": cmd_bounds,
    "lower-bound-sample": cmd_lower_bound_sample,
    "approx": cmd_approx,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "check-capacity-constraints": cmd_check,
    "combinatorics": cmd_combinatorics,
}


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rmlab", description="Reed-Muller code laboratory")
    parser.add_argument("--version", action="version", version=f"rmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=False):
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--output", "-o", help="write here instead of stdout")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: $RMLAB_THREADS or 1)")
        p.add_argument("--seed", type=int, default=None, help="64-bit master seed" + (" (required)" if seed else ""))

    def code(p, r_required=True):
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--r", type=int, required=r_required)

    p = sub.add_parser("weight-profile", help="exact weight enumerator by exhaustion")
    code(p)
    p.add_argument("--method", choices=["anf", "codewords"], default="anf")
    common(p)

    p = sub.add_parser("bias-tail", help="Monte Carlo tail of |bias| for random polynomials")
    code(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, default=2000)
    common(p, seed=True)

    p = sub.add_parser("bounds", help="closed-form weight-distribution bounds")
    p.add_argument("--kind", choices=["low-weight", "low-bias", "net-a", "net-a1", "recursion", "lower"], required=True)
    code(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--m4-const", type=float, default=0.0)
    common(p)

    p = sub.add_parser("lower-bound-sample", help="sample the biased construction and report exact biases")
    code(p)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--samples", type=int, default=40)
    common(p, seed=True)

    p = sub.add_parser("approx", help="majority-of-derivatives approximators")
    p.add_argument("--kind", choices=["low-weight", "low-bias", "weighted-sign"], required=True)
    p.add_argument("--m", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--monomial", help="comma-separated 1-based variables, e.g. 1,2,3")
    g.add_argument("--poly", help="comma-separated hex monomial masks")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.125)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--retries", type=int, default=20)
    p.add_argument("--samples", type=int, default=51)
    common(p, seed=True)

    def channel_args(p):
        p.add_argument("--channel", choices=[BEC, BSC], required=True)
        code(p)
        p.add_argument("--trials", type=int, default=200)

    p = sub.add_parser("simulate", help="estimate the decoding failure rate at one channel parameter")
    channel_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--c", type=float, help="derive p from the capacity gap c")
    p.add_argument("--mode", choices=["zero", "random"], default="zero")
    common(p, seed=True)

    p = sub.add_parser("sweep", help="failure rate across a grid of capacity gaps")
    channel_args(p)
    p.add_argument("--c-grid", required=True, help="comma-separated values of c")
    common(p, seed=True)

    p = sub.add_parser("check-capacity-constraints", help="evaluate the threshold inequality families")
    p.add_argument("--channel", choices=[BEC, BSC], required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--terms", type=int, default=500)
    common(p)

    p = sub.add_parser("combinatorics", help="binomial sums, entropy and the s solver")
    p.add_argument("--op", choices=["binom-leq", "entropy", "entropy-taylor", "xi", "smallest-s"], required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--terms", type=int, default=50)
    p.add_argument("--c", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--ell", type=int)
    common(p)
    return parser


_REQUIRED = {
    ("bounds", "low-weight"): ["ell"],
    ("bounds", "low-bias"): ["ell"],
    ("bounds", "net-a"): ["k", "t"],
    ("bounds", "net-a1"): ["t"],
    ("bounds", "recursion"): ["ell"],
    ("bounds", "lower"): ["ell"],
    ("combinatorics", "binom-leq"): ["m", "r"],
    ("combinatorics", "entropy"): ["p"],
    ("combinatorics", "entropy-taylor"): ["xi"],
    ("combinatorics", "xi"): ["c", "rate"],
    ("combinatorics", "smallest-s"): ["gamma", "ell", "m"],
}


def _validate(parser, args) -> None:
    key = (args.command, getattr(args, "kind", None) or getattr(args, "op", None))
    missing = [f"--{a.replace('_', '-')}" for a in _REQUIRED.get(key, []) if getattr(args, a) is None]
    if missing:
        parser.error(f"{args.command} {key[1]} requires {', '.join(missing)}")
    if args.command in RANDOMIZED and args.seed is None:
        parser.error(f"{args.command} is randomized and requires --seed")


def _resolve_threads(args) -> None:
    if args.threads is None:
        env = os.environ.get("RMLAB_THREADS")
        try:
            args.threads = int(env) if env else 1
        except ValueError:
            raise UsageError(f"RMLAB_THREADS={env!r} is not an integer")
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")


def _config(args) -> dict[str, Any]:
    skip = {"output", "threads", "format"}
    cfg = {"subcommand": args.command}
    for k, v in sorted(vars(args).items()):
        if k in skip or k == "command" or v is None:
            continue
        cfg[k] = v
    return cfg


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(parser, args)
        _resolve_threads(args)
    except UsageError as exc:
        print(f"rmlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        table = HANDLERS[args.command](args)
        text = render(_config(args), table, args.format)
    except RMLabError as exc:
        print(f"rmlab: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except Exception as exc:  # noqa: BLE001 - map anything unexpected to the internal-error code
        print(f"rmlab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
