"""Command-line interface: simulate, sweep, estimate, compare, bounds, table.

All subcommands emit CSV to stdout or --out and require --seed so runs are
reproducible.  A flat key=value config file can supply any flag's value;
explicit flags win.  Usage errors exit 2; numeric failures exit 1 with a
diagnostic naming the module and, when known, the offending quantile.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .abtest import best_of_r, compare_revenues
from .alloc import AllocationRule, DegenerateRuleError, max_slope, mixture, parse_rule
from .bounds import (
    BoundInputs,
    bound_allpay_k,
    bound_classifier,
    bound_expected_value,
    bound_general_y,
    bound_ideal_ab,
    bound_mixture,
    bound_universal,
    bound_welfare,
    normalized_table_bound,
)
from .dist import QuantileGrid, make_distribution, true_revenue
from .equil import ALL_PAY, FIRST_PRICE, bid_curve, read_bid_csv, sample_bids
from .estim import DegenerateSourceError, estimate_revenue
from .harness import (
    CSV_HEADER,
    CSV_SCHEMA,
    ExperimentSpec,
    design_rules,
    epsilon_sweep,
    full_table,
    mad_csv_row,
    run_design,
)


def _read_config(path: str) -> list[str]:
    """Flat key=value lines turned into leading flags (explicit flags,
    appearing later in argv, override them)."""
    flags: list[str] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        flags += [f"--{key.replace('_', '-')}", value]
    return flags


def _emit(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--config", help="flat key=value file supplying flag defaults")


def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--design", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.001)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--grid-m", type=int, default=10_000)
    p.add_argument("--dist", default="beta22")
    p.add_argument("--format", default=ALL_PAY, choices=(ALL_PAY, FIRST_PRICE))


def cmd_simulate(args) -> list[str]:
    spec = ExperimentSpec(
        design=args.design, n=args.n, N=args.N, eps=args.eps, trials=args.trials,
        grid_m=args.grid_m, dist=args.dist, format=args.format, seed=args.seed,
    )
    result = run_design(spec)
    bound = normalized_table_bound(spec.design, spec.n, spec.eps)
    return [CSV_SCHEMA, CSV_HEADER, mad_csv_row(spec, result, bound)]


def cmd_sweep(args) -> list[str]:
    spec = ExperimentSpec(
        design=args.design, n=args.n, N=args.N, trials=args.trials,
        grid_m=args.grid_m, dist=args.dist, format=args.format, seed=args.seed,
    )
    eps_list = [float(v) for v in args.eps_list.split(",")]
    rows = epsilon_sweep(spec, eps_list)
    out = ["# auctionab-sweep-v1", "design,n,N,trials,seed,eps,rel_median_abs_error"]
    for eps, err in rows:
        out.append(f"{spec.design},{spec.n},{spec.N},{spec.trials},{spec.seed},{eps:g},{err:.10g}")
    return out


def cmd_estimate(args) -> list[str]:
    source = parse_rule(args.source, args.n)
    target = parse_rule(args.target, args.n)
    sample = read_bid_csv(args.bids, args.format, source)
    report = estimate_revenue(sample, source, target, seed=args.seed)
    inputs = BoundInputs.from_rules(source, target, sample.size)
    bound = bound_general_y(inputs)
    out = ["# auctionab-estimate-v1", "design,format,n,N,eps,seed,estimate,truth,abs_error,bound"]
    row = report.csv_row().rsplit(",", 1)[0] + f",{bound:.10g}"
    out.append(row)
    return out


def cmd_compare(args) -> list[str]:
    n = args.n
    incumbent = parse_rule(args.incumbent, n)
    b1 = parse_rule(args.b1, n)
    b2 = parse_rule(args.b2, n)
    dist = make_distribution(args.dist)
    grid = QuantileGrid(args.grid_m)
    # both candidates mixed into the incumbent with weight eps/2 each
    test = mixture(incumbent, mixture(b1, b2, 0.5), args.eps)
    curve = bid_curve(args.format, dist, test, grid)
    p1, p2 = true_revenue(dist, b1, grid), true_revenue(dist, b2, grid)
    true_verdict = 1 if p1 > args.alpha * p2 else 0
    gap = abs(p1 - args.alpha * p2)
    sup_y = max(max_slope(b1), max_slope(b2))
    cls_bound = bound_classifier(args.N, n, args.eps, args.alpha, gap)
    out = [
        "# auctionab-compare-v1",
        "trial,verdict,margin,true_verdict,classifier_bound",
    ]
    wrong = 0
    for t in range(args.trials):
        sample = sample_bids(curve, args.N, np.random.SeedSequence((args.seed, t)))
        verdict, margin = compare_revenues(sample, test, b1, b2, args.alpha)
        wrong += int(verdict != true_verdict)
        out.append(f"{t},{verdict},{margin:.10g},{true_verdict},{cls_bound:.10g}")
    out.append(f"# misclassification_rate,{wrong / args.trials:.10g}")
    out.append(f"# sup_target_slope,{sup_y:.10g}")
    return out


def cmd_bounds(args) -> list[str]:
    a, b = design_rules(args.design, args.n)
    c = mixture(a, b, args.eps)
    inputs = BoundInputs.from_rules(c, b, args.N, args.eps)
    qc = np.clip(np.linspace(0.0, 1.0, 10_001), 0.5 / args.N, 1.0 - 0.5 / args.N)
    sup_inv = float(np.max(1.0 / np.maximum(c.xprime(qc), 1e-300)))
    rows = [
        ("multi_unit_target", bound_allpay_k(inputs)),
        ("general_target", bound_general_y(inputs)),
        ("ideal_split", bound_ideal_ab(args.eps, args.N, inputs.sup_yprime)),
        ("mixture_general", bound_mixture(args.eps, args.N, args.n, inputs.sup_yprime)),
        ("mixture_multi_unit", bound_mixture(args.eps, args.N, args.n, inputs.sup_yprime, multi_unit=True)),
        ("universal_all_k", bound_universal(args.eps, args.N, args.n)),
        ("expected_value", bound_expected_value(args.N, args.n, inputs.sup_xprime, sup_inv)),
        ("welfare", bound_welfare(args.eps, args.N, args.n)),
        ("normalized_table", normalized_table_bound(args.design, args.n, args.eps)),
    ]
    out = ["# auctionab-bounds-v1", "design,n,N,eps,bound_name,value"]
    out += [f"{args.design},{args.n},{args.N},{args.eps:g},{name},{v:.10g}" for name, v in rows]
    return out


def cmd_table(args) -> list[str]:
    ns = [int(v) for v in args.ns.split(",")] if args.ns else None
    sizes = [int(v) for v in args.sample_sizes.split(",")] if args.sample_sizes else None
    out = [CSV_SCHEMA, CSV_HEADER]
    bound = None
    for spec, result in full_table(args.design, args.seed, eps=args.eps,
                                   trials=args.trials, ns=ns, sample_sizes=sizes):
        bound = normalized_table_bound(spec.design, spec.n, spec.eps)
        out.append(mad_csv_row(spec, result, bound))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auctionab",
        description="Counterfactual revenue and welfare estimation for rank-by-bid auctions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one Monte Carlo MAD cell")
    _sim_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="relative error versus mixture weight")
    p.add_argument("--design", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--eps-list", required=True, help="comma-separated mixture weights")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--grid-m", type=int, default=10_000)
    p.add_argument("--dist", default="beta22")
    p.add_argument("--format", default=ALL_PAY, choices=(ALL_PAY, FIRST_PRICE))
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("estimate", help="one-shot estimate from a bid CSV")
    p.add_argument("--bids", required=True)
    p.add_argument("--source", required=True, help="rule generating the bids")
    p.add_argument("--target", required=True, help="rule whose revenue to estimate")
    p.add_argument("--format", default=ALL_PAY, choices=(ALL_PAY, FIRST_PRICE))
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="binary revenue comparison of two candidates")
    p.add_argument("--incumbent", default="one-unit")
    p.add_argument("--b1", required=True)
    p.add_argument("--b2", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.001)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--grid-m", type=int, default=10_000)
    p.add_argument("--dist", default="beta22")
    p.add_argument("--format", default=ALL_PAY, choices=(ALL_PAY, FIRST_PRICE))
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bounds", help="all applicable error bounds for a design")
    p.add_argument("--design", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.001)
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("table", help="full MAD grid for one design")
    p.add_argument("--design", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--eps", type=float, default=0.001)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--ns", help="comma-separated agent counts (default 4..1024)")
    p.add_argument("--sample-sizes", help="comma-separated N values")
    _add_common(p)
    p.set_defaults(func=cmd_table)

    return parser


def cli_main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # a config file supplies defaults: splice its flags right after the
    # subcommand so explicit flags, which come later, take precedence
    if argv and "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            print("error: --config needs a path", file=sys.stderr)
            return 2
        try:
            argv = argv[:1] + _read_config(argv[i + 1]) + argv[1:]
        except (OSError, ValueError) as exc:
            print(f"error: bad config file: {exc}", file=sys.stderr)
            return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _emit(args.func(args), args.out)
    except DegenerateSourceError as exc:
        print(f"error [estim]: {exc}", file=sys.stderr)
        return 1
    except DegenerateRuleError as exc:
        print(f"error [alloc]: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
