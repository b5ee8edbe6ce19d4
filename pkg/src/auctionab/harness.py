"""Monte Carlo experiment runner: the three benchmark designs, mean
absolute deviation tables, the mixture-weight sweep, and CSV emission.

Every experiment is deterministic given its seed: trial t uses a fresh
generator seeded with SeedSequence((seed, t)), so results are independent
of execution order and safe to parallelize.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .alloc import AllocationRule, MultiUnit, mixture, uniform_stair
from .dist import Beta22, QuantileGrid, ValueDistribution, make_distribution, true_revenue
from .equil import ALL_PAY, BidCurve, bid_curve, sample_bids
from .estim import estimate_revenue

CSV_SCHEMA = "# auctionab-mad-v1"
CSV_HEADER = "design,n,N,eps,trials,seed,raw_mad,norm_sqrtN_over_n,norm_sqrt_N_over_n_alt,bound"

#: default mixture weight of the treatment arm in the benchmark designs
DEFAULT_EPS = 0.001

#: normalization applied to `normalized_mad`, resolved by calibrating the
#: reproduced design-2 n=1024 column against its published 0.008-0.011 band:
#: raw_mad is the auction-level (n agents summed) revenue deviation and the
#: factor is sqrt(N)/n, equivalently sqrt(N) times the per-agent deviation.
#: Both candidate factors are always emitted so the choice stays auditable.
RESOLVED_NORMALIZATION = "sqrt(N)/n"


def design_rules(design: int, n: int) -> tuple[AllocationRule, AllocationRule]:
    """Incumbent A and treatment B for the three benchmark designs:
    1: A = one-unit, B = uniform-stair;  2: the reverse;
    3: A = (n-1)-unit, B = one-unit."""
    if design == 1:
        return MultiUnit(1, n), uniform_stair(n)
    if design == 2:
        return uniform_stair(n), MultiUnit(1, n)
    if design == 3:
        return MultiUnit(n - 1, n), MultiUnit(1, n)
    raise ValueError(f"unknown design {design} (expected 1, 2, or 3)")


@dataclass(frozen=True)
class ExperimentSpec:
    design: int
    n: int
    N: int
    eps: float = DEFAULT_EPS
    trials: int = 1000
    grid_m: int = 10_000
    dist: str = "beta22"
    format: str = ALL_PAY
    seed: int = 0
    custom_rules: tuple[AllocationRule, AllocationRule] | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")

    def rules(self) -> tuple[AllocationRule, AllocationRule]:
        if self.custom_rules is not None:
            return self.custom_rules
        return design_rules(self.design, self.n)

    def distribution(self) -> ValueDistribution:
        return make_distribution(self.dist)


@dataclass(frozen=True)
class MadResult:
    """Mean absolute deviation of the revenue estimate over the trials.

    raw_mad is at auction level (n times the per-agent deviation) so the
    published normalization sqrt(N)/n applies to it directly; truth and
    mean_estimate stay per-agent, matching the rest of the library.
    """

    raw_mad: float
    normalized_mad: float
    normalization_factor_used: float
    mc_rel_error_estimate: float
    norm_sqrtN_over_n: float = 0.0
    norm_sqrt_N_over_n_alt: float = 0.0
    truth: float = 0.0
    mean_estimate: float = 0.0

    def __post_init__(self):
        if self.raw_mad < 0:
            raise ValueError("mean absolute deviation cannot be negative")


def _trial_estimates(curve: BidCurve, x: AllocationRule, y: AllocationRule,
                     N: int, seed: int, trials: range) -> np.ndarray:
    from .estim import revenue_weights
    from .equil import FIRST_PRICE

    out = np.empty(len(trials))
    if curve.format == ALL_PAY:
        w = revenue_weights(x, y, N)
        for j, t in enumerate(trials):
            rng = np.random.default_rng(np.random.SeedSequence((seed, t)))
            idx = rng.integers(0, len(curve.b), size=N)
            out[j] = w @ np.sort(curve.b[idx])
    else:
        for j, t in enumerate(trials):
            sample = sample_bids(curve, N, np.random.SeedSequence((seed, t)))
            out[j] = estimate_revenue(sample, x, y).point
    return out


def _worker(args):
    return _trial_estimates(*args)


def trial_estimates(curve: BidCurve, x: AllocationRule, y: AllocationRule,
                    N: int, seed: int, trials: int) -> np.ndarray:
    """P_hat over `trials` replicates; trial t is seeded from (seed, t) so
    the result is independent of worker count (AUCTIONAB_WORKERS)."""
    workers = int(os.environ.get("AUCTIONAB_WORKERS", "1"))
    if workers <= 1 or trials < 4 * workers:
        return _trial_estimates(curve, x, y, N, seed, range(trials))
    chunks = [range(i, trials, workers) for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_worker, [(curve, x, y, N, seed, c) for c in chunks]))
    out = np.empty(trials)
    for c, part in zip(chunks, parts):
        out[list(c)] = part
    return out


def run_design(spec: ExperimentSpec) -> MadResult:
    """Build the composite mechanism, compute its equilibrium bid curve and
    the target's true revenue, then average |P_hat - P| over the trials."""
    a, b = spec.rules()
    c = mixture(a, b, spec.eps)
    dist = spec.distribution()
    grid = QuantileGrid(spec.grid_m)
    curve = bid_curve(spec.format, dist, c, grid)
    truth = true_revenue(dist, b, grid)
    est = trial_estimates(curve, c, b, spec.N, spec.seed, spec.trials)
    # deviations at auction level: n agents, each contributing the per-agent
    # revenue, so the published normalization sqrt(N)/n applies directly
    abs_err = spec.n * np.abs(est - truth)
    raw = float(abs_err.mean())
    se = float(abs_err.std(ddof=1) / np.sqrt(spec.trials)) if spec.trials > 1 else float("nan")
    f_cap = np.sqrt(spec.N) / spec.n   # sqrt(N)/n, the caption reading
    f_alt = np.sqrt(spec.N / spec.n)   # sqrt(N/n), the body-text reading
    return MadResult(
        raw_mad=raw,
        normalized_mad=raw * f_cap,
        normalization_factor_used=f_cap,
        mc_rel_error_estimate=se / raw if raw > 0 else 0.0,
        norm_sqrtN_over_n=raw * f_cap,
        norm_sqrt_N_over_n_alt=raw * f_alt,
        truth=truth,
        mean_estimate=float(est.mean()),
    )


def mad_csv_row(spec: ExperimentSpec, result: MadResult, bound: float | None = None) -> str:
    bd = "" if bound is None else f"{bound:.10g}"
    return (
        f"{spec.design},{spec.n},{spec.N},{spec.eps:g},{spec.trials},{spec.seed},"
        f"{result.raw_mad:.10g},{result.norm_sqrtN_over_n:.10g},"
        f"{result.norm_sqrt_N_over_n_alt:.10g},{bd}"
    )


def epsilon_sweep(spec: ExperimentSpec, eps_list) -> list[tuple[float, float]]:
    """Relative median absolute error, median |P_hat - P| / P, for each
    mixture weight."""
    rows = []
    for eps in eps_list:
        if not (0.0 < eps < 1.0):
            raise ValueError("eps values must lie in (0, 1)")
        sub = replace(spec, eps=float(eps))
        a, b = sub.rules()
        c = mixture(a, b, sub.eps)
        dist = sub.distribution()
        grid = QuantileGrid(sub.grid_m)
        curve = bid_curve(sub.format, dist, c, grid)
        truth = true_revenue(dist, b, grid)
        est = trial_estimates(curve, c, b, sub.N, sub.seed, sub.trials)
        rows.append((float(eps), float(np.median(np.abs(est - truth)) / truth)))
    return rows


TABLE_NS = [2**i for i in range(2, 11)]
TABLE_SAMPLE_SIZES = [2, 10, 100, 1000, 10_000, 100_000]


def full_table(design: int, seed: int, eps: float = DEFAULT_EPS, trials: int = 1000,
               ns=None, sample_sizes=None):
    """The full MAD grid for one design (rows: n, columns: N), yielding
    (spec, MadResult) in row-major order."""
    for n in ns or TABLE_NS:
        for N in sample_sizes or TABLE_SAMPLE_SIZES:
            spec = ExperimentSpec(design=design, n=n, N=N, eps=eps, trials=trials, seed=seed)
            yield spec, run_design(spec)
