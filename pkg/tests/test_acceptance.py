"""Acceptance suite: one printed PASS/FAIL line per criterion.

Each test prints its verdict directly to the terminal (bypassing capture) so
the full scorecard is visible in any pytest run, then asserts the verdict.
"""

import sys
import time

import numpy as np
import pytest

from auctionab.abtest import best_of_r, compare_revenues
from auctionab.alloc import (
    MultiUnit,
    Position,
    PositionWeights,
    marginal_weights,
    max_slope,
    mixture,
    uniform_stair,
    uniform_stair_weights,
    universal_b,
    weights_from_marginals,
)
from auctionab.bounds import normalized_table_bound
from auctionab.dist import Beta22, QuantileGrid, Uniform01, true_revenue, true_welfare
from auctionab.equil import (
    ALL_PAY,
    FIRST_PRICE,
    allpay_bid_curve,
    bid_curve,
    firstprice_bid_curve,
    invert,
    sample_bids,
)
from auctionab.estim import estimate_revenue, estimate_welfare, revenue_weights
from auctionab.harness import ExperimentSpec, design_rules, epsilon_sweep, run_design

GRID = QuantileGrid(10_000)

# Reference normalized MAD values for the three designs at desk scale,
# keyed by (design, n, N).  Normalization is raw auction-level MAD * sqrt(N)/n.
REFERENCE_NORMALIZED_MAD = {
    (1, 4, 1_000): 0.3573,
    (1, 4, 10_000): 0.3535,
    (1, 32, 1_000): 0.2821,
    (1, 32, 10_000): 0.2798,
    (2, 32, 1_000): 0.0472,
    (2, 32, 10_000): 0.0452,
    (2, 256, 1_000): 0.0162,
    (2, 256, 10_000): 0.0157,
    (3, 32, 1_000): 0.0798,
    (3, 32, 10_000): 0.0809,
    (3, 256, 1_000): 0.0323,
    (3, 256, 10_000): 0.0324,
}


def _report(tag: str, ok: bool, detail: str = "") -> None:
    line = f"{tag}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def desk_cells():
    """Run every desk-scale cell once; criteria 04 and 05 both consume them."""
    results = {}
    for (design, n, N) in REFERENCE_NORMALIZED_MAD:
        spec = ExperimentSpec(design=design, n=n, N=N, eps=0.001, trials=1000, seed=0)
        results[(design, n, N)] = run_design(spec)
    return results


def test_criterion_01_estimator_exactness():
    start = time.perf_counter()
    x = Position(universal_b(8))
    curve = allpay_bid_curve(Beta22(), x, QuantileGrid(2000))
    sample = sample_bids(curve, 500, 0)

    self_est = estimate_revenue(sample, x, x).point
    err_self = abs(self_est - float(np.mean(sample.bids)))

    a, b = MultiUnit(2, 8), uniform_stair(8)
    mix = mixture(a, b, 0.3)
    combo = 0.7 * estimate_revenue(sample, x, a).point + 0.3 * estimate_revenue(sample, x, b).point
    err_lin = abs(estimate_revenue(sample, x, mix).point - combo)

    err_rt = 0.0
    for w in ([1.0, 0.5, 0.0], list(uniform_stair_weights(7).w), list(universal_b(9).w)):
        pw = PositionWeights(w)
        back = weights_from_marginals(marginal_weights(pw))
        err_rt = max(err_rt, float(np.max(np.abs(back.w - pw.w))))

    elapsed = time.perf_counter() - start
    ok = err_self <= 1e-12 and err_lin <= 1e-12 and err_rt <= 1e-12 and elapsed < 1.0
    _report(
        "criterion 01 estimator exactness identities",
        ok,
        f"self={err_self:.2e} linearity={err_lin:.2e} weights_round_trip={err_rt:.2e} "
        f"time={elapsed:.2f}s",
    )


def test_criterion_02_analytic_oracles():
    start = time.perf_counter()
    rev_err = abs(true_revenue(Uniform01(), MultiUnit(1, 2), GRID) - 1.0 / 6.0)
    fp = firstprice_bid_curve(Uniform01(), MultiUnit(1, 2), GRID)
    fp_err = float(np.max(np.abs(fp.b - GRID.q / 2)))
    ap = allpay_bid_curve(Uniform01(), uniform_stair(2), GRID)
    ap_err = float(np.max(np.abs(ap.b - GRID.q**2 / 2)))
    elapsed = time.perf_counter() - start
    ok = rev_err <= 1e-6 and fp_err <= 1e-4 and ap_err <= 1e-6 and elapsed < 5.0
    _report(
        "criterion 02 analytic oracles",
        ok,
        f"revenue={rev_err:.2e} firstprice_curve={fp_err:.2e} allpay_curve={ap_err:.2e} "
        f"time={elapsed:.2f}s",
    )


def test_criterion_03_round_trip_inference():
    start = time.perf_counter()
    rules = [rule for design in (1, 2, 3) for rule in design_rules(design, 8)]
    mask = (GRID.q >= 0.01) & (GRID.q <= 0.99)
    worst = 0.0
    gap_ok = True
    for dist in (Uniform01(), Beta22()):
        for rule in rules:
            for fmt in (ALL_PAY, FIRST_PRICE):
                curve = bid_curve(fmt, dist, rule, GRID)
                vhat = invert(curve)
                err = np.abs(vhat - dist.v(GRID.q))[mask]
                defined = ~np.isnan(err)
                worst = max(worst, float(np.max(err[defined])))
                # inversion gaps are allowed only where the source slope vanishes
                xp = rule.xprime(GRID.q)[mask]
                gap_ok = gap_ok and bool(np.all(xp[~defined] <= 1e-9))
    elapsed = time.perf_counter() - start
    ok = worst <= 5e-3 and gap_ok and elapsed < 30.0
    _report(
        "criterion 03 round trip bid inversion",
        ok,
        f"sup_error={worst:.2e} gaps_only_at_flat_slope={gap_ok} time={elapsed:.1f}s",
    )


def test_criterion_04_desk_scale_table_reproduction(desk_cells):
    failures = []
    for key, ref in REFERENCE_NORMALIZED_MAD.items():
        got = desk_cells[key].normalized_mad
        rel = abs(got - ref) / ref
        if rel > 0.20:
            failures.append(f"{key}: got {got:.4f} vs ref {ref:.4f} ({rel:.0%})")
    _report(
        "criterion 04 normalized error table within 20%",
        not failures,
        "; ".join(failures) if failures else f"all {len(REFERENCE_NORMALIZED_MAD)} cells match",
    )


def test_criterion_05_bound_dominates_measured_error(desk_cells):
    failures = []
    for (design, n, N), result in desk_cells.items():
        bound = normalized_table_bound(design, n, 0.001)
        if result.normalized_mad > bound:
            failures.append(f"({design},{n},{N}): mad {result.normalized_mad:.4f} > bound {bound:.4f}")
    _report(
        "criterion 05 analytic bound dominates measured error",
        not failures,
        "; ".join(failures) if failures else "bound exceeds measured error on every cell",
    )


def test_criterion_06_sqrt_n_error_scaling():
    ratios = {}
    ok = True
    for design in (1, 2, 3):
        lo = run_design(ExperimentSpec(design=design, n=8, N=1_000, trials=200, seed=1))
        hi = run_design(ExperimentSpec(design=design, n=8, N=100_000, trials=200, seed=1))
        ratio = lo.raw_mad / hi.raw_mad
        ratios[design] = ratio
        ok = ok and 5.0 <= ratio <= 20.0
    detail = " ".join(f"design{d}={r:.1f}" for d, r in ratios.items())
    _report("criterion 06 error shrinks like sqrt(N)", ok, detail + " (target band [5,20])")


def test_criterion_07_mixture_mass_sweep_shape():
    eps_list = [0.001, 0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95]
    medians = {}
    for design in (1, 2, 3):
        spec = ExperimentSpec(design=design, n=32, N=1_000, trials=500, seed=2)
        medians[design] = [m for _, m in epsilon_sweep(spec, eps_list)]

    def nonincreasing_tail(vals):
        tail = vals[-3:]
        tol = 1e-3 * max(tail)
        return tail[0] >= tail[1] - tol and tail[1] >= tail[2] - tol

    d1_ok = nonincreasing_tail(medians[1])
    d3_ok = nonincreasing_tail(medians[3])
    d2_ok = medians[2][-1] > min(medians[2])
    ok = d1_ok and d2_ok and d3_ok
    _report(
        "criterion 07 error vs mixture mass shape",
        ok,
        f"design1_tail_nonincreasing={d1_ok} design2_eventual_increase={d2_ok} "
        f"design3_tail_nonincreasing={d3_ok}",
    )


def test_criterion_08_candidate_classifier():
    dist = Beta22()
    x = Position(universal_b(8))
    curve = allpay_bid_curve(dist, x, GRID)
    better, worse = MultiUnit(5, 8), MultiUnit(3, 8)
    gap = true_revenue(dist, better, GRID) - true_revenue(dist, worse, GRID)
    assert gap >= 0.02

    def misclass_rate(N, trials, seed):
        wrong = 0
        for t in range(trials):
            s = sample_bids(curve, N, np.random.SeedSequence((seed, t)))
            verdict, _ = compare_revenues(s, x, better, worse)
            wrong += verdict == 0
        return wrong / trials

    rate_small = misclass_rate(100, 500, 10)
    rate_large = misclass_rate(10_000, 500, 11)
    binary_ok = rate_large <= rate_small / 10

    candidates = [MultiUnit(k, 8) for k in (3, 4, 5, 6)]
    truths = [true_revenue(dist, c, GRID) for c in candidates]
    want = int(np.argmax(truths))
    hits = 0
    for t in range(100):
        s = sample_bids(curve, 100_000, np.random.SeedSequence((12, t)))
        idx, _ = best_of_r(s, x, candidates)
        hits += idx == want
    argmax_ok = hits >= 95

    _report(
        "criterion 08 classifier error decay and argmax selection",
        binary_ok and argmax_ok,
        f"gap={gap:.4f} rate@1e2={rate_small:.3f} rate@1e4={rate_large:.3f} "
        f"argmax_hits={hits}/100",
    )


def test_criterion_09_welfare_against_order_statistic_oracle():
    dist = Beta22()
    w = uniform_stair_weights(8)
    x = Position(universal_b(8))
    curve = allpay_bid_curve(dist, x, GRID)
    trials = 30
    estimates = np.empty(trials)
    for t in range(trials):
        s = sample_bids(curve, 100_000, np.random.SeedSequence((20, t)))
        estimates[t] = estimate_welfare(s, x, w).point
    sw, se_mc = true_welfare(dist, w, trials=200_000, seed=0)
    # one estimate at N=1e5, judged against its own standard error (measured
    # from the replicates) combined with the oracle's Monte Carlo error
    se_est = float(np.std(estimates, ddof=1))
    se = float(np.hypot(se_mc, se_est))
    z = (estimates[0] - sw) / se
    ok = abs(z) <= 3.0
    _report(
        "criterion 09 welfare estimate matches simulation oracle",
        ok,
        f"estimate={estimates[0]:.5f} oracle={sw:.5f} z={z:.2f}",
    )


def test_criterion_10_slope_magnitude_properties():
    cap_violations = []
    bracket_violations = []
    lo_c = 1.0 / np.sqrt(2 * np.pi)
    hi_c = 1.0 / np.sqrt(np.pi)
    for n in range(2, 65):
        for k in range(1, n + 1):
            sup = max_slope(MultiUnit(k, n))
            if sup > n * (1 + 1e-9):
                cap_violations.append((n, k))
            if 2 <= k <= n - 1:
                scale = (n - 1) / np.sqrt(min(k - 1, n - k))
                if not (lo_c * scale * (1 - 1e-9) <= sup <= hi_c * scale * (1 + 1e-9)):
                    bracket_violations.append((n, k))
    ok = not cap_violations and not bracket_violations
    first = bracket_violations[:3]
    _report(
        "criterion 10 allocation slope magnitude bracket",
        ok,
        f"cap_violations={len(cap_violations)} bracket_violations={len(bracket_violations)}"
        + (f" first={first}" if first else ""),
    )


def test_empirical_cdf_sup_gap_diagnostic():
    curve = allpay_bid_curve(Beta22(), Position(universal_b(8)), GRID)
    N, reps = 10_000, 200
    sups = np.empty(reps)
    for r in range(reps):
        s = sample_bids(curve, N, np.random.SeedSequence((30, r)))
        ghat = np.searchsorted(s.bids, curve.b, side="right") / N
        sups[r] = float(np.max(np.abs(ghat - GRID.q)))
    scaled = float(np.mean(sups)) * np.sqrt(N)
    ok = scaled <= 0.55
    _report(
        "diagnostic empirical cdf sup gap",
        ok,
        f"mean_sup*sqrt(N)={scaled:.3f} threshold=0.55",
    )
