"""Position environments and their allocation rules in quantile space.

A rank-by-bid position auction with weights w_1 >= ... >= w_n serves the
agent in position i with probability w_i.  Every such auction is a convex
combination of highest-k-bids-win multi-unit auctions, so all allocation
rules here reduce to weighted sums of the multi-unit rules

    x_k(q) = P(at most k-1 of the n-1 rivals have quantile above q),

which are known in closed form and do not depend on the value distribution.
All evaluators accept scalars or numpy arrays and are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import special


class DegenerateRuleError(ValueError):
    """Raised when an allocation rule is unusable for the requested operation
    (e.g. its derivative vanishes where an estimator must divide by it)."""


def _as_array(q):
    q = np.asarray(q, dtype=float)
    if np.any((q < 0.0) | (q > 1.0)):
        raise ValueError("quantile outside [0, 1]")
    return q


def multi_unit_alloc(k: int, n: int, q):
    """Probability that an agent at quantile q is served by the
    highest-k-bids-win auction with n agents.

    x_k(q) = sum_{i=0}^{k-1} C(n-1, i) q^{n-1-i} (1-q)^i, evaluated through
    the regularized incomplete beta function for numerical stability at
    large n.
    """
    if not (1 <= k <= n):
        raise ValueError(f"unit count k={k} outside 1..{n}")
    q = _as_array(q)
    if k == n:
        return np.ones_like(q)
    # sum equals P(Binom(n-1, 1-q) <= k-1) = I_q(n-k, k)
    return special.betainc(n - k, k, q)


def multi_unit_alloc_deriv(k: int, n: int, q):
    """Derivative of multi_unit_alloc with respect to q:
    x_k'(q) = (n-1) C(n-2, k-1) q^{n-1-k} (1-q)^{k-1}, with 0**0 = 1 at the
    endpoints so the derivative is defined on the closed interval.
    """
    if not (1 <= k <= n):
        raise ValueError(f"unit count k={k} outside 1..{n}")
    q = _as_array(q)
    if k == n:
        return np.zeros_like(q)
    return _scaled_poly(_log_binom_coef(n, k), n - 1 - k, k - 1, q)


def _log_binom_coef(n: int, k: int) -> float:
    """log[(n-1) * C(n-2, k-1)], via gammaln so it never overflows even for
    n up to 2**10 where the coefficient itself would."""
    if n <= 50:
        return float(np.log((n - 1) * comb(n - 2, k - 1)))
    return float(
        np.log(n - 1) + special.gammaln(n - 1) - special.gammaln(n - k) - special.gammaln(k)
    )


def _scaled_poly(logc, a: int, b: int, q: np.ndarray) -> np.ndarray:
    """exp(logc) * q**a * (1-q)**b evaluated wholly in log space; the huge
    coefficient and the vanishing powers cancel before exponentiation.
    0**0 counts as 1 at the endpoints."""
    out = np.zeros_like(q)
    interior = (q > 0.0) & (q < 1.0)
    with np.errstate(under="ignore"):
        out[interior] = np.exp(
            logc + a * np.log(q[interior]) + b * np.log1p(-q[interior])
        )
    if a == 0:
        out[q == 0.0] = np.exp(logc)
    if b == 0:
        out[q == 1.0] = np.exp(logc)
    return out


def multi_unit_alloc_second(k: int, n: int, q):
    """Second derivative of the multi-unit allocation rule, used for the
    analytic derivative of the estimator weight kernel."""
    if not (1 <= k <= n):
        raise ValueError(f"unit count k={k} outside 1..{n}")
    q = _as_array(q)
    if k == n:
        return np.zeros_like(q)
    a, b = n - 1 - k, k - 1
    logc = _log_binom_coef(n, k)
    out = np.zeros_like(q)
    if a > 0:
        out = out + a * _scaled_poly(logc, a - 1, b, q)
    if b > 0:
        out = out - b * _scaled_poly(logc, a, b - 1, q)
    return out


@dataclass(frozen=True)
class PositionWeights:
    """Decreasing service probabilities w_1 >= ... >= w_n for n positions."""

    n: int
    w: np.ndarray

    def __init__(self, w):
        w = np.asarray(w, dtype=float)
        if w.ndim != 1 or len(w) < 2:
            raise ValueError("need a vector of at least 2 position weights")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("position weights must lie in [0, 1]")
        if np.any(np.diff(w) > 1e-12):
            raise ValueError("position weights must be nonincreasing")
        object.__setattr__(self, "n", len(w))
        object.__setattr__(self, "w", w)
        self.w.setflags(write=False)


@dataclass(frozen=True)
class MarginalWeights:
    """Increments of the position weights: a probability distribution over
    the number of units served, indexed 0..n."""

    n: int
    wbar: np.ndarray

    def __post_init__(self):
        wbar = np.asarray(self.wbar, dtype=float)
        if len(wbar) != self.n + 1:
            raise ValueError("marginal weights must have n+1 entries")
        if np.any(wbar < -1e-12):
            raise ValueError("marginal weights must be nonnegative")
        if abs(wbar.sum() - 1.0) > 1e-12:
            raise ValueError("marginal weights must sum to 1")
        object.__setattr__(self, "wbar", wbar)
        self.wbar.setflags(write=False)


def marginal_weights(w: PositionWeights) -> MarginalWeights:
    """wbar[0] = 1 - w[1], wbar[k] = w[k] - w[k+1] for k < n, wbar[n] = w[n]."""
    wbar = np.empty(w.n + 1)
    wbar[0] = 1.0 - w.w[0]
    wbar[1:-1] = w.w[:-1] - w.w[1:]
    wbar[-1] = w.w[-1]
    return MarginalWeights(w.n, wbar)


def weights_from_marginals(m: MarginalWeights) -> PositionWeights:
    """Left inverse of marginal_weights: w[k] = sum_{j>=k} wbar[j]."""
    w = np.empty(m.n)
    acc = m.wbar[m.n]
    w[m.n - 1] = acc
    for k in range(m.n - 1, 0, -1):
        acc = m.wbar[k] + acc
        w[k - 1] = acc
    return PositionWeights(w)


class AllocationRule:
    """Evaluable allocation rule on [0, 1] with exact first and second
    derivatives.  Immutable; evaluators are pure and thread-safe."""

    n: int

    def x(self, q):
        raise NotImplementedError

    def xprime(self, q):
        raise NotImplementedError

    def xsecond(self, q):
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def _slope_candidates(self) -> list[float]:
        """Quantiles where xprime may attain its supremum, in addition to a
        uniform grid."""
        return [0.0, 1.0]


@dataclass(frozen=True)
class MultiUnit(AllocationRule):
    """Highest-k-bids-win auction with n agents."""

    k: int
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 agents")
        if not (1 <= self.k <= self.n):
            raise ValueError(f"unit count k={self.k} outside 1..{self.n}")

    def x(self, q):
        return multi_unit_alloc(self.k, self.n, q)

    def xprime(self, q):
        return multi_unit_alloc_deriv(self.k, self.n, q)

    def xsecond(self, q):
        return multi_unit_alloc_second(self.k, self.n, q)

    def describe(self) -> str:
        return f"{self.k}-unit(n={self.n})"

    def _slope_candidates(self) -> list[float]:
        if self.k == self.n:  # constant rule, slope 0 everywhere
            return [0.0, 1.0]
        cands = [0.0, 1.0, (self.n - self.k) / (self.n - 1)]
        a, b = self.n - 1 - self.k, self.k - 1
        if a + b > 0:
            cands.append(a / (a + b))  # argmax of q^a (1-q)^b
        return cands


@dataclass(frozen=True)
class Position(AllocationRule):
    """Rank-by-bid position auction: mixture over multi-unit auctions with
    the marginal weights of the position environment."""

    weights: PositionWeights
    marginals: MarginalWeights = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "marginals", marginal_weights(self.weights))

    @property
    def n(self) -> int:
        return self.weights.n

    def _terms(self):
        wbar = self.marginals.wbar
        return [(wbar[k], k) for k in range(1, self.n + 1) if wbar[k] != 0.0]

    def x(self, q):
        q = _as_array(q)
        out = np.zeros_like(q)
        for wk, k in self._terms():
            out = out + wk * multi_unit_alloc(k, self.n, q)
        return out

    def xprime(self, q):
        q = _as_array(q)
        out = np.zeros_like(q)
        for wk, k in self._terms():
            out = out + wk * multi_unit_alloc_deriv(k, self.n, q)
        return out

    def xsecond(self, q):
        q = _as_array(q)
        out = np.zeros_like(q)
        for wk, k in self._terms():
            out = out + wk * multi_unit_alloc_second(k, self.n, q)
        return out

    def describe(self) -> str:
        return "position(" + ",".join(f"{v:g}" for v in self.weights.w) + ")"

    def _slope_candidates(self) -> list[float]:
        cands: list[float] = [0.0, 1.0]
        for _, k in self._terms():
            cands.extend(MultiUnit(k, self.n)._slope_candidates())
        return cands


@dataclass(frozen=True)
class Mixture(AllocationRule):
    """Lazy convex combination of allocation rules: derivatives are the
    weighted sums of the component derivatives."""

    components: tuple[tuple[float, AllocationRule], ...]

    def __post_init__(self):
        comps = tuple((float(w), r) for w, r in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        ns = {r.n for _, r in comps}
        if len(ns) != 1:
            raise ValueError(f"mixture components disagree on agent count: {sorted(ns)}")
        if any(w < 0.0 for w, _ in comps):
            raise ValueError("mixture weights must be nonnegative")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.components[0][1].n

    def x(self, q):
        q = _as_array(q)
        out = np.zeros_like(q)
        for w, r in self.components:
            out = out + w * r.x(q)
        return out

    def xprime(self, q):
        q = _as_array(q)
        out = np.zeros_like(q)
        for w, r in self.components:
            out = out + w * r.xprime(q)
        return out

    def xsecond(self, q):
        q = _as_array(q)
        out = np.zeros_like(q)
        for w, r in self.components:
            out = out + w * r.xsecond(q)
        return out

    def describe(self) -> str:
        return "+".join(f"{w:g}*{r.describe()}" for w, r in self.components)

    def _slope_candidates(self) -> list[float]:
        cands: list[float] = []
        for _, r in self.components:
            cands.extend(r._slope_candidates())
        return cands


def position_alloc(w: PositionWeights, q):
    """Allocation rule of the rank-by-bid position auction with weights w."""
    return Position(w).x(q)


def position_alloc_deriv(w: PositionWeights, q):
    return Position(w).xprime(q)


def mixture(a: AllocationRule, b: AllocationRule, eps: float) -> AllocationRule:
    """The test mechanism (1-eps)*a + eps*b."""
    if a.n != b.n:
        raise ValueError(f"agent counts differ: {a.n} vs {b.n}")
    if not (0.0 <= eps <= 1.0):
        raise ValueError("mixture weight must lie in [0, 1]")
    return Mixture(((1.0 - eps, a), (eps, b)))


def uniform_stair_weights(n: int) -> PositionWeights:
    """w_k = (n-k)/(n-1); the induced allocation rule is x(q) = q."""
    if n < 2:
        raise ValueError("need at least 2 agents")
    k = np.arange(1, n + 1)
    return PositionWeights((n - k) / (n - 1))


def uniform_stair(n: int) -> Position:
    return Position(uniform_stair_weights(n))


def universal_b(n: int) -> PositionWeights:
    """Treatment mechanism whose marginal weights put mass 1/2 on the 1-unit
    auction and 1/2 on the (n-1)-unit auction; mixing it into any incumbent
    makes every multi-unit revenue estimable at once.

    Weights are w_1 = 1, w_k = 1/2 for 1 < k <= n-1, w_n = 0.  For n = 3 the
    intermediate range is empty and the vector degenerates to (1, 1/2, 0).
    """
    if n < 3:
        raise ValueError("universal B test needs n >= 3")
    w = np.full(n, 0.5)
    w[0] = 1.0
    w[-1] = 0.0
    return PositionWeights(w)


def max_slope(rule: AllocationRule, grid_size: int = 10_001) -> float:
    """sup_q xprime(q), over a uniform grid plus the analytic maximizers of
    the rule's multi-unit components (the grid alone can miss sharp peaks)."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    qs = np.linspace(0.0, 1.0, grid_size)
    cands = np.asarray(sorted(set(rule._slope_candidates())))
    return float(max(rule.xprime(qs).max(), rule.xprime(cands).max()))


def parse_rule(text: str, n: int) -> AllocationRule:
    """Build an allocation rule from a config entry.

    Recognized: "one-unit", "k-unit:K", "uniform-stair", "universal-b", or a
    comma-separated decreasing list of position weights.
    """
    text = text.strip().lower()
    if text == "one-unit":
        return MultiUnit(1, n)
    if text.startswith("k-unit:"):
        return MultiUnit(int(text.split(":", 1)[1]), n)
    if text == "uniform-stair":
        return uniform_stair(n)
    if text == "universal-b":
        return Position(universal_b(n))
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ValueError(f"unrecognized rule spec: {text!r}") from None
    if len(values) != n:
        raise ValueError(f"expected {n} position weights, got {len(values)}")
    return Position(PositionWeights(values))
