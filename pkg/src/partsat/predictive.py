"""Monte Carlo estimation of the total cost of solving a decomposition family.

For a decomposition set of d variables, the estimator runs the solver on N
sampled subproblems and reports 2^d times the sample mean of the per-solve
costs: an unbiased estimate of the total cost of solving all 2^d family
members.  The running partial sum is maintained incrementally so the
computation can be interrupted as soon as it provably exceeds a best known
value; an interrupted point reports a sound lower bound instead of an
estimate.  Confidence intervals use the Student-t quantile on the unbiased
sample variance.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from scipy import stats

from .cnf import CnfFormula
from .decomposition import (
    DEFAULT_ENUMERATION_BUDGET,
    DecompositionSet,
    SamplePlan,
)
from .solver import CdclSolver, CostMetric, SolveLimits, SolveStatus

DEFAULT_GAMMA = 0.999
DEFAULT_SAMPLE_SIZE = 10000


class EstimateStatus(str, Enum):
    COMPLETE = "COMPLETE"
    INTERRUPTED = "INTERRUPTED"


class LimitExceededError(RuntimeError):
    """A solver LIMIT outcome reached the estimator without an opt-in policy."""


def predicted_total(d: int, mean_cost: float) -> float:
    """Total-cost prediction 2^d * mean; exact scaling by a power of two."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    return math.ldexp(mean_cost, d)


def sample_variance(costs: Sequence[float]) -> float:
    """Unbiased sample variance with k-1 in the denominator; needs k >= 2."""
    k = len(costs)
    if k < 2:
        raise ValueError("sample variance requires at least two observations")
    mean = math.fsum(costs) / k
    return math.fsum((c - mean) ** 2 for c in costs) / (k - 1)


def student_t_quantile(gamma: float, df: int) -> float:
    """Two-sided Student-t quantile: |T| < q with probability gamma."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {gamma}")
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return float(stats.t.ppf((1.0 + gamma) / 2.0, df))


def confidence_halfwidth(s2: float, n_samples: int, gamma: float) -> float:
    """Half-width t_{gamma,N-1} * s / sqrt(N) of the mean's CI."""
    if n_samples < 2:
        raise ValueError("confidence interval requires N >= 2")
    if s2 < 0:
        raise ValueError("variance must be nonnegative")
    return student_t_quantile(gamma, n_samples - 1) * math.sqrt(s2) / math.sqrt(n_samples)


class CostAccumulator:
    """Incremental partial sums of (2^d / N) * cost, one observation at a time.

    Both the sequential estimator and the parallel coordinator push completed
    costs through this class in a fixed order, so complete estimates are
    bit-identical regardless of worker count.
    """

    __slots__ = ("scale", "partial", "count")

    def __init__(self, d: int, n_samples: int):
        self.scale = math.ldexp(1.0, d) / n_samples
        self.partial = 0.0
        self.count = 0

    def add(self, cost: float) -> float:
        if cost < 0:
            raise ValueError("costs must be nonnegative")
        self.partial += self.scale * cost
        self.count += 1
        return self.partial


@dataclass(frozen=True)
class ObservationSet:
    """Per-observation costs and solver statuses backing an estimate."""

    costs: tuple[float, ...]
    statuses: tuple[str, ...]


@dataclass(frozen=True)
class PredictiveEstimate:
    """Outcome of evaluating one decomposition set.

    COMPLETE: `value` is the total-cost estimate 2^d * mean over all N
    observations.  INTERRUPTED: `value` is a lower bound on that estimate
    (the partial sum at the moment of interruption); mean/s2/ci are absent.
    """

    d: int
    n_samples: int
    seed: Optional[int]
    metric: CostMetric
    gamma: float
    status: EstimateStatus
    value: float
    completed: int
    mean: Optional[float] = None
    s2: Optional[float] = None
    ci_half_width: Optional[float] = None
    min_cost: Optional[float] = None
    max_cost: Optional[float] = None
    sat_count: int = 0
    unsat_count: int = 0
    interrupt_reason: Optional[str] = None
    censored: int = 0
    observations: Optional[ObservationSet] = field(default=None, repr=False)

    @property
    def total(self) -> float:
        if self.status is not EstimateStatus.COMPLETE:
            raise ValueError("total is only defined for COMPLETE estimates")
        return self.value

    @property
    def lower_bound(self) -> float:
        return self.value

    def to_json_dict(self, variables: Optional[Sequence[int]] = None,
                     include_costs: bool = False) -> dict:
        doc = {
            "d": self.d,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "metric": self.metric.value,
            "gamma": self.gamma,
            "status": self.status.value,
            "value": self.value,
            "completed": self.completed,
            "mean": self.mean,
            "s2": self.s2,
            "ci_half_width": self.ci_half_width,
            "min_cost": self.min_cost,
            "max_cost": self.max_cost,
            "sat_count": self.sat_count,
            "unsat_count": self.unsat_count,
            "interrupt_reason": self.interrupt_reason,
            "censored": self.censored,
        }
        if variables is not None:
            doc["variables"] = list(variables)
        if include_costs and self.observations is not None:
            doc["costs"] = list(self.observations.costs)
            doc["statuses"] = list(self.observations.statuses)
        return doc


def _complete_estimate(acc: CostAccumulator, costs: list[float],
                       statuses: list[str], plan_seed, d, n_samples, metric,
                       gamma, censored, keep_costs) -> PredictiveEstimate:
    value = acc.partial
    mean = value / math.ldexp(1.0, d)
    if n_samples >= 2:
        s2 = sample_variance(costs)
        ci = confidence_halfwidth(s2, n_samples, gamma)
    else:
        s2 = None
        ci = None
    return PredictiveEstimate(
        d=d, n_samples=n_samples, seed=plan_seed, metric=metric, gamma=gamma,
        status=EstimateStatus.COMPLETE, value=value, completed=len(costs),
        mean=mean, s2=s2, ci_half_width=ci,
        min_cost=min(costs), max_cost=max(costs),
        sat_count=statuses.count(SolveStatus.SAT.value),
        unsat_count=statuses.count(SolveStatus.UNSAT.value),
        censored=censored,
        observations=ObservationSet(tuple(costs), tuple(statuses)) if keep_costs else None,
    )


def _interrupted_estimate(acc, plan_seed, d, n_samples, metric, gamma,
                          reason, censored) -> PredictiveEstimate:
    return PredictiveEstimate(
        d=d, n_samples=n_samples, seed=plan_seed, metric=metric, gamma=gamma,
        status=EstimateStatus.INTERRUPTED, value=acc.partial,
        completed=acc.count, interrupt_reason=reason, censored=censored,
    )


def estimate(formula: CnfFormula, plan: SamplePlan, *,
             metric: CostMetric = CostMetric.WALL_TIME,
             solver: Optional[CdclSolver] = None,
             best_known: Optional[float] = None,
             best_known_reason: str = "best_known",
             gamma: float = DEFAULT_GAMMA,
             deadline: Optional[float] = None,
             solve_limits: Optional[SolveLimits] = None,
             limit_as_cap: bool = False,
             keep_costs: bool = False) -> PredictiveEstimate:
    """Evaluate a sample plan sequentially.

    Without `best_known` the result is COMPLETE over all N observations.
    With it, the evaluation stops the moment the running partial sum exceeds
    `best_known`, returning an INTERRUPTED estimate whose value is a sound
    lower bound (strictly above `best_known`).  `deadline` is an absolute
    time.monotonic() instant; crossing it abandons the point.  Solver LIMIT
    outcomes raise LimitExceededError unless `limit_as_cap` accepts the
    capped cost as an observation (counted in `censored`).
    """
    if plan.size < 1:
        raise ValueError("plan is empty")
    d = plan.d
    if solver is None:
        solver = CdclSolver(formula)
    acc = CostAccumulator(d, plan.size)
    costs: list[float] = []
    statuses: list[str] = []
    censored = 0
    for j in range(plan.size):
        limits = solve_limits
        if deadline is not None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return _interrupted_estimate(acc, plan.seed, d, plan.size,
                                             metric, gamma, "deadline", censored)
            base_sec = limits.max_seconds if limits else None
            cap_sec = remaining if base_sec is None else min(base_sec, remaining)
            limits = SolveLimits(
                max_decisions=limits.max_decisions if limits else None,
                max_conflicts=limits.max_conflicts if limits else None,
                max_propagations=limits.max_propagations if limits else None,
                max_seconds=cap_sec,
                interrupt=limits.interrupt if limits else None,
            )
        result = solver.solve(plan.assignment(j), limits)
        if result.status is SolveStatus.LIMIT:
            hit_deadline = (
                deadline is not None and result.limit_reason == "time"
                and time.monotonic() >= deadline)
            if hit_deadline:
                return _interrupted_estimate(acc, plan.seed, d, plan.size,
                                             metric, gamma, "deadline", censored)
            if not limit_as_cap:
                raise LimitExceededError(
                    f"solver hit {result.limit_reason} limit while sampling "
                    f"(observation {j})")
            censored += 1
        cost = metric.of(result.cost)
        acc.add(cost)
        costs.append(cost)
        statuses.append(result.status.value)
        if best_known is not None and acc.partial > best_known:
            return _interrupted_estimate(acc, plan.seed, d, plan.size,
                                         metric, gamma, best_known_reason, censored)
    return _complete_estimate(acc, costs, statuses, plan.seed, d, plan.size,
                              metric, gamma, censored, keep_costs)


def solve_whole(formula: CnfFormula, *,
                metric: CostMetric = CostMetric.WALL_TIME,
                solver: Optional[CdclSolver] = None,
                best_known: Optional[float] = None,
                best_known_reason: str = "best_known",
                gamma: float = DEFAULT_GAMMA,
                deadline: Optional[float] = None) -> PredictiveEstimate:
    """Degenerate d=0 evaluation: solve the formula once, total = that cost.

    A `best_known` threshold translates into a solver resource cap in the
    chosen metric; hitting it yields INTERRUPTED with the observed cost
    (which then exceeds the threshold) as the lower bound.
    """
    if solver is None:
        solver = CdclSolver(formula)
    max_dec = max_prop = max_sec = None
    if best_known is not None:
        if metric is CostMetric.DECISIONS:
            max_dec = int(best_known) + 1
        elif metric is CostMetric.PROPAGATIONS:
            max_prop = int(best_known) + 1
        else:
            max_sec = best_known
    if deadline is not None:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return PredictiveEstimate(
                d=0, n_samples=1, seed=None, metric=metric, gamma=gamma,
                status=EstimateStatus.INTERRUPTED, value=0.0, completed=0,
                interrupt_reason="deadline")
        max_sec = remaining if max_sec is None else min(max_sec, remaining)
    limits = None
    if max_dec is not None or max_prop is not None or max_sec is not None:
        limits = SolveLimits(max_decisions=max_dec, max_propagations=max_prop,
                             max_seconds=max_sec)
    result = solver.solve(None, limits)
    cost = metric.of(result.cost)
    if result.status is SolveStatus.LIMIT:
        reason = "deadline" if result.limit_reason == "time" and deadline is not None \
            and time.monotonic() >= deadline else best_known_reason
        return PredictiveEstimate(
            d=0, n_samples=1, seed=None, metric=metric, gamma=gamma,
            status=EstimateStatus.INTERRUPTED, value=cost, completed=0,
            interrupt_reason=reason)
    return PredictiveEstimate(
        d=0, n_samples=1, seed=None, metric=metric, gamma=gamma,
        status=EstimateStatus.COMPLETE, value=cost, completed=1, mean=cost,
        s2=None, ci_half_width=None, min_cost=cost, max_cost=cost,
        sat_count=int(result.status is SolveStatus.SAT),
        unsat_count=int(result.status is SolveStatus.UNSAT),
    )


def make_sequential_evaluator(formula: CnfFormula, *,
                              metric: CostMetric = CostMetric.WALL_TIME,
                              n_samples: int = DEFAULT_SAMPLE_SIZE,
                              gamma: float = DEFAULT_GAMMA,
                              limit_as_cap: bool = False,
                              keep_costs: bool = False):
    """Point evaluator over one private engine, for the search loop.

    The returned callable maps (decomposition set, plan seed, threshold,
    threshold reason, deadline) to a PredictiveEstimate; the empty set is
    evaluated as a single whole-formula solve.
    """
    from .decomposition import draw_sample

    engine = CdclSolver(formula)

    def evaluator(dset: DecompositionSet, seed: int,
                  threshold: Optional[float] = None,
                  threshold_reason: str = "best_known",
                  deadline: Optional[float] = None) -> PredictiveEstimate:
        if dset.d == 0:
            return solve_whole(formula, metric=metric, solver=engine,
                               best_known=threshold,
                               best_known_reason=threshold_reason,
                               gamma=gamma, deadline=deadline)
        plan = draw_sample(dset, n_samples, seed)
        return estimate(formula, plan, metric=metric, solver=engine,
                        best_known=threshold,
                        best_known_reason=threshold_reason, gamma=gamma,
                        deadline=deadline, limit_as_cap=limit_as_cap,
                        keep_costs=keep_costs)

    return evaluator


def exhaustive_total(formula: CnfFormula, dset: DecompositionSet, *,
                     metric: CostMetric = CostMetric.WALL_TIME,
                     solver: Optional[CdclSolver] = None,
                     budget: int = DEFAULT_ENUMERATION_BUDGET) -> float:
    """Sum of solver costs over all 2^d family members (the exact total).

    Serves as the independent oracle for the Monte Carlo estimator on
    enumerable decomposition sets.
    """
    if dset.d > budget:
        raise ValueError(f"2^{dset.d} family members exceed budget 2^{budget}")
    if solver is None:
        solver = CdclSolver(formula)
    total = 0.0
    for mask in range(1 << dset.d):
        result = solver.solve(dset.assignment(mask))
        total += metric.of(result.cost)
    return total
