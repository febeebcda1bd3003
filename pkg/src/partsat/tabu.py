"""Tabu search for a decomposition set minimizing the predicted total cost.

The search walks the Boolean hypercube of candidate sets.  Every evaluated
point carries a neighborhood vector marking which of its radius-rho
neighbors have been evaluated; points with fully explored neighborhoods sit
in list L1, the rest in L2.  Each iteration scans the unexplored neighbors
of the current point in a fixed order, evaluating the predictor with the
best known value as an interruption threshold, and moves to the first
strict improvement.  When a whole neighborhood fails to improve, the next
current point is drawn from L2: uniformly among the points closest (in
Hamming distance) to the best known point.  The search stops when L2 is
empty or the time limit expires.  No point is ever evaluated twice.
"""

from __future__ import annotations

import hashlib
import math
import random
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

from .cnf import CnfFormula
from .decomposition import DecompositionSet, chi_encode
from .predictive import (
    DEFAULT_GAMMA,
    DEFAULT_SAMPLE_SIZE,
    EstimateStatus,
    PredictiveEstimate,
    make_sequential_evaluator,
)
from .solver import CdclSolver, CostMetric

# evaluator(dset, plan_seed, threshold, threshold_reason, deadline) -> estimate
Evaluator = Callable[
    [DecompositionSet, int, Optional[float], str, Optional[float]],
    PredictiveEstimate,
]


class SupbsVerificationError(ValueError):
    """The claimed backdoor set failed its unit-propagation check."""


@dataclass(frozen=True)
class SearchConfig:
    n_samples: int = DEFAULT_SAMPLE_SIZE
    seed: int = 0
    rho: int = 1
    gamma: float = DEFAULT_GAMMA
    metric: CostMetric = CostMetric.WALL_TIME
    time_limit: Optional[float] = None
    restrict_to_initial: bool = True
    first_point_cap: Optional[float] = None
    limit_as_cap: bool = False
    check_invariants: bool = False


@dataclass(frozen=True)
class EvalRecord:
    order: int
    variables: tuple[int, ...]
    d: int
    status: str
    value: float
    completed: int
    interrupt_reason: Optional[str]
    wall_seconds: float
    mean: Optional[float] = None
    s2: Optional[float] = None
    ci_half_width: Optional[float] = None

    def to_json_dict(self) -> dict:
        return {
            "order": self.order,
            "variables": list(self.variables),
            "d": self.d,
            "status": self.status,
            "value": self.value,
            "completed": self.completed,
            "interrupt_reason": self.interrupt_reason,
            "wall_seconds": self.wall_seconds,
            "mean": self.mean,
            "s2": self.s2,
            "ci_half_width": self.ci_half_width,
        }


CSV_HEADER = ("order", "d", "variables", "status", "value", "completed",
              "interrupt_reason", "wall_seconds")


@dataclass
class SearchReport:
    num_vars: int
    universe: tuple[int, ...]
    best_variables: Optional[tuple[int, ...]]
    best_value: Optional[float]
    stop_reason: str
    iterations: int
    completed_count: int
    interrupted_count: int
    l1_size: int
    l2_size: int
    elapsed_seconds: float
    evaluations: list[EvalRecord] = field(default_factory=list)

    @property
    def best_chi(self) -> Optional[tuple[int, ...]]:
        if self.best_variables is None:
            return None
        return chi_encode(DecompositionSet.of(self.best_variables), self.num_vars)

    @property
    def counters(self) -> dict[str, int]:
        return {
            "completed": self.completed_count,
            "interrupted": self.interrupted_count,
            "l1": self.l1_size,
            "l2": self.l2_size,
        }

    def to_json_dict(self, include_log: bool = True) -> dict:
        doc = {
            "num_vars": self.num_vars,
            "universe": list(self.universe),
            "best_variables": (list(self.best_variables)
                               if self.best_variables is not None else None),
            "best_chi": (list(self.best_chi)
                         if self.best_variables is not None else None),
            "best_value": self.best_value,
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "counters": self.counters,
            "elapsed_seconds": self.elapsed_seconds,
        }
        if include_log:
            doc["evaluations"] = [rec.to_json_dict() for rec in self.evaluations]
        return doc

    def csv_rows(self) -> list[tuple]:
        rows = [CSV_HEADER]
        for rec in self.evaluations:
            rows.append((rec.order, rec.d,
                         ";".join(str(v) for v in rec.variables),
                         rec.status, rec.value, rec.completed,
                         rec.interrupt_reason or "", rec.wall_seconds))
        return rows


def flip_combinations(universe_size: int, rho: int) -> list[tuple[int, ...]]:
    """All position tuples to flip, size-major then lexicographic.

    The k-th tuple is the fixed identity of the k-th neighbor of any point:
    neighborhood vectors index into this list on both sides of a flip.
    """
    if not 1 <= rho <= max(universe_size, 1):
        raise ValueError(f"rho must be in 1..{universe_size}")
    combos: list[tuple[int, ...]] = []
    for size in range(1, rho + 1):
        combos.extend(combinations(range(universe_size), size))
    return combos


def neighbors(chi: Sequence[int], rho: int) -> list[tuple[int, ...]]:
    """Punctured neighborhood of a chi vector, in the fixed flip order."""
    bits = tuple(int(b) for b in chi)
    result = []
    for combo in flip_combinations(len(bits), rho):
        flipped = list(bits)
        for pos in combo:
            flipped[pos] = 1 - flipped[pos]
        result.append(tuple(flipped))
    return result


def plan_seed(run_seed: int, variables: Iterable[int]) -> int:
    """Per-point sampling seed: a stable hash of the run seed and the set.

    Depends only on the point, not on visit order, so any run (or an
    offline oracle) evaluating the same point draws the same sample.
    """
    text = f"plan:{run_seed}:{','.join(str(v) for v in sorted(variables))}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _search_rng(run_seed: int) -> random.Random:
    digest = hashlib.sha256(f"tabu:{run_seed}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class _Point:
    theta: bytearray
    remaining: int


class _TabuState:
    """Mutable search state: the two tabu lists and the evaluation map."""

    def __init__(self, universe: tuple[int, ...], combos: list[tuple[int, ...]]):
        self.universe = universe
        self.combos = combos
        self.l1: dict[frozenset, _Point] = {}
        self.l2: dict[frozenset, _Point] = {}
        self.evaluated: dict[frozenset, EvalRecord] = {}

    def flip(self, point: frozenset, combo: tuple[int, ...]) -> frozenset:
        return point.symmetric_difference(self.universe[p] for p in combo)

    def register(self, fs: frozenset, record: EvalRecord) -> _Point:
        """Add a fresh evaluation; update neighborhood vectors both ways."""
        assert fs not in self.evaluated, "point evaluated twice"
        self.evaluated[fs] = record
        combos = self.combos
        theta = bytearray(len(combos))
        remaining = len(combos)
        migrate = []
        for j, combo in enumerate(combos):
            neighbor = self.flip(fs, combo)
            if neighbor in self.evaluated:
                theta[j] = 1
                remaining -= 1
                other = self.l2.get(neighbor)
                if other is not None:
                    # The flip set is the same seen from either endpoint, so
                    # the neighbor's bit for `fs` lives at the same index.
                    other.theta[j] = 1
                    other.remaining -= 1
                    if other.remaining == 0:
                        migrate.append(neighbor)
        for key in migrate:
            self.l1[key] = self.l2.pop(key)
        point = _Point(theta, remaining)
        if remaining == 0:
            self.l1[fs] = point
        else:
            self.l2[fs] = point
        return point

    def check_invariants(self, psi, best_fs, bootstrap_only):
        assert not (self.l1.keys() & self.l2.keys()), "L1 and L2 overlap"
        assert set(self.evaluated) == set(self.l1) | set(self.l2), \
            "evaluated points must sit in exactly one list"
        for key, point in list(self.l1.items()) + list(self.l2.items()):
            zeros = 0
            for j, combo in enumerate(self.combos):
                neighbor = self.flip(key, combo)
                expect = 1 if neighbor in self.evaluated else 0
                assert point.theta[j] == expect, "theta out of sync"
                zeros += 1 - expect
            assert point.remaining == zeros
            assert (zeros == 0) == (key in self.l1), "list membership vs theta"
        complete = [rec.value for rec in self.evaluated.values()
                    if rec.status == EstimateStatus.COMPLETE.value]
        if complete:
            assert not bootstrap_only
            assert psi == min(complete), "best value must equal min complete"
        if best_fs is not None:
            rec = self.evaluated[best_fs]
            assert rec.status == EstimateStatus.COMPLETE.value


def run_search(formula: CnfFormula, initial_set: DecompositionSet,
               config: SearchConfig,
               evaluator: Optional[Evaluator] = None) -> SearchReport:
    """Minimize the predicted total cost over decomposition sets.

    The search space covers the initial set's variables when
    `config.restrict_to_initial` is set (all other variables frozen out),
    otherwise the whole hypercube over the formula's variables.
    """
    start = time.monotonic()
    deadline = start + config.time_limit if config.time_limit is not None else None
    if config.time_limit is not None and config.time_limit <= 0:
        raise ValueError("time limit must be positive")
    if config.restrict_to_initial:
        universe = initial_set.variables
    else:
        universe = tuple(range(1, formula.num_vars + 1))
    if initial_set.variables and initial_set.variables[-1] > formula.num_vars:
        raise ValueError("initial set variable out of formula range")
    if evaluator is None:
        evaluator = make_sequential_evaluator(
            formula, metric=config.metric, n_samples=config.n_samples,
            gamma=config.gamma, limit_as_cap=config.limit_as_cap)

    combos = flip_combinations(len(universe), config.rho) if universe else []
    state = _TabuState(universe, combos)
    rng = _search_rng(config.seed)

    psi: Optional[float] = None
    best_fs: Optional[frozenset] = None
    bootstrap_only = False  # psi holds a cap-derived bound, no COMPLETE yet
    iterations = 0
    completed_count = 0
    interrupted_count = 0
    stop_reason = "exhausted"

    def evaluate(fs: frozenset) -> EvalRecord:
        nonlocal completed_count, interrupted_count
        svars = tuple(sorted(fs))
        if psi is not None:
            threshold, reason = psi, "best_known"
        else:
            threshold, reason = config.first_point_cap, "cap"
        t0 = time.monotonic()
        est = evaluator(DecompositionSet(svars), plan_seed(config.seed, svars),
                        threshold, reason, deadline)
        wall = time.monotonic() - t0
        record = EvalRecord(
            order=len(state.evaluated), variables=svars, d=len(svars),
            status=est.status.value, value=est.value, completed=est.completed,
            interrupt_reason=est.interrupt_reason, wall_seconds=wall,
            mean=est.mean, s2=est.s2, ci_half_width=est.ci_half_width)
        if est.status is EstimateStatus.COMPLETE:
            completed_count += 1
        else:
            interrupted_count += 1
        state.register(fs, record)
        return record

    def maybe_check() -> None:
        if config.check_invariants:
            state.check_invariants(psi, best_fs, bootstrap_only)

    def out_of_time() -> bool:
        return deadline is not None and time.monotonic() >= deadline

    # Starting point.
    initial_fs = frozenset(initial_set.variables)
    record = evaluate(initial_fs)
    if record.status == EstimateStatus.COMPLETE.value:
        psi = record.value
        best_fs = initial_fs
    elif record.interrupt_reason == "cap":
        psi = record.value
        bootstrap_only = True
    maybe_check()
    current: Optional[frozenset] = initial_fs
    if record.interrupt_reason == "deadline" or out_of_time():
        stop_reason = "time_limit"
        current = None

    while stop_reason != "time_limit":
        if current is None:
            if not state.l2:
                stop_reason = "exhausted"
                break
            ref = best_fs if best_fs is not None else initial_fs
            best_dist = min(len(ref ^ key) for key in state.l2)
            candidates = sorted(
                (key for key in state.l2 if len(ref ^ key) == best_dist),
                key=lambda key: tuple(sorted(key)))
            current = rng.choice(candidates)
        point = state.l2.get(current) or state.l1.get(current)
        pending = [j for j in range(len(combos)) if point.theta[j] == 0]
        improved = False
        for j in pending:
            if out_of_time():
                stop_reason = "time_limit"
                break
            neighbor = state.flip(current, combos[j])
            record = evaluate(neighbor)
            if record.interrupt_reason == "deadline":
                stop_reason = "time_limit"
                break
            if record.status == EstimateStatus.COMPLETE.value and (
                    psi is None or record.value < psi):
                psi = record.value
                best_fs = neighbor
                bootstrap_only = False
                maybe_check()
                neighbor_point = state.l2.get(neighbor)
                # Move to the improving point when it still has unexplored
                # neighbors; otherwise pick from L2 next round.
                current = neighbor if neighbor_point is not None else None
                improved = True
                break
            maybe_check()
        if stop_reason == "time_limit":
            break
        iterations += 1
        if not improved:
            current = None
        if current is None and not state.l2:
            stop_reason = "exhausted"
            break

    best_vars = tuple(sorted(best_fs)) if best_fs is not None else None
    return SearchReport(
        num_vars=formula.num_vars,
        universe=universe,
        best_variables=best_vars,
        best_value=psi if best_fs is not None else None,
        stop_reason=stop_reason,
        iterations=iterations,
        completed_count=completed_count,
        interrupted_count=interrupted_count,
        l1_size=len(state.l1),
        l2_size=len(state.l2),
        elapsed_seconds=time.monotonic() - start,
        evaluations=list(state.evaluated.values()),
    )


@dataclass(frozen=True)
class SupbsInit:
    """Verified initial point and the search space it induces."""

    initial: DecompositionSet
    chi0: tuple[int, ...]
    universe: tuple[int, ...]


def init_from_supbs(formula: CnfFormula, supbs_vars: DecompositionSet,
                    restrict: bool = True, *, checks: int = 100, seed: int = 0,
                    engine: Optional[CdclSolver] = None) -> SupbsInit:
    """Verify that the set is a strong unit-propagation backdoor and build
    the starting point.

    Verification substitutes `checks` random full assignments of the set and
    requires unit propagation alone to decide each one; any undecided case
    rejects the set with a diagnostic.  With `restrict`, the search space
    shrinks to subsets of the given variables.
    """
    if supbs_vars.variables and supbs_vars.variables[-1] > formula.num_vars:
        raise ValueError("backdoor variable out of formula range")
    if engine is None:
        engine = CdclSolver(formula)
    rng = random.Random(plan_seed(seed, supbs_vars.variables) ^ 0xC0FFEE)
    d = supbs_vars.d
    for trial in range(checks):
        mask = rng.getrandbits(d) if d else 0
        assignment = supbs_vars.assignment(mask)
        status = engine.propagation_status(assignment)
        if status == "UNDECIDED":
            bits = "".join(str((mask >> i) & 1) for i in range(d))
            raise SupbsVerificationError(
                f"unit propagation left assignment {bits} of "
                f"{supbs_vars.variables} undecided (trial {trial})")
    universe = supbs_vars.variables if restrict else tuple(
        range(1, formula.num_vars + 1))
    return SupbsInit(supbs_vars, chi_encode(supbs_vars, formula.num_vars), universe)
