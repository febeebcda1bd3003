"""Worker-pool evaluation of sample plans and run persistence.

A coordinator dispatches a plan's assignments to a pool of threads, each
owning a private solver engine.  Completed costs are committed to the
running sum in assignment-index order, so a complete estimate is
bit-identical to the sequential one for any worker count, and the moment
the committed partial sum exceeds the interruption threshold, all workers
are signalled to abandon their in-flight solves.  Abandoned costs never
enter any sum.
"""

from __future__ import annotations

import datetime as _dt
import importlib.resources
import json
import os
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .cnf import CnfFormula
from .decomposition import DecompositionSet, SamplePlan, draw_sample
from .predictive import (
    DEFAULT_GAMMA,
    DEFAULT_SAMPLE_SIZE,
    CostAccumulator,
    LimitExceededError,
    PredictiveEstimate,
    _complete_estimate,
    _interrupted_estimate,
    estimate,
    solve_whole,
)
from .solver import CdclSolver, CostMetric, SolveLimits, SolveStatus
from .tabu import SearchConfig, SearchReport, run_search

ENV_WORKERS = "PARTSAT_WORKERS"
ENV_TIME_LIMIT = "PARTSAT_TIME_LIMIT"


class WorkerError(RuntimeError):
    """A worker thread crashed; the run aborts rather than lose observations."""


@dataclass
class PoolStats:
    """Dispatch reconciliation for one parallel evaluation."""

    dispatched: int = 0
    solved: int = 0
    abandoned: int = 0
    per_worker: dict[str, int] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "dispatched": self.dispatched,
            "solved": self.solved,
            "abandoned": self.abandoned,
            "per_worker": dict(sorted(self.per_worker.items())),
        }


def evaluate_parallel(formula: CnfFormula, plan: SamplePlan, workers: int, *,
                      metric: CostMetric = CostMetric.WALL_TIME,
                      best_known: Optional[float] = None,
                      best_known_reason: str = "best_known",
                      gamma: float = DEFAULT_GAMMA,
                      deadline: Optional[float] = None,
                      limit_as_cap: bool = False,
                      keep_costs: bool = False,
                      stats: Optional[PoolStats] = None) -> PredictiveEstimate:
    """Evaluate a plan on a worker pool; semantics of sequential estimate().

    Workers race ahead on later assignments, but costs are committed in
    index order, so COMPLETE results match the single-worker estimate
    bit for bit and INTERRUPTED lower bounds are scheduling-invariant.
    """
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    if workers == 1:
        return estimate(formula, plan, metric=metric, best_known=best_known,
                        best_known_reason=best_known_reason, gamma=gamma,
                        deadline=deadline, limit_as_cap=limit_as_cap,
                        keep_costs=keep_costs)

    cancel = threading.Event()
    local = threading.local()

    def worker(index: int):
        if cancel.is_set():
            return index, None
        engine = getattr(local, "engine", None)
        if engine is None:
            engine = CdclSolver(formula)
            local.engine = engine
        max_seconds = None
        if deadline is not None:
            max_seconds = max(deadline - time.monotonic(), 0.0)
        limits = SolveLimits(max_seconds=max_seconds, interrupt=cancel.is_set)
        result = engine.solve(plan.assignment(index), limits)
        if result.status is SolveStatus.LIMIT and result.limit_reason == "interrupt":
            return index, None
        name = threading.current_thread().name
        if stats is not None:
            stats.per_worker[name] = stats.per_worker.get(name, 0) + 1
        return index, result

    acc = CostAccumulator(plan.d, plan.size)
    costs: list[float] = []
    statuses: list[str] = []
    censored = 0
    ready: dict[int, object] = {}
    next_commit = 0
    outcome = None  # None while undecided, else the final estimate

    with ThreadPoolExecutor(max_workers=workers,
                            thread_name_prefix="partsat-worker") as pool:
        pending = {pool.submit(worker, i) for i in range(plan.size)}
        if stats is not None:
            stats.dispatched = plan.size
        try:
            while pending:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for future in done:
                    exc = future.exception()
                    if exc is not None:
                        cancel.set()
                        raise WorkerError(
                            f"worker crashed while sampling: {exc!r}") from exc
                    index, result = future.result()
                    if result is None:
                        if stats is not None:
                            stats.abandoned += 1
                        continue
                    if stats is not None:
                        stats.solved += 1
                    ready[index] = result
                if outcome is not None:
                    continue
                # Commit results in index order (Eq.-style running sum).
                while next_commit in ready:
                    result = ready.pop(next_commit)
                    next_commit += 1
                    if result.status is SolveStatus.LIMIT:
                        hit_deadline = (deadline is not None
                                        and result.limit_reason == "time")
                        if hit_deadline:
                            outcome = _interrupted_estimate(
                                acc, plan.seed, plan.d, plan.size, metric,
                                gamma, "deadline", censored)
                            cancel.set()
                            break
                        if not limit_as_cap:
                            cancel.set()
                            raise LimitExceededError(
                                f"solver hit {result.limit_reason} limit while "
                                f"sampling (observation {next_commit - 1})")
                        censored += 1
                    cost = metric.of(result.cost)
                    acc.add(cost)
                    costs.append(cost)
                    statuses.append(result.status.value)
                    if best_known is not None and acc.partial > best_known:
                        outcome = _interrupted_estimate(
                            acc, plan.seed, plan.d, plan.size, metric, gamma,
                            best_known_reason, censored)
                        cancel.set()
                        break
        finally:
            cancel.set()
    if outcome is not None:
        return outcome
    if len(costs) < plan.size:
        # Deadline starvation: workers timed out without LIMIT commits.
        return _interrupted_estimate(acc, plan.seed, plan.d, plan.size,
                                     metric, gamma, "deadline", censored)
    return _complete_estimate(acc, costs, statuses, plan.seed, plan.d,
                              plan.size, metric, gamma, censored, keep_costs)


def make_parallel_evaluator(formula: CnfFormula, *, workers: int,
                            metric: CostMetric = CostMetric.WALL_TIME,
                            n_samples: int = DEFAULT_SAMPLE_SIZE,
                            gamma: float = DEFAULT_GAMMA,
                            limit_as_cap: bool = False,
                            stats: Optional[PoolStats] = None):
    """Search-loop evaluator backed by evaluate_parallel."""
    whole_engine = CdclSolver(formula)

    def evaluator(dset: DecompositionSet, seed: int,
                  threshold: Optional[float] = None,
                  threshold_reason: str = "best_known",
                  deadline: Optional[float] = None) -> PredictiveEstimate:
        if dset.d == 0:
            return solve_whole(formula, metric=metric, solver=whole_engine,
                               best_known=threshold,
                               best_known_reason=threshold_reason,
                               gamma=gamma, deadline=deadline)
        plan = draw_sample(dset, n_samples, seed)
        return evaluate_parallel(formula, plan, workers, metric=metric,
                                 best_known=threshold,
                                 best_known_reason=threshold_reason,
                                 gamma=gamma, deadline=deadline,
                                 limit_as_cap=limit_as_cap, stats=stats)

    return evaluator


# -- run persistence ----------------------------------------------------------

@dataclass
class RunConfig:
    mode: str                               # "estimate" | "search" | "oracle"
    cnf_path: Optional[str] = None
    generator: Optional[str] = None
    variables: Optional[tuple[int, ...]] = None
    n_samples: int = DEFAULT_SAMPLE_SIZE
    seed: int = 0
    gamma: float = DEFAULT_GAMMA
    rho: int = 1
    metric: CostMetric = CostMetric.WALL_TIME
    workers: int = 1
    time_limit: Optional[float] = None
    first_point_cap: Optional[float] = None
    restrict_to_initial: bool = True
    limit_as_cap: bool = False
    output_dir: Optional[str] = None

    def __post_init__(self):
        env_workers = os.environ.get(ENV_WORKERS)
        if env_workers:
            self.workers = int(env_workers)
        env_limit = os.environ.get(ENV_TIME_LIMIT)
        if env_limit:
            self.time_limit = float(env_limit)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2 for interval computation")

    def to_json_dict(self) -> dict:
        doc = {
            "mode": self.mode,
            "cnf_path": self.cnf_path,
            "generator": self.generator,
            "variables": list(self.variables) if self.variables else None,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "gamma": self.gamma,
            "rho": self.rho,
            "metric": self.metric.value,
            "workers": self.workers,
            "time_limit": self.time_limit,
            "first_point_cap": self.first_point_cap,
            "restrict_to_initial": self.restrict_to_initial,
            "limit_as_cap": self.limit_as_cap,
        }
        return doc


def _load_schema() -> dict:
    resource = importlib.resources.files("partsat.schemas") / "report.schema.json"
    return json.loads(resource.read_text())


def validate_report(doc: dict) -> None:
    """Check a report document against the checked-in schema."""
    jsonschema.validate(doc, _load_schema())


@dataclass
class RunRecord:
    config: RunConfig
    started: str = ""
    finished: str = ""
    report: Optional[dict] = None
    estimates: list[dict] = field(default_factory=list)
    csv_rows: list[tuple] = field(default_factory=list)
    worker_stats: Optional[PoolStats] = None

    @staticmethod
    def now() -> str:
        return _dt.datetime.now(_dt.timezone.utc).isoformat()

    def save(self, out_dir) -> Path:
        """Write config.json, report.json, estimates.jsonl, and log.csv."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(
            json.dumps(self.config.to_json_dict(), indent=2) + "\n")
        doc = {
            "started": self.started,
            "finished": self.finished,
            "mode": self.config.mode,
            "report": self.report,
            "worker_stats": (self.worker_stats.to_json_dict()
                             if self.worker_stats else None),
        }
        validate_report(doc)
        (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")
        with open(out / "estimates.jsonl", "w") as handle:
            for record in self.estimates:
                handle.write(json.dumps(record) + "\n")
        with open(out / "log.csv", "w") as handle:
            for row in self.csv_rows:
                handle.write(",".join(str(cell) for cell in row) + "\n")
        return out


def run_estimate(formula: CnfFormula, config: RunConfig) -> tuple[PredictiveEstimate, RunRecord]:
    """One decomposition set -> one estimate, persisted."""
    if not config.variables:
        raise ValueError("estimate mode needs a decomposition set")
    dset = DecompositionSet.of(config.variables)
    plan = draw_sample(dset, config.n_samples, config.seed)
    stats = PoolStats()
    record = RunRecord(config=config, started=RunRecord.now(), worker_stats=stats)
    deadline = (time.monotonic() + config.time_limit
                if config.time_limit is not None else None)
    est = evaluate_parallel(formula, plan, config.workers, metric=config.metric,
                            gamma=config.gamma, deadline=deadline,
                            limit_as_cap=config.limit_as_cap, keep_costs=True,
                            stats=stats)
    record.finished = RunRecord.now()
    record.report = {"estimate": est.to_json_dict(dset.variables)}
    record.estimates = [est.to_json_dict(dset.variables)]
    record.csv_rows = [("variables", "status", "value", "completed"),
                       (";".join(map(str, dset.variables)), est.status.value,
                        est.value, est.completed)]
    return est, record


def run_tabu(formula: CnfFormula, initial: DecompositionSet,
             config: RunConfig) -> tuple[SearchReport, RunRecord]:
    """Full decomposition-set search, persisted."""
    stats = PoolStats()
    record = RunRecord(config=config, started=RunRecord.now(), worker_stats=stats)
    search_config = SearchConfig(
        n_samples=config.n_samples, seed=config.seed, rho=config.rho,
        gamma=config.gamma, metric=config.metric,
        time_limit=config.time_limit,
        restrict_to_initial=config.restrict_to_initial,
        first_point_cap=config.first_point_cap,
        limit_as_cap=config.limit_as_cap)
    evaluator = None
    if config.workers > 1:
        evaluator = make_parallel_evaluator(
            formula, workers=config.workers, metric=config.metric,
            n_samples=config.n_samples, gamma=config.gamma,
            limit_as_cap=config.limit_as_cap, stats=stats)
    report = run_search(formula, initial, search_config, evaluator=evaluator)
    record.finished = RunRecord.now()
    record.report = {"search": report.to_json_dict(include_log=False)}
    record.estimates = [rec.to_json_dict() for rec in report.evaluations]
    record.csv_rows = report.csv_rows()
    return report, record
