import json
import random

import pytest

from partsat.cnf import CnfFormula
from partsat.decomposition import DecompositionSet, SamplePlan, draw_sample
from partsat.predictive import EstimateStatus, estimate
from partsat.runner import (
    PoolStats,
    RunConfig,
    RunRecord,
    WorkerError,
    evaluate_parallel,
    make_parallel_evaluator,
    run_estimate,
    run_tabu,
    validate_report,
)
from partsat.solver import CostMetric
from partsat.tabu import run_search, SearchConfig


def random_ksat(rng, n, m, k=3):
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), k)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return CnfFormula(n, clauses)


@pytest.fixture
def setup():
    rng = random.Random(8)
    formula = random_ksat(rng, 18, 72)
    dset = DecompositionSet.of(rng.sample(range(1, 19), 5))
    plan = draw_sample(dset, 24, seed=4)
    return formula, plan


def test_single_worker_matches_sequential(setup):
    formula, plan = setup
    seq = estimate(formula, plan, metric=CostMetric.DECISIONS)
    par = evaluate_parallel(formula, plan, 1, metric=CostMetric.DECISIONS)
    assert par == seq


def test_multi_worker_complete_bit_identical(setup):
    formula, plan = setup
    seq = estimate(formula, plan, metric=CostMetric.DECISIONS)
    for workers in (2, 4, 8):
        par = evaluate_parallel(formula, plan, workers,
                                metric=CostMetric.DECISIONS)
        assert par.status is EstimateStatus.COMPLETE
        assert par.value == seq.value
        assert par.mean == seq.mean
        assert par.s2 == seq.s2
        assert par.ci_half_width == seq.ci_half_width


def test_multi_worker_interruption_matches_sequential(setup):
    formula, plan = setup
    seq_full = estimate(formula, plan, metric=CostMetric.DECISIONS)
    for factor in (0.2, 0.7, 1.5):
        threshold = seq_full.value * factor
        seq = estimate(formula, plan, metric=CostMetric.DECISIONS,
                       best_known=threshold)
        par = evaluate_parallel(formula, plan, 4, metric=CostMetric.DECISIONS,
                                best_known=threshold)
        assert par.status is seq.status
        assert par.value == seq.value
        assert par.completed == seq.completed
        if par.status is EstimateStatus.INTERRUPTED:
            assert threshold < par.value <= seq_full.value


def test_pool_stats_reconcile(setup):
    formula, plan = setup
    stats = PoolStats()
    evaluate_parallel(formula, plan, 4, metric=CostMetric.DECISIONS,
                      stats=stats)
    assert stats.dispatched == plan.size
    assert stats.solved + stats.abandoned == stats.dispatched
    assert sum(stats.per_worker.values()) == stats.solved


def test_worker_crash_aborts():
    formula = CnfFormula(4, [[1, 2], [-1, 3]])
    bad_plan = SamplePlan(DecompositionSet.of([2, 9]), seed=0, size=4,
                          assignments=(0, 1, 2, 3))  # var 9 out of range
    with pytest.raises(WorkerError):
        evaluate_parallel(formula, bad_plan, 2, metric=CostMetric.DECISIONS)


def test_parallel_evaluator_handles_empty_set(setup):
    formula, _ = setup
    evaluator = make_parallel_evaluator(formula, workers=2,
                                        metric=CostMetric.DECISIONS,
                                        n_samples=8)
    est = evaluator(DecompositionSet.of([]), 0)
    assert est.d == 0
    assert est.status is EstimateStatus.COMPLETE


def test_search_identical_across_worker_counts(setup):
    formula, _ = setup
    initial = DecompositionSet.of([2, 5, 9, 12])
    base = dict(mode="search", variables=initial.variables, n_samples=8,
                seed=3, metric=CostMetric.DECISIONS)
    report1, _ = run_tabu(formula, initial, RunConfig(workers=1, **base))
    report8, _ = run_tabu(formula, initial, RunConfig(workers=8, **base))
    log1 = [(r.variables, r.status, r.value) for r in report1.evaluations]
    log8 = [(r.variables, r.status, r.value) for r in report8.evaluations]
    assert log1 == log8
    assert report1.best_variables == report8.best_variables
    assert report1.best_value == report8.best_value


def test_run_record_save_and_schema(tmp_path, setup):
    formula, plan = setup
    config = RunConfig(mode="estimate", variables=plan.decomposition.variables,
                       n_samples=plan.size, seed=plan.seed,
                       metric=CostMetric.DECISIONS)
    est, record = run_estimate(formula, config)
    out = record.save(tmp_path / "run")
    assert (out / "config.json").exists()
    report = json.loads((out / "report.json").read_text())
    validate_report(report)
    assert report["mode"] == "estimate"
    lines = (out / "estimates.jsonl").read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["status"] in ("COMPLETE", "INTERRUPTED")
    assert (out / "log.csv").read_text().startswith("variables,")


def test_run_tabu_record(tmp_path, setup):
    formula, _ = setup
    initial = DecompositionSet.of([1, 4, 7])
    config = RunConfig(mode="search", variables=initial.variables,
                       n_samples=8, seed=1, metric=CostMetric.DECISIONS)
    report, record = run_tabu(formula, initial, config)
    out = record.save(tmp_path / "run")
    doc = json.loads((out / "report.json").read_text())
    validate_report(doc)
    counters = doc["report"]["search"]["counters"]
    assert counters["completed"] + counters["interrupted"] == \
        counters["l1"] + counters["l2"]
    lines = (out / "estimates.jsonl").read_text().splitlines()
    assert len(lines) == len(report.evaluations)


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("PARTSAT_WORKERS", "3")
    monkeypatch.setenv("PARTSAT_TIME_LIMIT", "12.5")
    config = RunConfig(mode="estimate", variables=(1,), n_samples=4)
    assert config.workers == 3
    assert config.time_limit == 12.5


def test_run_config_validations():
    with pytest.raises(ValueError):
        RunConfig(mode="estimate", n_samples=1)
    with pytest.raises(ValueError):
        RunConfig(mode="estimate", workers=0)
