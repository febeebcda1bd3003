import itertools
import random
import time

import pytest

from partsat.cnf import CnfFormula
from partsat.decomposition import DecompositionSet
from partsat.predictive import EstimateStatus, make_sequential_evaluator
from partsat.solver import CostMetric
from partsat.tabu import (
    SearchConfig,
    SupbsVerificationError,
    flip_combinations,
    init_from_supbs,
    neighbors,
    plan_seed,
    run_search,
)


def random_ksat(rng, n, m, k=3):
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), min(k, n))
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return CnfFormula(n, clauses)


def xor_gate(out, a, b):
    return [[-out, a, b], [-out, -a, -b], [out, -a, b], [out, a, -b]]


def xor_chain_formula(inputs=4):
    """XOR chain with a unit output: assigning the inputs propagates all."""
    clauses = []
    prev = 1
    var = inputs
    for i in range(2, inputs + 1):
        var += 1
        clauses += xor_gate(var, prev, i)
        prev = var
    clauses.append([prev])
    return CnfFormula(var, clauses), DecompositionSet.of(range(1, inputs + 1))


def test_neighbors_radius_one():
    assert neighbors((0, 0, 0), 1) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_neighbors_radius_two_count():
    result = neighbors((0, 0, 0), 2)
    assert len(result) == 6  # C(3,1) + C(3,2)
    assert len(set(result)) == 6
    assert (0, 0, 0) not in result


def test_neighbor_count_law():
    import math
    for n in (4, 6):
        for rho in (1, 2, 3):
            expected = sum(math.comb(n, i) for i in range(1, rho + 1))
            assert len(flip_combinations(n, rho)) == expected


def _search_setup(seed=0, n=4, n_samples=8):
    rng = random.Random(seed + 100)
    formula = random_ksat(rng, n, 3 * n)
    initial = DecompositionSet.of(range(1, n + 1))
    config = SearchConfig(n_samples=n_samples, seed=seed, rho=1,
                          metric=CostMetric.DECISIONS, restrict_to_initial=True,
                          check_invariants=True)
    return formula, initial, config


def _brute_force_minimum(formula, universe, config):
    evaluator = make_sequential_evaluator(
        formula, metric=config.metric, n_samples=config.n_samples,
        gamma=config.gamma)
    best = None
    for r in range(len(universe) + 1):
        for subset in itertools.combinations(universe, r):
            ds = DecompositionSet.of(subset)
            est = evaluator(ds, plan_seed(config.seed, subset), None,
                            "best_known", None)
            assert est.status is EstimateStatus.COMPLETE
            if best is None or est.value < best:
                best = est.value
    return best


def test_exhaustive_run_over_tiny_hypercube():
    formula, initial, config = _search_setup(seed=3)
    report = run_search(formula, initial, config)
    assert report.stop_reason == "exhausted"
    assert report.l2_size == 0
    # Every point of the 4-dimensional cube evaluated exactly once.
    assert len(report.evaluations) == 16
    seen = {rec.variables for rec in report.evaluations}
    assert len(seen) == 16
    assert report.best_value == _brute_force_minimum(
        formula, initial.variables, config)


def test_accounting_identity_at_exhaustion():
    for seed in range(5):
        formula, initial, config = _search_setup(seed=seed, n=5)
        report = run_search(formula, initial, config)
        assert report.stop_reason == "exhausted"
        counters = report.counters
        assert counters["completed"] + counters["interrupted"] == \
            counters["l1"] + counters["l2"]
        assert counters["completed"] + counters["interrupted"] == \
            len(report.evaluations)


def test_interrupted_points_never_best():
    formula, initial, config = _search_setup(seed=11, n=5)
    report = run_search(formula, initial, config)
    best = [rec for rec in report.evaluations
            if rec.variables == report.best_variables]
    assert len(best) == 1
    assert best[0].status == EstimateStatus.COMPLETE.value
    # The best value is the minimum over complete evaluations.
    complete_values = [rec.value for rec in report.evaluations
                       if rec.status == EstimateStatus.COMPLETE.value]
    assert report.best_value == min(complete_values)


def test_search_is_deterministic():
    formula, initial, config = _search_setup(seed=7, n=5)
    a = run_search(formula, initial, config)
    b = run_search(formula, initial, config)
    log_a = [(r.variables, r.status, r.value, r.completed) for r in a.evaluations]
    log_b = [(r.variables, r.status, r.value, r.completed) for r in b.evaluations]
    assert log_a == log_b
    assert a.best_variables == b.best_variables
    assert a.best_value == b.best_value


def test_different_seed_changes_trajectory():
    formula, initial, _ = _search_setup(seed=1, n=6)
    base = SearchConfig(n_samples=8, seed=1, metric=CostMetric.DECISIONS)
    other = SearchConfig(n_samples=8, seed=2, metric=CostMetric.DECISIONS)
    a = run_search(formula, initial, base)
    b = run_search(formula, initial, other)
    # Same space, same exhaustive coverage; order and sampled values differ.
    assert {r.variables for r in a.evaluations} == {r.variables for r in b.evaluations}


def test_time_limit_stops_search():
    formula, initial, config = _search_setup(seed=5, n=6)
    inner = make_sequential_evaluator(
        formula, metric=CostMetric.DECISIONS, n_samples=8)

    def slow_evaluator(dset, seed, threshold, reason, deadline):
        time.sleep(0.02)
        return inner(dset, seed, threshold, reason, deadline)

    config = SearchConfig(n_samples=8, seed=5, metric=CostMetric.DECISIONS,
                          time_limit=0.08)
    report = run_search(formula, initial, config, evaluator=slow_evaluator)
    assert report.stop_reason == "time_limit"
    assert len(report.evaluations) < 64
    # Flushed state still satisfies the accounting identity.
    c = report.counters
    assert c["completed"] + c["interrupted"] == c["l1"] + c["l2"]


def test_unrestricted_universe_covers_all_variables():
    rng = random.Random(19)
    formula = random_ksat(rng, 3, 6)
    config = SearchConfig(n_samples=4, seed=0, metric=CostMetric.DECISIONS,
                          restrict_to_initial=False, check_invariants=True)
    report = run_search(formula, DecompositionSet.of([1]), config)
    assert report.universe == (1, 2, 3)
    assert report.stop_reason == "exhausted"
    assert len(report.evaluations) == 8


def test_first_point_cap_bootstraps_best_value():
    formula, initial, _ = _search_setup(seed=23, n=5)
    config = SearchConfig(n_samples=8, seed=23, metric=CostMetric.DECISIONS,
                          first_point_cap=0.5)
    report = run_search(formula, initial, config)
    first = report.evaluations[0]
    assert first.status == EstimateStatus.INTERRUPTED.value
    assert first.interrupt_reason == "cap"
    assert first.value > 0.5
    # The search proceeded past the capped initial point.
    assert len(report.evaluations) > 1


def test_report_json_and_csv_shapes():
    formula, initial, config = _search_setup(seed=29)
    report = run_search(formula, initial, config)
    doc = report.to_json_dict()
    assert set(doc["counters"]) == {"completed", "interrupted", "l1", "l2"}
    assert doc["best_variables"] is not None
    assert len(doc["evaluations"]) == len(report.evaluations)
    rows = report.csv_rows()
    assert rows[0][0] == "order"
    assert len(rows) == len(report.evaluations) + 1


def test_init_from_supbs_accepts_gate_inputs():
    formula, inputs = xor_chain_formula(4)
    init = init_from_supbs(formula, inputs, restrict=True, checks=50)
    assert init.initial == inputs
    assert init.universe == inputs.variables
    assert init.chi0[: 4] == (1, 1, 1, 1)


def test_init_from_supbs_rejects_weak_set():
    # An implication chain is not decided by propagating only x1=False.
    n = 5
    clauses = [[-i, i + 1] for i in range(1, n)]
    formula = CnfFormula(n, clauses)
    with pytest.raises(SupbsVerificationError):
        init_from_supbs(formula, DecompositionSet.of([1]), checks=200)


def test_init_from_supbs_full_variable_fallback():
    rng = random.Random(31)
    formula = random_ksat(rng, 8, 24)
    everything = DecompositionSet.of(range(1, 9))
    init = init_from_supbs(formula, everything, restrict=False, checks=50)
    assert init.universe == tuple(range(1, 9))


def test_search_after_supbs_end_to_end():
    formula, inputs = xor_chain_formula(5)
    init = init_from_supbs(formula, inputs, restrict=True, checks=30)
    config = SearchConfig(n_samples=8, seed=41, metric=CostMetric.DECISIONS,
                          check_invariants=True)
    report = run_search(formula, init.initial, config)
    assert report.stop_reason == "exhausted"
    assert report.best_variables is not None
    c = report.counters
    assert c["completed"] + c["interrupted"] == c["l1"] + c["l2"]
