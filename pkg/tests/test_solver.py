import random
import sys
import textwrap

import pytest

from partsat.cnf import CnfFormula, check_assignment
from partsat.solver import (
    CdclSolver,
    CostMetric,
    SolveLimits,
    SolveStatus,
    SolverError,
    brute_force_status,
    solve,
    solve_external,
)


def random_ksat(rng, n, m, k=3):
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), k)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return CnfFormula(n, clauses)


def test_unit_sat():
    res = solve(CnfFormula(1, [[1]]))
    assert res.status is SolveStatus.SAT
    assert res.model == {1: True}


def test_contradiction_unsat():
    res = solve(CnfFormula(1, [[1], [-1]]))
    assert res.status is SolveStatus.UNSAT
    assert res.model is None


def test_four_clause_unsat():
    # All four polarity combinations over two variables.
    res = solve(CnfFormula(2, [[1, 2], [-1, 2], [1, -2], [-1, -2]]))
    assert res.status is SolveStatus.UNSAT


def test_empty_formula_sat():
    res = solve(CnfFormula(3, []))
    assert res.status is SolveStatus.SAT
    assert res.model == {1: True, 2: True, 3: True}


def test_trivially_unsat_formula():
    f = CnfFormula(1, [[1]]).substitute({1: False})
    assert solve(f).status is SolveStatus.UNSAT


def test_model_satisfies_formula():
    rng = random.Random(3)
    for _ in range(30):
        f = random_ksat(rng, 12, 40)
        res = solve(f)
        if res.status is SolveStatus.SAT:
            assert check_assignment(f, res.model)


def test_agreement_with_brute_force():
    rng = random.Random(17)
    for trial in range(120):
        n = rng.randint(1, 9)
        m = rng.randint(1, 5 * n)
        f = random_ksat(rng, n, m, k=min(3, n))
        assert solve(f).status is brute_force_status(f), f"trial {trial}"


def test_agreement_with_brute_force_under_assumptions():
    rng = random.Random(23)
    for trial in range(60):
        n = rng.randint(3, 9)
        f = random_ksat(rng, n, rng.randint(2, 4 * n))
        assum_vars = rng.sample(range(1, n + 1), rng.randint(1, 3))
        assum = {v: rng.random() < 0.5 for v in assum_vars}
        assert solve(f, assum).status is brute_force_status(f, assum), f"trial {trial}"


def test_assumption_consistency_with_substitution():
    rng = random.Random(31)
    for _ in range(60):
        n = rng.randint(3, 10)
        f = random_ksat(rng, n, rng.randint(2, 4 * n))
        assum_vars = rng.sample(range(1, n + 1), rng.randint(1, n // 2 + 1))
        assum = {v: rng.random() < 0.5 for v in assum_vars}
        assert solve(f, assum).status is solve(f.substitute(assum)).status


def test_determinism_across_repeated_calls():
    rng = random.Random(41)
    f = random_ksat(rng, 20, 85)
    engine = CdclSolver(f)
    results = [engine.solve({3: True, 7: False}) for _ in range(3)]
    fresh = CdclSolver(f).solve({3: True, 7: False})
    for res in results + [fresh]:
        assert res.status == results[0].status
        assert res.model == results[0].model
        assert res.cost.decisions == results[0].cost.decisions
        assert res.cost.propagations == results[0].cost.propagations
        assert res.cost.conflicts == results[0].cost.conflicts


def test_determinism_interleaved_with_other_queries():
    # Solving other assumptions in between must not change later results.
    rng = random.Random(43)
    f = random_ksat(rng, 16, 66)
    engine = CdclSolver(f)
    baseline = engine.solve({1: True})
    engine.solve({2: False, 5: True})
    engine.propagation_status({1: True, 2: True})
    again = engine.solve({1: True})
    assert (again.status, again.cost.decisions, again.cost.propagations,
            again.cost.conflicts) == (
        baseline.status, baseline.cost.decisions, baseline.cost.propagations,
        baseline.cost.conflicts)


def test_assumptions_out_of_range():
    with pytest.raises(ValueError):
        solve(CnfFormula(2, [[1, 2]]), {9: True})


def test_limit_outcome_distinct():
    rng = random.Random(57)
    f = random_ksat(rng, 30, 128)
    res = solve(f, limits=SolveLimits(max_decisions=1))
    assert res.status is SolveStatus.LIMIT
    assert res.limit_reason == "decisions"
    assert res.model is None


def test_limit_interrupt_callback():
    rng = random.Random(59)
    f = random_ksat(rng, 30, 128)
    res = solve(f, limits=SolveLimits(interrupt=lambda: True))
    assert res.status is SolveStatus.LIMIT
    assert res.limit_reason == "interrupt"


def test_cost_metric_selection():
    res = solve(CnfFormula(2, [[1, 2], [-1, 2]]))
    assert CostMetric.DECISIONS.of(res.cost) == float(res.cost.decisions)
    assert CostMetric.PROPAGATIONS.of(res.cost) == float(res.cost.propagations)
    assert CostMetric.WALL_TIME.of(res.cost) == res.cost.wall_seconds
    assert CostMetric.DECISIONS.deterministic
    assert not CostMetric.WALL_TIME.deterministic


def test_propagation_status_decides_chains():
    # x1 -> x2 -> x3 chain: assigning x1 decides everything by propagation.
    f = CnfFormula(3, [[-1, 2], [-2, 3]])
    engine = CdclSolver(f)
    assert engine.propagation_status({1: True, 2: True, 3: True}) == "SAT"
    assert engine.propagation_status({1: True, 3: False}) == "UNSAT"
    assert engine.propagation_status({}) == "UNDECIDED"
    # Engine still usable for full solves afterwards.
    assert engine.solve().status is SolveStatus.SAT


def test_long_clauses_supported():
    f = CnfFormula(6, [[1, 2, 3, 4, 5, 6], [-1], [-2], [-3], [-4], [-5]])
    res = solve(f)
    assert res.status is SolveStatus.SAT
    assert res.model[6] is True
    rng = random.Random(71)
    for _ in range(40):
        g = random_ksat(rng, 8, 20, k=5)
        assert solve(g).status is brute_force_status(g)


def _fake_solver_script(tmp_path, body):
    script = tmp_path / "fake_solver.py"
    script.write_text(textwrap.dedent(body))
    return [sys.executable, str(script)]


def test_solve_external_agrees_with_builtin(tmp_path):
    cmd = _fake_solver_script(tmp_path, """
        import itertools, sys
        path = sys.argv[1]
        nvars, clauses = 0, []
        for line in open(path):
            line = line.strip()
            if not line or line[0] in 'c%': continue
            if line[0] == 'p':
                nvars = int(line.split()[2]); continue
            lits = [int(t) for t in line.split() if t != '0']
            if lits or line == '0':
                clauses.append(lits)
        for bits in itertools.product([False, True], repeat=nvars):
            if all(any(bits[abs(l) - 1] == (l > 0) for l in cl) for cl in clauses):
                print('s SATISFIABLE')
                print('v ' + ' '.join(str(i + 1 if b else -(i + 1)) for i, b in enumerate(bits)) + ' 0')
                sys.exit(10)
        print('s UNSATISFIABLE')
        sys.exit(20)
    """)
    rng = random.Random(83)
    for _ in range(8):
        f = random_ksat(rng, 6, 14)
        assum = {1: rng.random() < 0.5}
        ext = solve_external(f, assum, cmd)
        assert ext.status is solve(f, assum).status
        assert ext.cost.decisions is None
        if ext.status is SolveStatus.SAT and ext.model:
            assert check_assignment(f.substitute(assum), ext.model)


def test_solve_external_garbage_output(tmp_path):
    cmd = _fake_solver_script(tmp_path, "print('hello world')\n")
    with pytest.raises(SolverError):
        solve_external(CnfFormula(1, [[1]]), None, cmd)


def test_solve_external_timeout(tmp_path):
    cmd = _fake_solver_script(tmp_path, "import time\ntime.sleep(30)\n")
    res = solve_external(CnfFormula(1, [[1]]), None, cmd, timeout=0.2)
    assert res.status is SolveStatus.LIMIT
    assert res.cost.wall_seconds == pytest.approx(0.2)
