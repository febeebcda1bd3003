"""Deterministic complete SAT solving with measurable cost.

The built-in engine is a conflict-driven clause-learning solver with a fixed
branching order (lowest unassigned variable index, positive polarity first)
and no restarts, so repeated solves of the same input give byte-identical
status, model, and counters.  Learned clauses are discarded between calls;
nothing leaks from one solve into the next.

Counter conventions: ``decisions`` counts branching steps including assumption
decisions, ``propagations`` counts implied assignments beyond the formula's
shared level-0 unit closure (which is assumption-independent and computed once
per engine), ``conflicts`` counts conflicts analyzed.
"""

from __future__ import annotations

import re
import subprocess
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .cnf import Assignment, CnfFormula


class SolveStatus(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    LIMIT = "LIMIT"


class CostMetric(str, Enum):
    WALL_TIME = "wall_time"
    DECISIONS = "decisions"
    PROPAGATIONS = "propagations"

    def of(self, cost: "SolveCost") -> float:
        if self is CostMetric.WALL_TIME:
            return cost.wall_seconds
        value = cost.decisions if self is CostMetric.DECISIONS else cost.propagations
        if value is None:
            raise ValueError(f"cost metric {self.value} not reported by this solver")
        return float(value)

    @property
    def deterministic(self) -> bool:
        return self is not CostMetric.WALL_TIME


@dataclass(frozen=True)
class SolveCost:
    wall_seconds: float
    decisions: Optional[int] = None
    propagations: Optional[int] = None
    conflicts: Optional[int] = None


@dataclass(frozen=True)
class SolveLimits:
    """Resource caps for one solve() call; any exceeded cap yields LIMIT."""

    max_decisions: Optional[int] = None
    max_conflicts: Optional[int] = None
    max_propagations: Optional[int] = None
    max_seconds: Optional[float] = None
    interrupt: Optional[Callable[[], bool]] = None


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    model: Optional[dict[int, bool]]
    cost: SolveCost
    limit_reason: Optional[str] = None


class SolverError(RuntimeError):
    """Failure of an external solver subprocess or unparsable output."""


def _sorted_assumptions(assumptions: Assignment | None, num_vars: int) -> list[tuple[int, bool]]:
    if not assumptions:
        return []
    items = []
    for var, value in assumptions.items():
        if not 1 <= var <= num_vars:
            raise ValueError(f"assumption variable {var} out of range 1..{num_vars}")
        items.append((var, bool(value)))
    items.sort()
    return items


class CdclSolver:
    """Reusable engine bound to one formula.

    Binary and ternary clauses live in immutable occurrence structures built
    once per formula, so back-to-back solves pay no setup cost.  Longer
    clauses (and all learned clauses) use a two-watched-literal scheme whose
    state is rebuilt per call.  A single instance is not thread-safe; give
    each worker its own.
    """

    def __init__(self, formula: CnfFormula):
        self.formula = formula
        n = formula.num_vars
        self._n = n
        # Value of literal q is _val[q + n]: 1 true, -1 false, 0 unassigned.
        self._val = [0] * (2 * n + 1)
        self._levels = [0] * (n + 1)
        self._reasons: list = [None] * (n + 1)
        self._seen = bytearray(n + 1)
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._free_head = 1
        self._prop_count = 0
        self._long_clauses: list[list[int]] = []
        self._long_watches: dict[int, list[int]] = {}
        self._learned_bins: list[tuple[int, int]] = []

        self._unit_lits: list[int] = []
        # _bin_map[p + n]: literals implied once trail literal p holds.
        self._bin_map: list[list[int]] = [[] for _ in range(2 * n + 1)]
        # _tern_map[p + n]: (a, b) remainders of ternary clauses containing -p.
        self._tern_map: list[list[tuple[int, int]]] = [[] for _ in range(2 * n + 1)]
        self._base_long: list[tuple[int, ...]] = []
        has_empty = False
        for clause in formula.clauses:
            k = len(clause)
            if k == 0:
                has_empty = True
            elif k == 1:
                self._unit_lits.append(clause[0])
            elif k == 2:
                a, b = clause
                self._bin_map[-a + n].append(b)
                self._bin_map[-b + n].append(a)
            elif k == 3:
                a, b, c = clause
                self._tern_map[-a + n].append((b, c))
                self._tern_map[-b + n].append((a, c))
                self._tern_map[-c + n].append((a, b))
            else:
                self._base_long.append(clause)

        # Level-0 closure of the base units, shared by every solve.
        self._base_unsat = has_empty or not self._close_base()
        self._base_trail_len = len(self._trail)

    def _close_base(self) -> bool:
        """Assert base unit clauses and propagate to fixpoint; False on conflict."""
        n = self._n
        val = self._val
        for lit in self._unit_lits:
            v = val[lit + n]
            if v == -1:
                return False
            if v == 0:
                val[lit + n] = 1
                val[-lit + n] = -1
                self._trail.append(lit)
        # Long base clauses are not watched here; scan them to fixpoint
        # instead (they are rare in this package's CNFs).
        while True:
            if self._propagate() is not None:
                return False
            implied = False
            for clause in self._base_long:
                unassigned = None
                free = 0
                satisfied = False
                for q in clause:
                    v = val[q + n]
                    if v == 1:
                        satisfied = True
                        break
                    if v == 0:
                        unassigned = q
                        free += 1
                if satisfied or free > 1:
                    continue
                if free == 0:
                    return False
                val[unassigned + n] = 1
                val[-unassigned + n] = -1
                self._trail.append(unassigned)
                implied = True
            if not implied:
                return True

    # -- hot path -----------------------------------------------------------

    def _propagate(self):
        """Propagate to fixpoint; returns a conflicting clause or None."""
        n = self._n
        val = self._val
        trail = self._trail
        levels = self._levels
        reasons = self._reasons
        bin_map = self._bin_map
        tern_map = self._tern_map
        long_watches = self._long_watches
        long_clauses = self._long_clauses
        level = len(self._trail_lim)
        props = 0
        qhead = self._qhead
        try:
            while qhead < len(trail):
                p = trail[qhead]
                qhead += 1
                pi = p + n
                for q in bin_map[pi]:
                    v = val[q + n]
                    if v == 1:
                        continue
                    if v == -1:
                        return (q, -p)
                    val[q + n] = 1
                    val[-q + n] = -1
                    var = q if q > 0 else -q
                    levels[var] = level
                    reasons[var] = (q, -p)
                    trail.append(q)
                    props += 1
                for a, b in tern_map[pi]:
                    va = val[a + n]
                    if va == 1:
                        continue
                    vb = val[b + n]
                    if vb == 1:
                        continue
                    if va == -1:
                        if vb == -1:
                            return (a, b, -p)
                        val[b + n] = 1
                        val[-b + n] = -1
                        var = b if b > 0 else -b
                        levels[var] = level
                        reasons[var] = (b, a, -p)
                        trail.append(b)
                        props += 1
                    elif vb == -1:
                        val[a + n] = 1
                        val[-a + n] = -1
                        var = a if a > 0 else -a
                        levels[var] = level
                        reasons[var] = (a, b, -p)
                        trail.append(a)
                        props += 1
                watchers = long_watches.get(-p)
                if watchers:
                    i = j = 0
                    end = len(watchers)
                    while i < end:
                        ci = watchers[i]
                        i += 1
                        cls = long_clauses[ci]
                        if cls[0] == -p:
                            cls[0] = cls[1]
                            cls[1] = -p
                        first = cls[0]
                        fv = val[first + n]
                        if fv == 1:
                            watchers[j] = ci
                            j += 1
                            continue
                        moved = False
                        for k in range(2, len(cls)):
                            lk = cls[k]
                            if val[lk + n] != -1:
                                cls[1] = lk
                                cls[k] = -p
                                long_watches.setdefault(lk, []).append(ci)
                                moved = True
                                break
                        if moved:
                            continue
                        watchers[j] = ci
                        j += 1
                        if fv == -1:
                            while i < end:
                                watchers[j] = watchers[i]
                                j += 1
                                i += 1
                            del watchers[j:]
                            return cls
                        val[first + n] = 1
                        val[-first + n] = -1
                        var = first if first > 0 else -first
                        levels[var] = level
                        reasons[var] = cls
                        trail.append(first)
                        props += 1
                    del watchers[j:]
            return None
        finally:
            self._qhead = qhead
            self._prop_count += props

    def _analyze(self, conflict):
        """First-UIP conflict analysis; returns (learnt_clause, backjump_level).

        The learnt clause is asserting: position 0 holds the UIP negation and
        position 1 (if any) a literal of the backjump level.
        """
        seen = self._seen
        levels = self._levels
        trail = self._trail
        reasons = self._reasons
        cur_level = len(self._trail_lim)
        learnt: list[int] = []
        counter = 0
        p = 0
        index = len(trail)
        cls = conflict
        while True:
            for q in cls:
                if q == p:
                    continue
                var = q if q > 0 else -q
                if not seen[var] and levels[var] > 0:
                    seen[var] = 1
                    if levels[var] == cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                index -= 1
                p = trail[index]
                pvar = p if p > 0 else -p
                if seen[pvar]:
                    break
            seen[pvar] = 0
            counter -= 1
            if counter == 0:
                break
            cls = reasons[pvar]
        for q in learnt:
            seen[q if q > 0 else -q] = 0
        if not learnt:
            return [-p], 0
        best = 0
        best_level = -1
        for idx, q in enumerate(learnt):
            lv = levels[q if q > 0 else -q]
            if lv > best_level:
                best_level = lv
                best = idx
        learnt[0], learnt[best] = learnt[best], learnt[0]
        return [-p] + learnt, best_level

    def _backtrack(self, level: int) -> None:
        trail = self._trail
        val = self._val
        n = self._n
        keep = self._trail_lim[level]
        fh = self._free_head
        for idx in range(len(trail) - 1, keep - 1, -1):
            lit = trail[idx]
            val[lit + n] = 0
            val[-lit + n] = 0
            var = lit if lit > 0 else -lit
            if var < fh:
                fh = var
        self._free_head = fh
        del trail[keep:]
        del self._trail_lim[level:]
        self._qhead = keep

    def _reset(self) -> None:
        """Return to the shared level-0 closure; drop all learned state."""
        n = self._n
        for a, b in self._learned_bins:
            self._bin_map[-a + n].pop()
            self._bin_map[-b + n].pop()
        self._learned_bins.clear()
        trail = self._trail
        val = self._val
        keep = self._base_trail_len
        for idx in range(len(trail) - 1, keep - 1, -1):
            lit = trail[idx]
            val[lit + n] = 0
            val[-lit + n] = 0
        del trail[keep:]
        self._trail_lim.clear()
        self._qhead = keep
        self._free_head = 1
        self._long_clauses = []
        self._long_watches = {}
        self._prop_count = 0

    def _attach_base_long(self) -> None:
        """Watch the base long clauses, picking non-false watch positions."""
        val = self._val
        n = self._n
        for clause in self._base_long:
            cls = list(clause)
            free = [idx for idx, q in enumerate(cls) if val[q + n] != -1]
            # The base closure leaves every long clause either with >= 2
            # non-false literals or already satisfied by a permanently true
            # one, so a leftover false watch can never fire again.
            for slot, idx in enumerate(free[:2]):
                cls[slot], cls[idx] = cls[idx], cls[slot]
            ci = len(self._long_clauses)
            self._long_clauses.append(cls)
            self._long_watches.setdefault(cls[0], []).append(ci)
            self._long_watches.setdefault(cls[1], []).append(ci)

    def _enqueue(self, lit: int, reason) -> None:
        n = self._n
        self._val[lit + n] = 1
        self._val[-lit + n] = -1
        var = lit if lit > 0 else -lit
        self._levels[var] = len(self._trail_lim)
        self._reasons[var] = reason
        self._trail.append(lit)

    # -- public API ----------------------------------------------------------

    def solve(self, assumptions: Assignment | None = None,
              limits: SolveLimits | None = None) -> SolveResult:
        """Decide the formula under the given assumptions.

        Assumptions are applied as forced first decisions (in ascending
        variable order); the reported status is the satisfiability of the
        formula with those variables fixed.
        """
        start = time.perf_counter()
        assum = _sorted_assumptions(assumptions, self._n)

        if self._base_unsat:
            cost = SolveCost(time.perf_counter() - start, 0, 0, 0)
            return SolveResult(SolveStatus.UNSAT, None, cost)

        self._reset()
        self._attach_base_long()

        n = self._n
        val = self._val
        decisions = conflicts = 0
        limit_reason = None
        check_time = limits is not None and (
            limits.max_seconds is not None or limits.interrupt is not None)
        status = None

        while True:
            conflict = self._propagate()
            if conflict is not None:
                conflicts += 1
                if not self._trail_lim:
                    status = SolveStatus.UNSAT
                    break
                learnt, bj_level = self._analyze(conflict)
                self._backtrack(bj_level)
                if len(learnt) == 1:
                    reason = None
                elif len(learnt) == 2:
                    a, b = learnt
                    self._bin_map[-a + n].append(b)
                    self._bin_map[-b + n].append(a)
                    self._learned_bins.append((a, b))
                    reason = (a, b)
                else:
                    cls = list(learnt)
                    ci = len(self._long_clauses)
                    self._long_clauses.append(cls)
                    self._long_watches.setdefault(cls[0], []).append(ci)
                    self._long_watches.setdefault(cls[1], []).append(ci)
                    reason = cls
                self._enqueue(learnt[0], reason)
                if limits is not None:
                    if limits.max_conflicts is not None and conflicts >= limits.max_conflicts:
                        limit_reason = "conflicts"
                    elif limits.max_propagations is not None and \
                            self._prop_count >= limits.max_propagations:
                        limit_reason = "propagations"
                    elif check_time:
                        limit_reason = self._limit_hit(limits, start)
                    if limit_reason:
                        status = SolveStatus.LIMIT
                        break
                continue

            # No conflict: branch.  Unsatisfied assumptions first.
            decision_lit = None
            for var, value in assum:
                v = val[var + n]
                if v == 0:
                    decision_lit = var if value else -var
                    break
                if (v == 1) != value:
                    status = SolveStatus.UNSAT
                    break
            if status is not None:
                break
            if decision_lit is None:
                fh = self._free_head
                while fh <= n and val[fh + n] != 0:
                    fh += 1
                self._free_head = fh
                if fh > n:
                    status = SolveStatus.SAT
                    break
                decision_lit = fh
            if limits is not None:
                if limits.max_decisions is not None and decisions >= limits.max_decisions:
                    limit_reason = "decisions"
                elif limits.max_propagations is not None and \
                        self._prop_count >= limits.max_propagations:
                    limit_reason = "propagations"
                elif check_time:
                    limit_reason = self._limit_hit(limits, start)
                if limit_reason:
                    status = SolveStatus.LIMIT
                    break
            decisions += 1
            self._trail_lim.append(len(self._trail))
            self._enqueue(decision_lit, None)

        model = None
        if status is SolveStatus.SAT:
            model = {v: val[v + n] > 0 for v in range(1, n + 1)}
        cost = SolveCost(time.perf_counter() - start, decisions, self._prop_count, conflicts)
        return SolveResult(status, model, cost, limit_reason)

    @staticmethod
    def _limit_hit(limits: SolveLimits, start: float):
        if limits.max_seconds is not None and \
                time.perf_counter() - start >= limits.max_seconds:
            return "time"
        if limits.interrupt is not None and limits.interrupt():
            return "interrupt"
        return None

    def propagation_status(self, assignment: Assignment) -> str:
        """Decide the formula under `assignment` by unit propagation alone.

        Returns "SAT" when propagation satisfies every clause, "UNSAT" when
        it derives a conflict, and "UNDECIDED" otherwise.
        """
        if self._base_unsat:
            return "UNSAT"
        self._reset()
        self._attach_base_long()
        n = self._n
        val = self._val
        self._trail_lim.append(len(self._trail))
        clash = False
        for var, value in _sorted_assumptions(assignment, n):
            lit = var if value else -var
            v = val[lit + n]
            if v == -1:
                clash = True
                break
            if v == 0:
                self._enqueue(lit, None)
        if not clash:
            clash = self._propagate() is not None
        if clash:
            result = "UNSAT"
        elif len(self._trail) == n:
            result = "SAT"
        else:
            result = "SAT"
            for clause in self.formula.clauses:
                for q in clause:
                    if val[q + n] == 1:
                        break
                else:
                    result = "UNDECIDED"
                    break
        self._backtrack(0)
        return result


def solve(formula: CnfFormula, assumptions: Assignment | None = None,
          limits: SolveLimits | None = None) -> SolveResult:
    """One-shot convenience wrapper around a fresh CdclSolver."""
    return CdclSolver(formula).solve(assumptions, limits)


_S_LINE = re.compile(r"^s\s+(.*)$", re.MULTILINE)
_V_LINE = re.compile(r"^v\s+(.*)$", re.MULTILINE)


def solve_external(formula: CnfFormula, assumptions: Assignment | None,
                   solver_cmd: str | list[str],
                   timeout: Optional[float] = None) -> SolveResult:
    """Run an external DIMACS solver on the formula under assumptions.

    Assumptions are applied by substitution before the DIMACS file is
    written.  `solver_cmd` is a command whose `{cnf}` placeholder (or, if
    absent, an appended final argument) receives the CNF path.  The status
    is taken from the first "s " output line, ignoring the exit code;
    deterministic cost counters are reported as absent.  A timeout yields a
    LIMIT result with wall_seconds equal to the configured timeout.
    """
    reduced = formula.substitute(assumptions or {})
    cmd = solver_cmd.split() if isinstance(solver_cmd, str) else list(solver_cmd)
    with tempfile.TemporaryDirectory(prefix="partsat-") as tmp:
        path = str(Path(tmp) / "instance.cnf")
        with open(path, "w", encoding="ascii") as handle:
            handle.write(reduced.to_dimacs())
        if any("{cnf}" in part for part in cmd):
            cmd = [part.replace("{cnf}", path) for part in cmd]
        else:
            cmd = cmd + [path]
        start = time.perf_counter()
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            cost = SolveCost(wall_seconds=float(timeout))
            return SolveResult(SolveStatus.LIMIT, None, cost, limit_reason="time")
        except OSError as exc:
            raise SolverError(f"failed to run solver {cmd[0]!r}: {exc}") from exc
        wall = time.perf_counter() - start
    match = _S_LINE.search(proc.stdout)
    if match is None:
        raise SolverError(
            f"unparsable solver output (no 's' line) from {cmd[0]!r}: "
            f"{proc.stdout[:200]!r}")
    verdict = match.group(1).strip().upper()
    if verdict == "SATISFIABLE":
        status = SolveStatus.SAT
    elif verdict == "UNSATISFIABLE":
        status = SolveStatus.UNSAT
    elif verdict in ("UNKNOWN", "INDETERMINATE"):
        return SolveResult(SolveStatus.LIMIT, None, SolveCost(wall), limit_reason="solver")
    else:
        raise SolverError(f"unparsable solver status line: {match.group(0)!r}")
    model = None
    if status is SolveStatus.SAT:
        lits: list[int] = []
        for chunk in _V_LINE.findall(proc.stdout):
            lits.extend(int(tok) for tok in chunk.split())
        parsed = {abs(lit): lit > 0 for lit in lits if lit != 0}
        if parsed:
            model = parsed
    return SolveResult(status, model, SolveCost(wall))


def brute_force_status(formula: CnfFormula, assumptions: Assignment | None = None) -> SolveStatus:
    """Exhaustive truth-table decision; test oracle for small formulas."""
    n = formula.num_vars
    if n > 24:
        raise ValueError("brute force limited to 24 variables")
    if formula.is_trivially_unsat:
        return SolveStatus.UNSAT
    fixed = dict(assumptions or {})
    free = [v for v in range(1, n + 1) if v not in fixed]
    clauses = formula.clauses
    for mask in range(1 << len(free)):
        assignment = dict(fixed)
        for i, v in enumerate(free):
            assignment[v] = bool((mask >> i) & 1)
        if all(any(assignment[abs(q)] == (q > 0) for q in clause) for clause in clauses):
            return SolveStatus.SAT
    return SolveStatus.UNSAT
