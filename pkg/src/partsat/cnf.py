"""CNF formulas, DIMACS parsing/writing, and truth-assignment substitution.

A formula is immutable once built.  Substituting an assignment produces a new
formula over the *same* variable numbering: satisfied clauses are dropped and
falsified literals are deleted.  A formula containing an empty clause is
trivially unsatisfiable; a formula with no clauses at all is trivially
satisfiable.
"""

from __future__ import annotations

import warnings
from typing import Iterable, Mapping, Sequence

Assignment = Mapping[int, bool]


class DimacsError(ValueError):
    """Raised on malformed DIMACS input."""


class CnfFormula:
    """Clause database over variables 1..num_vars.

    Clauses are stored as tuples of non-zero signed literals.  At
    construction, duplicate literals within a clause are removed (first
    occurrence kept) and tautological clauses (containing both v and -v)
    are dropped silently.  Empty clauses are kept: they mark the formula
    as trivially UNSAT.
    """

    __slots__ = ("num_vars", "clauses")

    def __init__(self, num_vars: int, clauses: Iterable[Iterable[int]]):
        if num_vars < 0:
            raise ValueError(f"num_vars must be nonnegative, got {num_vars}")
        normalized = []
        for clause in clauses:
            lits = self._normalize_clause(clause, num_vars)
            if lits is not None:
                normalized.append(lits)
        self.num_vars = num_vars
        self.clauses = tuple(normalized)

    @staticmethod
    def _normalize_clause(clause, num_vars):
        """Dedup literals, drop tautologies (returns None), check ranges."""
        seen = set()
        lits = []
        for lit in clause:
            lit = int(lit)
            if lit == 0 or abs(lit) > num_vars:
                raise ValueError(f"literal {lit} out of range for n={num_vars}")
            if -lit in seen:
                return None
            if lit not in seen:
                seen.add(lit)
                lits.append(lit)
        return tuple(lits)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def is_trivially_unsat(self) -> bool:
        return any(len(c) == 0 for c in self.clauses)

    @property
    def is_trivially_sat(self) -> bool:
        return len(self.clauses) == 0

    def substitute(self, assignment: Assignment) -> "CnfFormula":
        """Apply a partial truth assignment.

        Satisfied clauses are removed and falsified literals deleted; the
        result keeps the original variable numbering.  An empty assignment
        returns an equal formula.
        """
        for var in assignment:
            if not 1 <= var <= self.num_vars:
                raise ValueError(f"assigned variable {var} out of range 1..{self.num_vars}")
        if not assignment:
            return self
        new_clauses = []
        for clause in self.clauses:
            kept = []
            satisfied = False
            for lit in clause:
                value = assignment.get(abs(lit))
                if value is None:
                    kept.append(lit)
                elif value == (lit > 0):
                    satisfied = True
                    break
            if not satisfied:
                new_clauses.append(tuple(kept))
        result = CnfFormula.__new__(CnfFormula)
        result.num_vars = self.num_vars
        result.clauses = tuple(new_clauses)
        return result

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for clause in self.clauses:
            if clause:
                lines.append(" ".join(str(lit) for lit in clause) + " 0")
            else:
                lines.append("0")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, CnfFormula):
            return NotImplemented
        return self.num_vars == other.num_vars and self.clauses == other.clauses

    def __hash__(self):
        return hash((self.num_vars, self.clauses))

    def __repr__(self):
        return f"CnfFormula(n={self.num_vars}, m={len(self.clauses)})"


def parse_dimacs(text: str | bytes) -> CnfFormula:
    """Parse DIMACS CNF text into a formula.

    Comments (`c ...`) and blank lines are skipped; clauses may span lines
    and are zero-terminated.  A clause count that disagrees with the header
    is reported as a warning, not an error.  An explicit empty clause in the
    input yields a trivially-UNSAT formula rather than a parse failure.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    if not text.strip():
        raise DimacsError("empty DIMACS input")

    num_vars = None
    declared_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] == "c":
            continue
        if line[0] == "p":
            if num_vars is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            fields = line.split()
            if len(fields) != 4 or fields[0] != "p" or fields[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                num_vars = int(fields[2])
                declared_clauses = int(fields[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from None
            if num_vars < 0 or declared_clauses < 0:
                raise DimacsError(f"line {lineno}: negative counts in header")
            continue
        if num_vars is None:
            raise DimacsError(f"line {lineno}: clause before header")
        try:
            tokens = [int(tok) for tok in line.split()]
        except ValueError:
            raise DimacsError(f"line {lineno}: non-integer token in clause") from None
        for lit in tokens:
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsError(
                        f"line {lineno}: literal {lit} out of range for n={num_vars}"
                    )
                current.append(lit)
    if num_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        # Tolerate a missing final 0 at end of input.
        clauses.append(current)
    if declared_clauses is not None and len(clauses) != declared_clauses:
        warnings.warn(
            f"DIMACS header declares {declared_clauses} clauses, found {len(clauses)}",
            stacklevel=2,
        )
    return CnfFormula(num_vars, clauses)


def serialize_dimacs(formula: CnfFormula) -> str:
    """Render a formula as DIMACS text; round-trips through parse_dimacs."""
    return formula.to_dimacs()


def load_dimacs(path) -> CnfFormula:
    with open(path, "r", encoding="ascii", errors="replace") as handle:
        return parse_dimacs(handle.read())


def dump_dimacs(formula: CnfFormula, path) -> None:
    with open(path, "w", encoding="ascii") as handle:
        handle.write(formula.to_dimacs())


def check_assignment(formula: CnfFormula, assignment: Assignment) -> bool:
    """True iff the (total or partial) assignment satisfies every clause."""
    for clause in formula.clauses:
        if not any(assignment.get(abs(lit)) == (lit > 0) for lit in clause):
            return False
    return True
