"""Decomposition sets over a formula's variables and sampling machinery.

A decomposition set X of d variables splits a SAT problem into the 2^d
subproblems obtained by substituting every truth assignment of X.  A sample
plan holds N assignments of X drawn i.i.d. uniform (with replacement) from a
seeded Mersenne-twister generator, so identical (seed, d, N) triples yield
identical plans on every platform.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterable, Iterator

from .cnf import CnfFormula

DEFAULT_ENUMERATION_BUDGET = 30


@dataclass(frozen=True)
class DecompositionSet:
    """Sorted tuple of distinct variable indices (1-based)."""

    variables: tuple[int, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.variables))
        if any(v < 1 for v in ordered):
            raise ValueError("variable indices must be >= 1")
        if len(set(ordered)) != len(ordered):
            raise ValueError("variable indices must be distinct")
        object.__setattr__(self, "variables", ordered)

    @classmethod
    def of(cls, variables: Iterable[int]) -> "DecompositionSet":
        return cls(tuple(int(v) for v in variables))

    @property
    def d(self) -> int:
        return len(self.variables)

    def assignment(self, mask: int) -> dict[int, bool]:
        """Assignment mapping where bit i of `mask` gives variable i's value
        (variables in ascending order, bit 0 first)."""
        return {v: bool((mask >> i) & 1) for i, v in enumerate(self.variables)}

    def __len__(self) -> int:
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)


def chi_encode(dset: DecompositionSet, num_vars: int) -> tuple[int, ...]:
    """Hypercube encoding: bit i-1 is 1 iff variable i is in the set."""
    if dset.variables and dset.variables[-1] > num_vars:
        raise ValueError(
            f"variable {dset.variables[-1]} out of range for n={num_vars}")
    bits = [0] * num_vars
    for v in dset.variables:
        bits[v - 1] = 1
    return tuple(bits)


def chi_decode(bits: Iterable[int]) -> DecompositionSet:
    return DecompositionSet.of(i + 1 for i, b in enumerate(bits) if b)


@dataclass(frozen=True)
class SamplePlan:
    """N assignments of a decomposition set, reproducible from the seed.

    Assignments are stored as integer bitmasks; bit i (LSB first) is the
    value of the i-th set variable in ascending index order.
    """

    decomposition: DecompositionSet
    seed: int
    size: int
    assignments: tuple[int, ...]

    @property
    def d(self) -> int:
        return self.decomposition.d

    def assignment(self, index: int) -> dict[int, bool]:
        return self.decomposition.assignment(self.assignments[index])

    def assignment_bits(self, index: int) -> tuple[int, ...]:
        mask = self.assignments[index]
        return tuple((mask >> i) & 1 for i in range(self.d))

    def to_json_dict(self, include_assignments: bool = False) -> dict:
        doc = {
            "variables": list(self.decomposition.variables),
            "seed": self.seed,
            "size": self.size,
        }
        if include_assignments:
            doc["assignments"] = [
                "".join(str(b) for b in self.assignment_bits(i))
                for i in range(self.size)
            ]
        return doc

    def to_json(self, include_assignments: bool = False) -> str:
        return json.dumps(self.to_json_dict(include_assignments))


def draw_sample(dset: DecompositionSet, n_samples: int, seed: int) -> SamplePlan:
    """Draw N assignments i.i.d. uniform over {0,1}^d, with replacement.

    Uses the standard library Mersenne twister; each assignment consumes one
    getrandbits(d) call whose bit i (LSB) is the value of the i-th variable
    in ascending order.
    """
    if dset.d < 1:
        raise ValueError("sampling requires d >= 1; treat d=0 as a single whole-problem solve")
    if n_samples < 1:
        raise ValueError("sample size must be >= 1")
    rng = random.Random(seed)
    d = dset.d
    masks = tuple(rng.getrandbits(d) for _ in range(n_samples))
    return SamplePlan(dset, seed, n_samples, masks)


def enumerate_family(formula: CnfFormula, dset: DecompositionSet,
                     budget: int = DEFAULT_ENUMERATION_BUDGET,
                     ) -> Iterator[tuple[dict[int, bool], CnfFormula]]:
    """Yield all 2^d (assignment, substituted formula) pairs.

    Assignments are produced in lexicographic order of their bit vectors
    (first set variable most significant: 00, 01, 10, 11 for d=2).
    """
    if dset.d > budget:
        raise ValueError(f"enumeration of 2^{dset.d} formulas exceeds budget 2^{budget}")
    if dset.variables and dset.variables[-1] > formula.num_vars:
        raise ValueError("decomposition variable out of formula range")
    for bits in itertools.product((0, 1), repeat=dset.d):
        assignment = {v: bool(b) for v, b in zip(dset.variables, bits)}
        yield assignment, formula.substitute(assignment)
