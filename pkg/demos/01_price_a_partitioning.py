"""Price a SAT partitioning by sampling instead of solving everything.

Fixing d variables of a CNF in all 2^d ways splits the problem into 2^d
independent subproblems.  Solving a random handful of them and scaling the
average cost by 2^d estimates the total cost of the whole family -- here we
check that estimate against the exact total, which is still computable at
this toy scale.
"""

import math
import random

from partsat import (
    CnfFormula,
    CostMetric,
    DecompositionSet,
    draw_sample,
    estimate,
    exhaustive_total,
)

rng = random.Random(7)
n, m = 24, 96
clauses = []
for _ in range(m):
    vs = rng.sample(range(1, n + 1), 3)
    clauses.append([v if rng.random() < 0.5 else -v for v in vs])
formula = CnfFormula(n, clauses)
print(f"random 3-CNF: {n} variables, {m} clauses")

# Pick 10 variables to substitute: a family of 2^10 = 1024 subproblems.
dset = DecompositionSet.of(rng.sample(range(1, n + 1), 10))
print(f"decomposition set ({dset.d} variables): {dset.variables}")

# Sample only 64 of the 1024 members, with the deterministic solver's
# decision count as the cost metric so results replay exactly.
plan = draw_sample(dset, n_samples=64, seed=2024)
est = estimate(formula, plan, metric=CostMetric.DECISIONS, gamma=0.999)
half = math.ldexp(est.ci_half_width, est.d)
print(f"sampled {est.completed} members: mean cost {est.mean:.2f} decisions")
print(f"predicted total: {est.value:.0f} decisions "
      f"(99.9% interval +- {half:.0f})")

# The oracle grinds through all 1024 members for the exact answer.
exact = exhaustive_total(formula, dset, metric=CostMetric.DECISIONS)
print(f"exact total:     {exact:.0f} decisions")
inside = abs(est.value - exact) <= half
print(f"interval {'contains' if inside else 'MISSES'} the exact total")
