"""Let the tabu search hunt for a cheap decomposition set on its own.

The search starts from the full backdoor of a weakened A5/1 instance (all
18 state bits), prices each candidate subset by sampling, and abandons a
candidate the moment its running cost sum provably exceeds the best known
value -- the trick that lets it wade through thousands of points while
fully evaluating only a few.
"""

from partsat import CostMetric, SearchConfig, init_from_supbs, run_search
from partsat.ciphers import encode, make_weakened, random_state, reference_keystream

spec = make_weakened("a5_1", (5, 6, 7), keystream_len=10)
state = random_state(spec, seed=5)
instance = encode(spec, reference_keystream(spec, state))
print(f"weakened A5/1 instance: {instance.cnf.num_vars} variables, "
      f"{instance.cnf.num_clauses} clauses, "
      f"{instance.spec.state_bits}-bit secret state")

# The state variables form a strong unit-propagation backdoor; verify it
# and restrict the search to its subsets.
init = init_from_supbs(instance.cnf, instance.state_vars, restrict=True,
                       checks=50)
print(f"backdoor verified; searching over subsets of {len(init.universe)} variables")

config = SearchConfig(n_samples=100, seed=1, metric=CostMetric.DECISIONS,
                      time_limit=60.0)
report = run_search(instance.cnf, init.initial, config)

print(f"\nstopped: {report.stop_reason} after {report.iterations} iterations, "
      f"{report.elapsed_seconds:.1f}s")
c = report.counters
print(f"fully evaluated points: {c['completed']}, interrupted: {c['interrupted']}")
print(f"fully explored neighborhoods |L1|={c['l1']}, frontier |L2|={c['l2']}")
print(f"\nbest set found ({len(report.best_variables)} variables): "
      f"{report.best_variables}")
print(f"predicted total cost: {report.best_value:.0f} decisions")

# The descent, one improvement at a time.
best = None
print("\nimprovement trace:")
for rec in report.evaluations:
    if rec.status == "COMPLETE" and (best is None or rec.value < best):
        best = rec.value
        print(f"  eval #{rec.order:4d}  d={rec.d:2d}  total={rec.value:12.0f}")
