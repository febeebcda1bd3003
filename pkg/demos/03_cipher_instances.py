"""Build the cryptanalytic benchmark instances and poke at their structure.

Recovering a stream cipher's initial state from known keystream becomes a
SAT problem: encode the keystream generator as a circuit, fix the observed
output bits, and every satisfying assignment's state variables name a
preimage.  The state variables form a strong unit-propagation backdoor,
which is exactly what makes them a good starting decomposition set.
"""

import time

from partsat import CdclSolver
from partsat.ciphers import (
    a5_1,
    bivium,
    encode,
    make_weakened,
    random_state,
    reference_keystream,
)

# Full-size instances: far too hard to solve outright (that is the point),
# but cheap to build and to check the backdoor property on.
for spec in (a5_1(), bivium()):
    state = random_state(spec, seed=99)
    keystream = reference_keystream(spec, state)
    instance = encode(spec, keystream, secret_state=state)
    engine = CdclSolver(instance.cnf)
    t0 = time.perf_counter()
    verdict = engine.propagation_status(instance.state_assignment(state))
    dt = (time.perf_counter() - t0) * 1e3
    print(f"{spec.name}: {instance.cnf.num_vars} vars, "
          f"{instance.cnf.num_clauses} clauses; substituting the true "
          f"{spec.state_bits}-bit state -> {verdict} by propagation alone "
          f"({dt:.1f} ms)")

# A weakened Bivium is small enough to actually invert.
mini = make_weakened("bivium", (12, 11), keystream_len=12)
state = random_state(mini, seed=3)
keystream = reference_keystream(mini, state)
instance = encode(mini, keystream)
print(f"\n{mini.name}: registers {[r.length for r in mini.registers]}, "
      f"{mini.state_bits}-bit state, {len(keystream)} keystream bits")
result = CdclSolver(instance.cnf).solve()
recovered = instance.state_of_model(result.model)
print(f"solver: {result.status.value} in {result.cost.decisions} decisions")
print(f"recovered state: {''.join(map(str, recovered))}")
print(f"its keystream matches: {reference_keystream(mini, recovered) == keystream}")
print(f"(the planted state was {''.join(map(str, state))};"
      " any preimage of the keystream is a valid answer)")
