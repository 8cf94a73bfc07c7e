"""The randomized decision-tree walk and its exact distribution.

Given only query access to z, the simulator walks the refined tree as if both
inputs were uniform on the current rectangle; the bit-fixing rounds are where
it actually reads z.  When the message z demands is impossible (Bob's set has
no such string), the walk fails with a bottom outcome.  The exact outcome
distribution is computed by weighted traversal, and each sampled run carries
a potential ledger whose per-iteration inequality is checked exactly.
"""

import json
from fractions import Fraction

from liftsim import SimConfig, ledger_check, refine, simulate_exact, simulate_sample
from liftsim.core import BOT
from liftsim.fixtures import bob_first_fixture

DELTA = Fraction(9, 10)
cfg = SimConfig(delta=DELTA)

# Bob opens by announcing y_1; afterwards Alice may fix her pointer to 1, and
# on the branch where Bob's announcement contradicts z the fixing round has
# no consistent message.
pt = bob_first_fixture(m=2)
rp = refine(pt, DELTA)
z = (0,)

exact = simulate_exact(rp, z, cfg)
print(f"exact outcome distribution on z={z}:")
for t, p in sorted(exact.transcripts.items(), key=lambda kv: str(kv[0])):
    label = "bottom" if t is BOT else t
    print(f"  {label}: {p}")
print("failure breakdown:", {r: str(p) for r, p in exact.bot_reasons.items()})
print("query-count distribution:", {q: str(p) for q, p in exact.queries.items()})

# Sampled runs agree with the exact law and their ledgers always verify.
counts = {}
for seed in range(2000):
    out = simulate_sample(rp, z, cfg, seed=seed)
    assert ledger_check(out, DELTA)
    counts[out.outcome] = counts.get(out.outcome, 0) + 1
print("\n2000 seeded samples:")
for t, c in sorted(counts.items(), key=lambda kv: str(kv[0])):
    print(f"  {'bottom' if t is BOT else t}: {c / 2000:.3f} "
          f"(exact {float(exact.transcripts.prob(t)):.3f})")

# One full outcome record, serialized.
out = simulate_sample(rp, z, cfg, seed=3)
print("\none outcome record:")
print(json.dumps(out.to_dict(), indent=2))

# The strict failure mode also cuts off runs whose Bob set gets too deficient.
strict = SimConfig(delta=DELTA, strict_zpp=True, deficiency_cap=Fraction(1))
print("\nwith a 1-bit deficiency cap:",
      {r: str(p) for r, p in simulate_exact(rp, z, strict).bot_reasons.items()})
