"""Splitting skeleton jumps into a symmetric part and a residual.

Each jump of the lazy symmetric walk is written as V + zeta, where V is drawn
from a fixed symmetric law on {0, +-e_1, +-e_2} and zeta is whatever is left.
The two parts never move together, and their partial sums Y and Z add up to
the path exactly.
"""

from collections import Counter

from conewalk import AssumptionParams, KernelSpec, RandomStream
from conewalk.decomposition import decompose_trajectory

kernel = KernelSpec.zero_drift(2)
params = AssumptionParams(kappa=0.125)
trace = decompose_trajectory(kernel, params, (0, 0), 10_000, RandomStream.from_seed(3))

print("first steps (V, zeta, increment):")
for step in trace.steps[:6]:
    print("   ", step)
print("identity mismatches:", trace.identity_mismatches())
print("steps where V and zeta both move:", trace.exclusivity_violations())

counts = Counter(map(tuple, trace.v.tolist()))
print("V frequencies (expected 0.5 for 0 and 0.125 for each unit step):")
for atom, n in sorted(counts.items()):
    print(f"    {atom}: {n / trace.length:.4f}")
print("final state", trace.states[-1], "= Y", trace.y[-1], "+ Z", trace.z[-1])
