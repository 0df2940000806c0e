"""A walk in a fixed random environment.

Each site carries its own transition law, drawn once from a seeded field and
then frozen.  The law at a site depends only on (seed, site), so it is the
same whichever thread asks for it, and exits from a half-plane still happen.
"""

import math

from conewalk import Cone, Experiment, KernelSpec, StopRule, batch
from conewalk.kernels import rwre_site, rwre_transition

for site in [(0, 0), (50, 0), (-3, 7)]:
    env = rwre_site(11, site)
    table = rwre_transition(env, site)
    law = {tuple(int(c) for c in a): round(float(q), 4) for a, q in zip(table.displacements, table.probs)}
    print(site, law)

kernel = KernelSpec.rwre(11)
cone = Cone.around((1, 0), math.pi / 2)
res = batch(kernel, Experiment((50, 0), StopRule.cone_exit(cone), 10**5), 100, master_seed=99)
print(f"stopped {res.stop_fraction:.2f} of 100 runs within 1e5 steps")
