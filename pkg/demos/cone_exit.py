"""How often does a walk with radial drift leave a half-plane cone?

A drift of size c/|x| sits at the critical scale: whatever the sign of c,
the walk still leaves a cone in finite time, though the exit can take very
long when c > 0.  This demo runs small batches and prints the stop fraction
against the horizon, so the slow tail for c = 1 is visible.
"""

import math

from conewalk import Cone, Experiment, KernelSpec, StopRule, batch, mean_drift
from conewalk.stats import wilson_interval

cone = Cone.around((1, 0), math.pi / 2)
for c in (-1.0, 0.0, 1.0):
    kernel = KernelSpec.radial(c, 1.0)
    print(f"c = {c:+.0f}  drift at (50, 0): {mean_drift(kernel, (50, 0))}")
    for horizon in (10**3, 10**4, 10**5):
        res = batch(kernel, Experiment((50, 0), StopRule.cone_exit(cone), horizon), 200, master_seed=1)
        ci = wilson_interval(res.summary["stopped"], 200)
        print(f"    horizon {horizon:>6}: stopped {res.stop_fraction:.3f}  (95% CI {ci.lower:.3f}-{ci.upper:.3f})")
