"""
Achievable region and threshold synthesis
=========================================

The two absolute-priority orderings give the corners of a segment in the
(W_PU, W_SU) plane. Thresholds on both waiting times cut out an interval of
admissible mixes.
"""

import sys
from pathlib import Path

from crnqueues.conservation import region_vertices
from crnqueues.model import htr_model
from crnqueues.synthesis import (Thresholds, export_region_csv, feasible_interval,
                                 frontier_point, mixed_waiting)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")

v = region_vertices(htr_model())
print("A=%.3e  B=%.3e  C=%.3e  D=%.3e" % v.as_tuple())

# %%
# Thresholds placed 90% of the way to B and 80% of the way to C.
th = Thresholds.blended(v, 0.9, 0.8)
iv = feasible_interval(v, th)
print("admissible mixes: (%.3f, %.3f)" % (iv.a1, iv.a2))
for alpha in (iv.a1, 0.5, iv.a2):
    print("alpha=%.2f -> W_PU=%.3e  W_SU=%.3e" % (alpha, *mixed_waiting(v, alpha)))

# %%
# Tighten the SU threshold below the frontier and the problem becomes infeasible.
fp = frontier_point(v, th)
tight = Thresholds(th.th_pu, 0.5 * fp.eta)
print("with th_su = %.2e:" % tight.th_su, feasible_interval(v, tight))

export_region_csv(out / "region.csv", v, th)
