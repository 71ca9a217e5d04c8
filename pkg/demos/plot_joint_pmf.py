"""
Joint queue-length distribution
===============================

Solve the (PU, SU) Markov chain in the light and heavy PU-traffic regimes and
look at how the SU marginal spreads out when primaries load the channels.
"""

import sys
from pathlib import Path

import numpy as np

from crnqueues.ctmc import quantile_index, solve
from crnqueues.ioutil import write_csv
from crnqueues.model import htr_model, ltr_model

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")

# %%
# Light traffic: rho_pu = 0.6, rho_su = 4 on ten channels.
ltr = solve(ltr_model())
print("LTR truncation", ltr.truncation.i_max, ltr.truncation.j_max,
      "tail mass %.1e" % ltr.achieved_tail_mass)
i_peak, j_peak = np.unravel_index(np.argmax(ltr.probabilities), ltr.probabilities.shape)
print("mode of the joint law at i=%d, j=%d" % (i_peak, j_peak))

# %%
# Heavy traffic: the PU load goes to 5.4 and the lattice has to grow along j.
htr = solve(htr_model())
print("HTR truncation", htr.truncation.i_max, htr.truncation.j_max)

for name, pmf in (("ltr", ltr), ("htr", htr)):
    pu, su = pmf.marginals()
    print(f"{name}: E[i]={pmf.mean_pu:.3f}  E[j]={pmf.mean_su:.3f}  "
          f"99.9% SU quantile={quantile_index(su, 0.999)}")
    pmf.to_csv(out / f"joint_{name}.csv")
    write_csv(out / f"su_marginal_{name}.csv", ["j", "p"], enumerate(su.tolist()))
print("CSV files in", out)
