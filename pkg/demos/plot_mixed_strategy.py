"""
Cost-minimizing mix
===================

The Euclidean length of the waiting-time vector is a square root of a
quadratic in alpha, so the best admissible mix is the unconstrained minimizer
clamped into the feasible interval.
"""

import sys
from pathlib import Path

from crnqueues.conservation import region_vertices
from crnqueues.model import NetworkModel, htr_model
from crnqueues.optimize import coefficients, export_cost_curve_csv, optimal_alpha
from crnqueues.synthesis import Thresholds, feasible_interval

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")

for name, model in (("htr", htr_model()),
                    ("symmetric", NetworkModel.from_rates(4, 1.5, 1.0, 1.5, 1.0))):
    v = region_vertices(model)
    iv = feasible_interval(v, Thresholds.blended(v, 0.9, 0.8))
    c = coefficients(v)
    mix = optimal_alpha(v, iv)
    print(f"{name}: c=({c.c1:.3e}, {c.c2:.3e}, {c.c3:.3e})  beta={mix.beta_unconstrained:.4f}  "
          f"alpha_min={mix.alpha_min:.4f} ({mix.clamped.value})  F={mix.cost_at_min:.3e}")
    export_cost_curve_csv(out / f"cost_{name}.csv", v, iv.a1, iv.a2)
