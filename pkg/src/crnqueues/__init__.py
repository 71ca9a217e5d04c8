"""Analysis and synthesis of multi-channel cognitive radio networks as two-class
N-server preemptive-resume priority queues."""

from .conservation import (Ordering, PerformanceVector, RegionVertices, conservation_sum,
                           kleinrock_weighted_sum, performance_vector, region_vertices,
                           secondary_delay_from_law)
from .ctmc import JointPmf, TruncationSpec, delays_from_pmf, marginals, stationary_distribution
from .errors import (ConvergenceError, CrnError, DegenerateRegionError, InfeasibleThresholdsError,
                     RefinementInstabilityError, SimBudgetError, TruncationCapError,
                     UndefinedDelayError, UnstableModelError)
from .mmn import erlang_idle_probability, mmn_queue_length_pmf, mmn_total_delay
from .model import (AccessTiming, ClassParams, ImperfectionConfig, NetworkModel, SensingConfig,
                    apply_imperfections, apply_sensing, check_stability, packet_loss_probability,
                    utilization)
from .optimize import coefficients, cost, optimal_alpha, unconstrained_minimizer
from .sim import CoupledSpec, SimConfig, SimEstimate, Topology, run_coupled, run_decoupled
from .synthesis import (FeasibleInterval, FrontierPoint, Thresholds, feasible_interval,
                        frontier_point, mixed_waiting, unique_alpha_for_target)

__version__ = "0.1.0"
