"""Euclidean cost of the mixed performance vector and its constrained minimizer."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .conservation import RegionVertices
from .errors import DegenerateRegionError, InfeasibleThresholdsError
from .ioutil import write_csv
from .synthesis import FeasibleInterval, _check_alpha

COST_CURVE_SAMPLES = 512


class Clamp(enum.Enum):
    LOWER = "Lower"
    UPPER = "Upper"
    INTERIOR = "Interior"


@dataclass(frozen=True)
class CostCoefficients:
    """F(alpha)^2 = c1 alpha^2 - c2 alpha + c3."""

    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        if not self.c1 > 0:
            raise DegenerateRegionError(f"c1 must be positive, got {self.c1!r}")

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3}


@dataclass(frozen=True)
class OptimalMix:
    alpha_min: float
    beta_unconstrained: float
    cost_at_min: float
    clamped: Clamp

    def to_dict(self) -> dict:
        return {"alpha_min": self.alpha_min, "beta": self.beta_unconstrained,
                "cost_at_min": self.cost_at_min, "clamped": self.clamped.value}


def cost(v: RegionVertices, alpha):
    """Length of the mixed waiting-time vector. Accepts scalars or arrays."""
    arr = np.asarray(alpha, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("alpha must lie in [0, 1]")
    w_pu = arr * v.a + (1 - arr) * v.b
    w_su = arr * v.c + (1 - arr) * v.d
    out = np.hypot(w_pu, w_su)
    return float(out) if out.ndim == 0 else out


def coefficients(v: RegionVertices) -> CostCoefficients:
    a, b, c, d = v.as_tuple()
    return CostCoefficients(
        c1=(b - a) ** 2 + (c - d) ** 2,
        c2=2 * (b * (b - a) - d * (c - d)),
        c3=b * b + d * d,
    )


def unconstrained_minimizer(coeffs: CostCoefficients) -> float:
    if not coeffs.c1 > 0:
        raise DegenerateRegionError("c1 must be positive")
    return coeffs.c2 / (2 * coeffs.c1)


def optimal_alpha(v: RegionVertices, interval: FeasibleInterval) -> OptimalMix:
    """Clamp the unconstrained minimizer into [a1, a2]; ties resolve to Interior."""
    if not interval.feasible:
        raise InfeasibleThresholdsError(
            f"thresholds infeasible (a1={interval.a1:.6g} >= a2={interval.a2:.6g}); "
            "relax th_pu or th_su")
    beta = unconstrained_minimizer(coefficients(v))
    if beta < interval.a1:
        alpha, clamp = interval.a1, Clamp.LOWER
    elif beta > interval.a2:
        alpha, clamp = interval.a2, Clamp.UPPER
    else:
        alpha, clamp = beta, Clamp.INTERIOR
    return OptimalMix(alpha, beta, cost(v, alpha), clamp)


def cost_curve(v: RegionVertices, lo: float, hi: float, samples: int = COST_CURVE_SAMPLES):
    _check_alpha(lo)
    _check_alpha(hi)
    alphas = np.linspace(lo, hi, samples)
    return alphas, cost(v, alphas)


def export_cost_curve_csv(path, v: RegionVertices, lo: float, hi: float,
                          samples: int = COST_CURVE_SAMPLES) -> None:
    alphas, f = cost_curve(v, lo, hi, samples)
    write_csv(path, ["alpha", "cost"], zip(alphas.tolist(), f.tolist()))
