"""Work-conservation identities and per-ordering performance vectors.

``conservation_sum`` is the closed-form value proposed for rho_1 D_1 + rho_2 D_2
in the two-class N-server preemptive-resume queue. It is exact when the service
rates coincide or one class is absent; for unequal service rates it is an
approximation, so callers that care should compare it against
:func:`crnqueues.ctmc.delays_from_pmf` (see :func:`law_vs_ctmc`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, gammaln, logsumexp

from .errors import DegenerateRegionError, UndefinedDelayError, UnstableModelError
from .mmn import mmn_total_delay
from .model import ClassParams, NetworkModel


class Ordering(enum.Enum):
    PU_PRIORITY = "PuPriority"
    SU_PRIORITY = "SuPriority"


@dataclass(frozen=True)
class PerformanceVector:
    d_pu: float
    d_su: float
    w_pu: float
    w_su: float
    ordering: Ordering

    def weighted_sum(self, model: NetworkModel) -> float:
        return model.pu.rho * self.d_pu + model.su.rho * self.d_su

    def to_dict(self) -> dict:
        return {"d_pu": self.d_pu, "d_su": self.d_su, "w_pu": self.w_pu,
                "w_su": self.w_su, "ordering": self.ordering.value}


@dataclass(frozen=True)
class RegionVertices:
    """Waiting times at the two absolute-priority corners.

    a = W_PU with PU priority, b = W_PU with SU priority,
    c = W_SU with PU priority, d = W_SU with SU priority.
    """

    a: float
    b: float
    c: float
    d: float
    model: NetworkModel | None = None

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("vertex waiting times must be finite")
        if self.a == self.b and self.c == self.d:
            raise DegenerateRegionError("degenerate region: A == B and C == D")
        if not (self.a < self.b and self.d < self.c):
            raise DegenerateRegionError(
                f"vertex ordering violated: need A < B and D < C, got A={self.a:.6g} "
                f"B={self.b:.6g} C={self.c:.6g} D={self.d:.6g}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.a, self.b, self.c, self.d

    def to_dict(self) -> dict:
        return {"A": self.a, "B": self.b, "C": self.c, "D": self.d}


def kleinrock_weighted_sum(classes: Sequence[ClassParams]) -> float:
    """V / (1 - rho) with V = sum(rho_i / mu_i), for a work-conserving single server.

    This is the load-weighted mean waiting time sum((rho_i / rho) * W_i), which
    does not depend on the priority order; multiply by rho for sum(rho_i * W_i).
    """
    rho = math.fsum(c.rho for c in classes)
    if rho >= 1:
        raise UnstableModelError(rho, 1)
    v = math.fsum(c.rho / c.mu for c in classes)
    return v / (1.0 - rho)


def _log_wait_ratio(rho, n):
    # log of sum_k N!(N-rho) / (k! N rho^(N-k)), k = 0..N-1
    k = np.arange(n)
    terms = gammaln(n + 1) + math.log(n - rho) - gammaln(k + 1) - math.log(n) - (n - k) * math.log(rho)
    return float(logsumexp(terms))


def conservation_sum(model: NetworkModel) -> float:
    """Closed-form value of rho_pu * D_pu + rho_su * D_su.

    The leading factor 1 / (1 + sum ...) equals the Erlang-C waiting probability
    at the pooled load rho_pu + rho_su; it is evaluated as a logistic of the log
    of the sum so large N cannot overflow.
    """
    r1, r2 = model.pu.rho, model.su.rho
    rho, n = r1 + r2, model.n_servers
    if rho >= n:
        raise UnstableModelError(rho, n)
    if rho == 0:
        return 0.0
    v = r1 / model.pu.mu + r2 / model.su.mu
    wait_prob = float(expit(-_log_wait_ratio(rho, n)))
    return wait_prob * v / (n - rho) + v


def secondary_delay_from_law(model: NetworkModel) -> float:
    """SU mean total delay implied by the conservation sum, with PU delay from M/M/N."""
    if model.su.lam == 0:
        raise UndefinedDelayError("SU delay undefined at zero arrival rate")
    model.require_stable()
    total = conservation_sum(model)
    pu_part = model.pu.rho * mmn_total_delay(model.pu, model.n_servers) if model.pu.lam > 0 else 0.0
    return (total - pu_part) / model.su.rho


def performance_vector(model: NetworkModel, ordering: Ordering = Ordering.PU_PRIORITY) -> PerformanceVector:
    model.require_stable()
    if model.pu.lam == 0 or model.su.lam == 0:
        raise UndefinedDelayError("performance vector needs traffic in both classes")
    ordering = Ordering(ordering)
    if ordering is Ordering.PU_PRIORITY:
        d_pu = mmn_total_delay(model.pu, model.n_servers)
        d_su = secondary_delay_from_law(model)
    else:
        flipped = model.swapped()
        d_su = mmn_total_delay(flipped.pu, model.n_servers)
        d_pu = secondary_delay_from_law(flipped)
    return PerformanceVector(d_pu, d_su, d_pu - 1.0 / model.pu.mu, d_su - 1.0 / model.su.mu, ordering)


def region_vertices(model: NetworkModel) -> RegionVertices:
    pu_first = performance_vector(model, Ordering.PU_PRIORITY)
    su_first = performance_vector(model, Ordering.SU_PRIORITY)
    return RegionVertices(pu_first.w_pu, su_first.w_pu, pu_first.w_su, su_first.w_su, model)


@dataclass(frozen=True)
class LawComparison:
    law: float
    ctmc: float
    d_pu_ctmc: float
    d_su_ctmc: float
    d_pu_mmn: float
    d_su_law: float

    @property
    def relative_error(self) -> float:
        return abs(self.ctmc - self.law) / self.law

    def to_dict(self) -> dict:
        return {"law": self.law, "ctmc": self.ctmc, "relative_error": self.relative_error,
                "d_pu_ctmc": self.d_pu_ctmc, "d_su_ctmc": self.d_su_ctmc,
                "d_pu_mmn": self.d_pu_mmn, "d_su_law": self.d_su_law}


def law_vs_ctmc(model: NetworkModel, pmf=None, **solve_kwargs) -> LawComparison:
    """Put the closed-form weighted delay sum next to the one measured on the CTMC."""
    from . import ctmc

    if pmf is None:
        pmf = ctmc.solve(model, **solve_kwargs)
    d_pu, d_su = ctmc.require_delays(pmf)
    return LawComparison(
        law=conservation_sum(model),
        ctmc=model.pu.rho * d_pu + model.su.rho * d_su,
        d_pu_ctmc=d_pu,
        d_su_ctmc=d_su,
        d_pu_mmn=mmn_total_delay(model.pu, model.n_servers),
        d_su_law=secondary_delay_from_law(model),
    )
