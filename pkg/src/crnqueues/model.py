"""Network parameters for the two-class (PU/SU) N-channel priority queue.

Class 1 is the primary (PU) class, class 2 the secondary (SU) class. Rates are
packets/second and times are seconds throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

from .errors import RefinementInstabilityError, UnstableModelError


@dataclass(frozen=True)
class ClassParams:
    """Arrival rate ``lam`` and per-server service rate ``mu`` of one traffic class."""

    lam: float
    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"arrival rate must be finite and >= 0, got {self.lam!r}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"service rate must be finite and > 0, got {self.mu!r}")

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu}


@dataclass(frozen=True)
class NetworkModel:
    n_servers: int
    pu: ClassParams
    su: ClassParams

    def __post_init__(self):
        if isinstance(self.n_servers, bool) or int(self.n_servers) != self.n_servers or self.n_servers < 1:
            raise ValueError(f"n_servers must be a positive integer, got {self.n_servers!r}")
        object.__setattr__(self, "n_servers", int(self.n_servers))

    @classmethod
    def from_rates(cls, n_servers, lam_pu, mu_pu, lam_su, mu_su) -> "NetworkModel":
        return cls(n_servers, ClassParams(lam_pu, mu_pu), ClassParams(lam_su, mu_su))

    @property
    def rho_pu(self) -> float:
        return self.pu.rho

    @property
    def rho_su(self) -> float:
        return self.su.rho

    @property
    def rho(self) -> float:
        return self.pu.rho + self.su.rho

    @property
    def is_stable(self) -> bool:
        return check_stability(self).stable

    def swapped(self) -> "NetworkModel":
        """Same network with the class labels exchanged (SU gets priority)."""
        return NetworkModel(self.n_servers, self.su, self.pu)

    def require_stable(self) -> None:
        if not self.is_stable:
            raise UnstableModelError(self.rho, self.n_servers)

    def to_dict(self) -> dict:
        return {"n_servers": self.n_servers, "pu": self.pu.to_dict(), "su": self.su.to_dict()}


@dataclass(frozen=True)
class AccessTiming:
    d_access: float
    t_s: float

    def __post_init__(self):
        if self.d_access < 0 or self.t_s <= 0:
            raise ValueError("need d_access >= 0 and t_s > 0")


@dataclass(frozen=True)
class SensingConfig:
    """Each channel is sensed for ``delta_t`` seconds out of every ``t_period``."""

    delta_t: float
    t_period: float

    def __post_init__(self):
        if self.delta_t < 0 or self.t_period <= 0 or self.delta_t >= self.t_period:
            raise ValueError("need 0 <= delta_t < t_period")

    @property
    def p_d(self) -> float:
        return self.delta_t / self.t_period


@dataclass(frozen=True)
class ImperfectionConfig:
    p_d: float
    per_pu: float = 0.0
    per_su: float = 0.0

    def __post_init__(self):
        if not 0 < self.p_d <= 1:
            raise ValueError(f"detection probability must lie in (0, 1], got {self.p_d}")
        for name in ("per_pu", "per_su"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")


class Utilization(NamedTuple):
    rho_pu: float
    rho_su: float
    rho_total: float


class StabilityVerdict(NamedTuple):
    stable: bool
    rho_total: float
    n_servers: int


def utilization(model: NetworkModel) -> Utilization:
    r1, r2 = model.pu.rho, model.su.rho
    return Utilization(r1, r2, r1 + r2)


def check_stability(model: NetworkModel) -> StabilityVerdict:
    rho = model.pu.rho + model.su.rho
    return StabilityVerdict(0 <= rho < model.n_servers, rho, model.n_servers)


def service_rate_from_access(timing: AccessTiming) -> float:
    """SU service rate when each packet costs an access delay plus its transmission time."""
    return 1.0 / (timing.d_access + timing.t_s)


def aggregate_primary(per_channel_rates: Sequence[float]) -> float:
    """Pool the per-channel PU arrival rates into one N-server arrival stream."""
    rates = list(per_channel_rates)
    if not rates:
        raise ValueError("no channels: per-channel PU rate sequence is empty")
    if any(r < 0 for r in rates):
        raise ValueError("per-channel PU arrival rates must be >= 0")
    return math.fsum(rates)


def apply_sensing(model: NetworkModel, sensing: SensingConfig) -> NetworkModel:
    """Shrink SU capacity by the fraction of time channels spend being sensed.

    PU parameters pass through untouched. The refined model is re-checked and
    :class:`RefinementInstabilityError` is raised when ``rho' >= N``.
    """
    model.require_stable()
    p = sensing.p_d
    if p == 0:
        return model
    refined = replace(model, su=ClassParams(model.su.lam, model.su.mu * (1.0 - p)))
    if not refined.is_stable:
        raise RefinementInstabilityError(refined.rho, model.n_servers, "sensing")
    return refined


def apply_imperfections(model: NetworkModel, cfg: ImperfectionConfig) -> NetworkModel:
    # geometric retransmissions scale each service rate by the success probability
    pu_mu = model.pu.mu * (cfg.p_d * (1.0 - cfg.per_pu))
    su_mu = model.su.mu * (cfg.p_d * (1.0 - cfg.per_su))
    if pu_mu == model.pu.mu and su_mu == model.su.mu:
        return model
    if pu_mu <= 0 or su_mu <= 0:
        raise ValueError("imperfections reduced a service rate to zero")
    refined = NetworkModel(model.n_servers, ClassParams(model.pu.lam, pu_mu), ClassParams(model.su.lam, su_mu))
    if not refined.is_stable:
        raise RefinementInstabilityError(refined.rho, model.n_servers, "imperfections")
    return refined


def packet_loss_probability(p_d: float, per: float) -> float:
    if not (0 <= p_d <= 1 and 0 <= per <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return 1.0 - p_d * (1.0 - per)


# Reference parameter sets (light and heavy PU traffic) used by tests and demos.
def ltr_model() -> NetworkModel:
    """Low-traffic regime: N=10, rho_pu=0.6, rho_su=4."""
    return NetworkModel.from_rates(10, 0.3e4, 0.5e4, 4e4, 1e4)


def htr_model() -> NetworkModel:
    """Heavy-traffic regime: N=10, rho_pu=5.4, rho_su=4."""
    return NetworkModel.from_rates(10, 2.7e4, 0.5e4, 4e4, 1e4)
