"""Closed-form M/M/N results for the high-priority class.

Under preemptive priority the PU class never sees SU traffic, so its queue is a
plain M/M/N. Factorial terms are accumulated in log-space so that large server
counts do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import UndefinedDelayError, UnstableModelError
from .model import ClassParams

PMF_TAIL = 1e-12
PMF_CAP = 10**6


@dataclass(frozen=True)
class MmnResult:
    p_o: float
    total_delay: float
    mean_queue_length: float


def _check(rho, n):
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= rho < n:
        raise UnstableModelError(rho, n)


def log_idle_probability(rho: float, n: int) -> float:
    _check(rho, n)
    if rho == 0:
        return 0.0
    k = np.arange(n)
    lr = math.log(rho)
    terms = np.append(k * lr - gammaln(k + 1),
                      n * lr - gammaln(n + 1) - math.log1p(-rho / n))
    return -float(logsumexp(terms))


def erlang_idle_probability(rho: float, n: int) -> float:
    """Probability that an M/M/n system with offered load ``rho`` is empty."""
    return math.exp(log_idle_probability(rho, n))


def erlang_c(rho: float, n: int) -> float:
    """Probability that an arrival has to wait (all ``n`` servers busy)."""
    _check(rho, n)
    if rho == 0:
        return 0.0
    log_c = (n * math.log(rho) - gammaln(n + 1) - math.log1p(-rho / n)
             + log_idle_probability(rho, n))
    return math.exp(log_c)


def mmn_total_delay(params: ClassParams, n: int) -> float:
    """Mean sojourn time (queueing plus service) of an M/M/n queue."""
    if params.lam == 0:
        raise UndefinedDelayError("delay undefined at zero arrival rate")
    rho = params.rho
    _check(rho, n)
    log_q = ((n + 1) * math.log(rho) - gammaln(n + 1) - math.log(n)
             + log_idle_probability(rho, n) - 2 * math.log1p(-rho / n))
    return (rho + math.exp(log_q)) / params.lam


def mmn_result(params: ClassParams, n: int) -> MmnResult:
    d = mmn_total_delay(params, n)
    return MmnResult(erlang_idle_probability(params.rho, n), d, params.lam * d)


def _log_pmf(rho, n, k):
    lr = math.log(rho)
    k = np.asarray(k)
    below = k * lr - gammaln(k + 1)
    above = n * lr - gammaln(n + 1) + (k - n) * math.log(rho / n)
    return np.where(k <= n, below, above) + log_idle_probability(rho, n)


def _default_kmax(rho, n):
    # smallest k with cumulative mass >= 1 - PMF_TAIL; past n the tail is geometric
    r = rho / n
    head = np.exp(_log_pmf(rho, n, np.arange(n + 1)))
    cum = np.cumsum(head)
    hit = np.nonzero(cum >= 1 - PMF_TAIL)[0]
    if hit.size:
        return int(hit[0])
    # P(K > k) = pi_n * r^(k-n+1) / (1-r) for k >= n
    log_tail_n = _log_pmf(rho, n, n) + math.log(r) - math.log1p(-r)
    extra = math.ceil((math.log(PMF_TAIL) - log_tail_n) / math.log(r))
    return int(min(n + max(extra, 0), PMF_CAP))


def mmn_queue_length_pmf(params: ClassParams, n: int, k_max: int | None = None) -> np.ndarray:
    """Stationary number-in-system law of M/M/n for k = 0..k_max."""
    rho = params.rho
    _check(rho, n)
    if k_max is None:
        k_max = 0 if rho == 0 else _default_kmax(rho, n)
    if rho == 0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    return np.exp(_log_pmf(rho, n, np.arange(k_max + 1)))
