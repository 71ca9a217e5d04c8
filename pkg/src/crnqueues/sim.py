"""Event-driven simulation of the PU/SU preemptive-resume priority system.

Two topologies are supported:

* decoupled: one pooled N-server queue; PU packets preempt SU packets in
  service, SU packets use whatever servers the PUs leave free (FIFO).
* coupled: N independent single-server PU channels, each with its own FIFO
  queue, plus M SU stations whose waiting packets seize idle channels.

Preempted SU packets keep their remaining work and go back to the head of
their queue. Random numbers come from one stream per arrival/service process,
each seeded from ``(seed, replication, process)`` so streams never interfere.
"""

from __future__ import annotations

import enum
import heapq
import json
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import SimBudgetError, UnstableModelError
from .ioutil import atomic_write_text, write_csv
from .model import NetworkModel

EVENT_LOG_HEADER = ["time", "event", "cls", "channel", "i", "j", "pu_in_service", "su_in_service"]
METRICS = ("d_pu", "d_su", "w_pu", "w_su", "mean_q_pu", "mean_q_su")

_CHUNK = 4096
_INF = math.inf

# stream ids
_PU_ARR, _SU_ARR, _PU_SVC, _SU_SVC = range(4)


class Topology(enum.Enum):
    DECOUPLED = "Decoupled"
    COUPLED = "Coupled"


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    topology: Topology = Topology.DECOUPLED
    warmup_departures: int | None = None
    measured_departures: int = 100_000
    replications: int = 10
    max_events: int | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.measured_departures < 1:
            raise ValueError("measured_departures must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.warmup_departures is not None and self.warmup_departures < 0:
            raise ValueError("warmup_departures must be >= 0")

    @property
    def warmup(self) -> int:
        if self.warmup_departures is None:
            return self.measured_departures // 5
        return self.warmup_departures

    @property
    def event_budget(self) -> int:
        if self.max_events is not None:
            return self.max_events
        return 50 * (self.warmup + self.measured_departures) + 10_000

    def validate_for(self, n_servers: int):
        if self.measured_departures < 10 * n_servers:
            raise ValueError(f"measured_departures must be >= 10*N = {10 * n_servers}")

    def to_dict(self) -> dict:
        return {"seed": self.seed, "topology": self.topology.value,
                "warmup_departures": self.warmup_departures,
                "measured_departures": self.measured_departures,
                "replications": self.replications, "max_events": self.max_events,
                "workers": self.workers}


@dataclass(frozen=True)
class CoupledSpec:
    per_channel_pu_lambda: tuple[float, ...]
    mu_pu: float
    su_stations: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "per_channel_pu_lambda", tuple(float(x) for x in self.per_channel_pu_lambda))
        object.__setattr__(self, "su_stations", tuple((float(a), float(b)) for a, b in self.su_stations))
        if not self.per_channel_pu_lambda:
            raise ValueError("need at least one channel")
        if not self.su_stations:
            raise ValueError("need at least one SU station")
        if any(x < 0 for x in self.per_channel_pu_lambda) or self.mu_pu <= 0:
            raise ValueError("PU rates must be >= 0 with mu_pu > 0")
        if any(lam < 0 or mu <= 0 for lam, mu in self.su_stations):
            raise ValueError("SU station rates must satisfy lambda >= 0, mu > 0")

    @property
    def n_channels(self) -> int:
        return len(self.per_channel_pu_lambda)

    @property
    def lambda_pu(self) -> float:
        return math.fsum(self.per_channel_pu_lambda)

    @property
    def lambda_su(self) -> float:
        return math.fsum(lam for lam, _ in self.su_stations)

    @property
    def rho(self) -> float:
        return self.lambda_pu / self.mu_pu + math.fsum(lam / mu for lam, mu in self.su_stations)

    @classmethod
    def from_model(cls, model: NetworkModel, stations: int = 1) -> "CoupledSpec":
        """Even split of the pooled PU rate over N channels and SU rate over M stations."""
        n = model.n_servers
        return cls((model.pu.lam / n,) * n, model.pu.mu,
                   ((model.su.lam / stations, model.su.mu),) * stations)

    def to_dict(self) -> dict:
        return {"per_channel_pu_lambda": list(self.per_channel_pu_lambda), "mu_pu": self.mu_pu,
                "su_stations": [list(s) for s in self.su_stations]}


@dataclass
class SimEstimate:
    d_pu: float | None
    d_su: float | None
    w_pu: float | None
    w_su: float | None
    mean_q_pu: float
    mean_q_su: float
    ci_halfwidth: dict
    events_processed: int
    replications: int
    lambda_pu: float
    lambda_su: float
    seed: int
    topology: str
    per_replication: list = field(default_factory=list)

    def little_law_check(self, n_ci: float = 3.0) -> dict:
        """|mean_q - lambda * d| against ``n_ci`` combined CI half-widths, per class."""
        out = {}
        for cls, lam in (("pu", self.lambda_pu), ("su", self.lambda_su)):
            d = getattr(self, f"d_{cls}")
            q = getattr(self, f"mean_q_{cls}")
            if d is None:
                out[cls] = {"residual": q, "bound": None, "ok": q == 0}
                continue
            ci = self.ci_halfwidth.get(f"mean_q_{cls}", math.nan) + lam * self.ci_halfwidth.get(f"d_{cls}", math.nan)
            res = abs(q - lam * d)
            out[cls] = {"residual": res, "bound": n_ci * ci, "ok": bool(res <= n_ci * ci)}
        return out

    def to_dict(self) -> dict:
        return {
            "d_pu": self.d_pu, "d_su": self.d_su, "w_pu": self.w_pu, "w_su": self.w_su,
            "mean_q_pu": self.mean_q_pu, "mean_q_su": self.mean_q_su,
            "ci_halfwidth": dict(sorted(self.ci_halfwidth.items())),
            "events_processed": self.events_processed, "replications": self.replications,
            "lambda_pu": self.lambda_pu, "lambda_su": self.lambda_su,
            "seed": self.seed, "topology": self.topology,
            "per_replication": self.per_replication,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def _clean(v):
    if isinstance(v, list):
        return [_clean(x) for x in v]
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def _exp_stream(seed: int, replication: int, *key: int):
    """Endless iterator of unit-rate exponential draws for one process."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, *key))
    gen = np.random.Generator(np.random.PCG64(ss))
    while True:
        yield from gen.standard_exponential(_CHUNK).tolist()


class _Stats:
    """Per-replication accumulators shared by both topologies."""

    __slots__ = ("d_pu", "n_pu", "w_pu", "d_su", "n_su", "w_su", "area_i", "area_j", "t0", "t1",
                 "events", "departures")

    def __init__(self):
        self.d_pu = self.w_pu = self.d_su = self.w_su = 0.0
        self.n_pu = self.n_su = 0
        self.area_i = self.area_j = 0.0
        self.t0 = self.t1 = 0.0
        self.events = 0
        self.departures = 0

    def result(self) -> dict:
        span = self.t1 - self.t0
        return {
            "d_pu": self.d_pu / self.n_pu if self.n_pu else math.nan,
            "w_pu": self.w_pu / self.n_pu if self.n_pu else math.nan,
            "d_su": self.d_su / self.n_su if self.n_su else math.nan,
            "w_su": self.w_su / self.n_su if self.n_su else math.nan,
            "mean_q_pu": self.area_i / span if span > 0 else math.nan,
            "mean_q_su": self.area_j / span if span > 0 else math.nan,
            "n_pu": self.n_pu, "n_su": self.n_su, "events": self.events, "duration": span,
        }


def simulate_decoupled_once(model: NetworkModel, cfg: SimConfig, replication: int = 0,
                            event_log: list | None = None) -> dict:
    """One replication of the pooled N-server preemptive-resume queue."""
    n = model.n_servers
    lam1, mu1, lam2, mu2 = model.pu.lam, model.pu.mu, model.su.lam, model.su.mu
    seed = cfg.seed
    arr1 = _exp_stream(seed, replication, _PU_ARR)
    arr2 = _exp_stream(seed, replication, _SU_ARR)
    svc1 = _exp_stream(seed, replication, _PU_SVC)
    svc2 = _exp_stream(seed, replication, _SU_SVC)
    warmup, target = cfg.warmup, cfg.warmup + cfg.measured_departures
    budget = cfg.event_budget

    t = 0.0
    next1 = next(arr1) / lam1 if lam1 > 0 else _INF
    next2 = next(arr2) / lam2 if lam2 > 0 else _INF
    heap: list = []  # (end time, token, server)
    token = 0
    srv_cls = [0] * n  # 0 idle, 1 PU, 2 SU
    srv_pkt: list = [None] * n
    srv_end = [0.0] * n
    srv_tok = [-1] * n
    free = list(range(n))
    su_running: list = []  # servers holding an SU, in service-start order
    pu_q: deque = deque()
    su_q: deque = deque()
    i = j = 0
    pu_busy = su_busy = 0
    st = _Stats()
    measuring = warmup == 0
    last = 0.0
    events = 0
    log = event_log.append if event_log is not None else None
    heappush, heappop = heapq.heappush, heapq.heappop

    while st.departures < target:
        if events >= budget:
            st.t1 = t
            raise SimBudgetError(f"event budget {budget} exhausted after {st.departures} departures",
                                 partial=st.result())
        h = heap[0][0] if heap else _INF
        if next1 <= next2 and next1 <= h:
            t = next1
            kind = 1
        elif next2 <= h:
            t = next2
            kind = 2
        else:
            end, tok, s = heap[0]
            heappop(heap)
            if srv_tok[s] != tok:
                continue  # completion of a preempted service
            t = end
            kind = 3
        if measuring:
            dt = t - last
            st.area_i += i * dt
            st.area_j += j * dt
        last = t
        events += 1
        chan = -1

        if kind == 1:  # PU arrival
            next1 = t + next(arr1) / lam1
            i += 1
            if free:
                s = heappop(free)
            elif su_running:
                # preempt the most recently started SU; it keeps its remaining work
                s = su_running.pop()
                pkt = srv_pkt[s]
                pkt[1] = srv_end[s] - t
                srv_tok[s] = -1
                su_q.appendleft(pkt)
                su_busy -= 1
            else:
                s = -1
                pu_q.append(t)
            if s >= 0:
                work = next(svc1) / mu1
                srv_cls[s] = 1
                srv_pkt[s] = (t, work)
                srv_end[s] = t + work
                srv_tok[s] = token
                heappush(heap, (t + work, token, s))
                token += 1
                pu_busy += 1
            cls_ = 1
            chan = s
            ev = "arrival"
        elif kind == 2:  # SU arrival
            next2 = t + next(arr2) / lam2
            j += 1
            work = next(svc2) / mu2
            pkt = [t, work, work]
            if free:
                s = heappop(free)
                srv_cls[s] = 2
                srv_pkt[s] = pkt
                srv_end[s] = t + work
                srv_tok[s] = token
                heappush(heap, (t + work, token, s))
                token += 1
                su_running.append(s)
                su_busy += 1
                chan = s
            else:
                su_q.append(pkt)
            cls_ = 2
            ev = "arrival"
        else:  # service completion on server s
            cls_ = srv_cls[s]
            pkt = srv_pkt[s]
            st.departures += 1
            dep_no = st.departures
            if cls_ == 1:
                i -= 1
                pu_busy -= 1
                if dep_no > warmup:
                    st.d_pu += t - pkt[0]
                    st.w_pu += t - pkt[0] - pkt[1]
                    st.n_pu += 1
            else:
                j -= 1
                su_busy -= 1
                su_running.remove(s)
                if dep_no > warmup:
                    st.d_su += t - pkt[0]
                    st.w_su += t - pkt[0] - pkt[2]
                    st.n_su += 1
            srv_tok[s] = -1
            if pu_q:
                arr_t = pu_q.popleft()
                work = next(svc1) / mu1
                srv_cls[s] = 1
                srv_pkt[s] = (arr_t, work)
                srv_end[s] = t + work
                srv_tok[s] = token
                heappush(heap, (t + work, token, s))
                token += 1
                pu_busy += 1
            elif su_q:
                nxt = su_q.popleft()
                srv_cls[s] = 2
                srv_pkt[s] = nxt
                srv_end[s] = t + nxt[1]
                srv_tok[s] = token
                heappush(heap, (t + nxt[1], token, s))
                token += 1
                su_running.append(s)
                su_busy += 1
            else:
                srv_cls[s] = 0
                srv_pkt[s] = None
                heappush(free, s)
            chan = s
            ev = "departure"
            if not measuring and dep_no == warmup:
                measuring = True
                st.t0 = t
        if log is not None:
            log((t, ev, "PU" if cls_ == 1 else "SU", chan, i, j, pu_busy, su_busy))

    st.t1 = t
    st.events = events
    return st.result()


def simulate_coupled_once(spec: CoupledSpec, cfg: SimConfig, replication: int = 0,
                          event_log: list | None = None) -> dict:
    """One replication of N independent PU channels shared by M SU stations."""
    n, m = spec.n_channels, len(spec.su_stations)
    mu1 = spec.mu_pu
    seed = cfg.seed
    # stream keys: (kind, index) so channels/stations never share draws
    pu_arr = [_exp_stream(seed, replication, _PU_ARR, c) for c in range(n)]
    pu_svc = [_exp_stream(seed, replication, _PU_SVC, c) for c in range(n)]
    su_arr = [_exp_stream(seed, replication, _SU_ARR, s) for s in range(m)]
    su_svc = [_exp_stream(seed, replication, _SU_SVC, s) for s in range(m)]
    warmup, target = cfg.warmup, cfg.warmup + cfg.measured_departures
    budget = cfg.event_budget

    heap: list = []  # (time, token, kind, index); kind 0 PU arrival, 1 SU arrival, 2 completion
    token = 0
    for c, lam in enumerate(spec.per_channel_pu_lambda):
        if lam > 0:
            heap.append((next(pu_arr[c]) / lam, token, 0, c))
            token += 1
    for s, (lam, _) in enumerate(spec.su_stations):
        if lam > 0:
            heap.append((next(su_arr[s]) / lam, token, 1, s))
            token += 1
    heapq.heapify(heap)

    ch_cls = [0] * n
    ch_pkt: list = [None] * n
    ch_end = [0.0] * n
    ch_tok = [-1] * n
    ch_station = [-1] * n
    idle = set(range(n))
    pu_qs = [deque() for _ in range(n)]
    su_qs = [deque() for _ in range(m)]
    waiting_su = 0
    rr = 0
    i = j = 0
    pu_busy = su_busy = 0
    st = _Stats()
    per_station = [[0.0, 0] for _ in range(m)]
    measuring = warmup == 0
    last = t = 0.0
    events = 0
    log = event_log.append if event_log is not None else None
    heappush, heappop = heapq.heappush, heapq.heappop

    def start_pu(c, arr_t, now):
        nonlocal token, pu_busy
        work = next(pu_svc[c]) / mu1
        ch_cls[c] = 1
        ch_pkt[c] = (arr_t, work)
        ch_end[c] = now + work
        ch_tok[c] = token
        heappush(heap, (now + work, token, 2, c))
        token += 1
        pu_busy += 1

    def dispatch(now):
        # hand idle channels to waiting SU packets, polling stations round-robin
        nonlocal rr, token, su_busy, waiting_su
        while idle and waiting_su:
            c = min(idle)
            for k in range(m):
                s = (rr + k) % m
                if su_qs[s]:
                    break
            rr = (s + 1) % m
            pkt = su_qs[s].popleft()
            waiting_su -= 1
            idle.discard(c)
            ch_cls[c] = 2
            ch_pkt[c] = pkt
            ch_station[c] = s
            ch_end[c] = now + pkt[1]
            ch_tok[c] = token
            heappush(heap, (now + pkt[1], token, 2, c))
            token += 1
            su_busy += 1

    while st.departures < target:
        if events >= budget:
            st.t1 = t
            raise SimBudgetError(f"event budget {budget} exhausted after {st.departures} departures",
                                 partial=st.result())
        t, tok, kind, idx = heappop(heap)
        if kind == 2 and ch_tok[idx] != tok:
            continue
        if measuring:
            dt = t - last
            st.area_i += i * dt
            st.area_j += j * dt
        last = t
        events += 1

        if kind == 0:
            c = idx
            lam = spec.per_channel_pu_lambda[c]
            heappush(heap, (t + next(pu_arr[c]) / lam, token, 0, c))
            token += 1
            i += 1
            if ch_cls[c] == 0:
                idle.discard(c)
                start_pu(c, t, t)
            elif ch_cls[c] == 2:
                pkt = ch_pkt[c]
                pkt[1] = ch_end[c] - t
                su_qs[ch_station[c]].appendleft(pkt)
                waiting_su += 1
                su_busy -= 1
                ch_tok[c] = -1
                start_pu(c, t, t)
                dispatch(t)
            else:
                pu_qs[c].append(t)
            cls_, chan, ev = 1, c, "arrival"
        elif kind == 1:
            s = idx
            lam, mu = spec.su_stations[s]
            heappush(heap, (t + next(su_arr[s]) / lam, token, 1, s))
            token += 1
            j += 1
            work = next(su_svc[s]) / mu
            su_qs[s].append([t, work, work, s])
            waiting_su += 1
            dispatch(t)
            cls_, chan, ev = 2, -1, "arrival"
        else:
            c = idx
            cls_ = ch_cls[c]
            pkt = ch_pkt[c]
            st.departures += 1
            dep_no = st.departures
            ch_tok[c] = -1
            if cls_ == 1:
                i -= 1
                pu_busy -= 1
                if dep_no > warmup:
                    st.d_pu += t - pkt[0]
                    st.w_pu += t - pkt[0] - pkt[1]
                    st.n_pu += 1
            else:
                j -= 1
                su_busy -= 1
                if dep_no > warmup:
                    st.d_su += t - pkt[0]
                    st.w_su += t - pkt[0] - pkt[2]
                    st.n_su += 1
                    ps = per_station[pkt[3]]
                    ps[0] += t - pkt[0]
                    ps[1] += 1
            if pu_qs[c]:
                start_pu(c, pu_qs[c].popleft(), t)
            else:
                ch_cls[c] = 0
                ch_pkt[c] = None
                idle.add(c)
                dispatch(t)
            chan, ev = c, "departure"
            if not measuring and dep_no == warmup:
                measuring = True
                st.t0 = t
        if log is not None:
            log((t, ev, "PU" if cls_ == 1 else "SU", chan, i, j, pu_busy, su_busy))

    st.t1 = t
    st.events = events
    out = st.result()
    out["per_station_d_su"] = [tot / cnt if cnt else math.nan for tot, cnt in per_station]
    return out


def _t_halfwidth(values: np.ndarray) -> float:
    r = values.size
    if r < 2:
        return math.nan
    return float(stats.t.ppf(0.975, r - 1) * values.std(ddof=1) / math.sqrt(r))


def replicate(runner: Callable[[int], dict], cfg: SimConfig, ci: bool = True,
              lambda_pu: float = math.nan, lambda_su: float = math.nan) -> SimEstimate:
    """Run ``cfg.replications`` independent replications and aggregate them.

    ``runner(k)`` must return the per-replication metric dict for replication k.
    Results are ordered by replication index before reduction, so the estimate
    does not depend on worker scheduling.
    """
    if ci and cfg.replications < 2:
        raise ValueError("confidence intervals need at least 2 replications")
    idx = range(cfg.replications)
    if cfg.workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            reps = list(pool.map(runner, idx))
    else:
        reps = [runner(k) for k in idx]
    means, ci_hw = {}, {}
    for name in METRICS:
        vals = np.array([r[name] for r in reps], dtype=float)
        if np.isnan(vals).any():
            means[name] = None
            continue
        means[name] = float(vals.mean())
        if ci:
            ci_hw[name] = _t_halfwidth(vals)
    per_rep = [{k: _clean(v) for k, v in sorted(r.items())} for r in reps]
    return SimEstimate(
        d_pu=means["d_pu"], d_su=means["d_su"], w_pu=means["w_pu"], w_su=means["w_su"],
        mean_q_pu=means["mean_q_pu"] if means["mean_q_pu"] is not None else 0.0,
        mean_q_su=means["mean_q_su"] if means["mean_q_su"] is not None else 0.0,
        ci_halfwidth=ci_hw,
        events_processed=int(sum(r["events"] for r in reps)),
        replications=cfg.replications, lambda_pu=lambda_pu, lambda_su=lambda_su,
        seed=cfg.seed, topology=cfg.topology.value, per_replication=per_rep,
    )


def run_decoupled(model: NetworkModel, cfg: SimConfig, event_log: list | None = None) -> SimEstimate:
    """Replicated simulation of the pooled model; ``event_log`` collects replication 0."""
    if not model.is_stable:
        raise UnstableModelError(model.rho, model.n_servers)
    cfg.validate_for(model.n_servers)
    runner = partial(_decoupled_runner, model, cfg, event_log)
    if event_log is not None:
        cfg = _sequential(cfg)
    return replicate(runner, cfg, ci=cfg.replications >= 2,
                     lambda_pu=model.pu.lam, lambda_su=model.su.lam)


def run_coupled(spec: CoupledSpec, cfg: SimConfig, event_log: list | None = None) -> SimEstimate:
    if not spec.rho < spec.n_channels:
        raise UnstableModelError(spec.rho, spec.n_channels)
    for c, lam in enumerate(spec.per_channel_pu_lambda):
        if lam >= spec.mu_pu:
            raise UnstableModelError(lam / spec.mu_pu, 1,
                                     f"PU channel {c} is unstable on its own: rho={lam / spec.mu_pu:.6g} >= 1")
    cfg.validate_for(spec.n_channels)
    runner = partial(_coupled_runner, spec, cfg, event_log)
    if event_log is not None:
        cfg = _sequential(cfg)
    return replicate(runner, cfg, ci=cfg.replications >= 2,
                     lambda_pu=spec.lambda_pu, lambda_su=spec.lambda_su)


def _sequential(cfg):
    from dataclasses import replace
    return replace(cfg, workers=1)


def _decoupled_runner(model, cfg, event_log, k):
    return simulate_decoupled_once(model, cfg, k, event_log if k == 0 else None)


def _coupled_runner(spec, cfg, event_log, k):
    return simulate_coupled_once(spec, cfg, k, event_log if k == 0 else None)


def write_event_log(path, rows: Sequence[tuple]) -> None:
    write_csv(path, EVENT_LOG_HEADER, rows)


def write_estimate_json(path, est: SimEstimate) -> None:
    atomic_write_text(path, est.to_json() + "\n")
