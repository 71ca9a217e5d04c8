"""JSON run configuration for the command-line front end.

Unknown keys are rejected at every level. ``RunConfig.to_dict`` emits a
normalized document that parses back to an equal ``RunConfig``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .ctmc import DEFAULT_CAP, DEFAULT_TAIL_TOLERANCE, TruncationSpec
from .model import (AccessTiming, ClassParams, ImperfectionConfig, NetworkModel, SensingConfig,
                    aggregate_primary, apply_imperfections, apply_sensing, service_rate_from_access)
from .sim import CoupledSpec, SimConfig, Topology


class ConfigError(ValueError):
    pass


def _take(d, allowed, where, required=()):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {', '.join(missing)}")
    return d


def _num(d, key, where, default=None, kind=float):
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _drop_none(d):
    return {k: v for k, v in d.items() if v is not None}


@dataclass(frozen=True)
class ClassSection:
    mu: float | None = None
    lam: float | None = None
    per_channel_lambda: tuple[float, ...] | None = None
    d_access: float | None = None
    t_s: float | None = None

    @classmethod
    def parse(cls, d, where):
        _take(d, {"lambda", "mu", "per_channel_lambda", "d_access", "t_s"}, where)
        per = d.get("per_channel_lambda")
        if per is not None:
            if not isinstance(per, list):
                raise ConfigError(f"{where}.per_channel_lambda: expected a list")
            per = tuple(float(x) for x in per)
        out = cls(_num(d, "mu", where), _num(d, "lambda", where), per,
                  _num(d, "d_access", where), _num(d, "t_s", where))
        if (out.lam is None) == (out.per_channel_lambda is None):
            raise ConfigError(f"{where}: give exactly one of lambda / per_channel_lambda")
        if out.mu is None and out.t_s is None:
            raise ConfigError(f"{where}: give mu, or d_access and t_s")
        if out.mu is not None and out.t_s is not None:
            raise ConfigError(f"{where}: mu and d_access/t_s are mutually exclusive")
        return out

    def params(self) -> ClassParams:
        lam = self.lam if self.lam is not None else aggregate_primary(self.per_channel_lambda)
        mu = self.mu if self.mu is not None else service_rate_from_access(
            AccessTiming(self.d_access or 0.0, self.t_s))
        return ClassParams(lam, mu)

    def to_dict(self):
        return _drop_none({"lambda": self.lam, "mu": self.mu,
                           "per_channel_lambda": list(self.per_channel_lambda) if self.per_channel_lambda else None,
                           "d_access": self.d_access, "t_s": self.t_s})


@dataclass(frozen=True)
class ThresholdSection:
    th_pu: float | None = None
    th_su: float | None = None
    th_pu_blend: float | None = None
    th_su_blend: float | None = None

    @classmethod
    def parse(cls, d, where="thresholds"):
        _take(d, {"th_pu", "th_su", "th_pu_blend", "th_su_blend"}, where)
        out = cls(*(_num(d, k, where) for k in ("th_pu", "th_su", "th_pu_blend", "th_su_blend")))
        if (out.th_pu is None) == (out.th_pu_blend is None):
            raise ConfigError(f"{where}: give exactly one of th_pu / th_pu_blend")
        if (out.th_su is None) == (out.th_su_blend is None):
            raise ConfigError(f"{where}: give exactly one of th_su / th_su_blend")
        return out

    def resolve(self, v):
        """Absolute thresholds; blends are w*B + (1-w)*A and w*C + (1-w)*D."""
        from .synthesis import Thresholds

        th_pu = self.th_pu if self.th_pu is not None else self.th_pu_blend * v.b + (1 - self.th_pu_blend) * v.a
        th_su = self.th_su if self.th_su is not None else self.th_su_blend * v.c + (1 - self.th_su_blend) * v.d
        return Thresholds(th_pu, th_su)

    def to_dict(self):
        return _drop_none({f.name: getattr(self, f.name) for f in fields(self)})


@dataclass(frozen=True)
class SweepSection:
    rho_pu_start: float
    rho_pu_stop: float
    points: int

    @classmethod
    def parse(cls, d, where="sweep"):
        _take(d, {"rho_pu_start", "rho_pu_stop", "points"}, where, required=("rho_pu_start", "rho_pu_stop", "points"))
        out = cls(_num(d, "rho_pu_start", where), _num(d, "rho_pu_stop", where), _num(d, "points", where, kind=int))
        if out.points < 1:
            raise ConfigError(f"{where}.points must be >= 1")
        return out

    def values(self) -> list[float]:
        if self.points == 1:
            return [self.rho_pu_start]
        step = (self.rho_pu_stop - self.rho_pu_start) / (self.points - 1)
        return [self.rho_pu_start + k * step for k in range(self.points)]

    def to_dict(self):
        return {"rho_pu_start": self.rho_pu_start, "rho_pu_stop": self.rho_pu_stop, "points": self.points}


@dataclass(frozen=True)
class SimulationSection:
    seed: int = 0
    topology: str = "Decoupled"
    warmup_departures: int | None = None
    measured_departures: int = 100_000
    replications: int = 10
    max_events: int | None = None
    workers: int = 1
    stations: int = 1

    @classmethod
    def parse(cls, d, where="simulation"):
        names = [f.name for f in fields(cls)]
        _take(d, set(names), where)
        kw = {}
        for name in names:
            if name == "topology":
                if "topology" in d:
                    try:
                        kw["topology"] = Topology(d["topology"]).value
                    except ValueError:
                        raise ConfigError(f"{where}.topology: expected Decoupled or Coupled") from None
            elif name in d:
                kw[name] = _num(d, name, where, kind=int)
        return cls(**kw)

    def sim_config(self, seed: int | None = None) -> SimConfig:
        return SimConfig(seed=self.seed if seed is None else seed, topology=Topology(self.topology),
                         warmup_departures=self.warmup_departures,
                         measured_departures=self.measured_departures, replications=self.replications,
                         max_events=self.max_events, workers=self.workers)

    def to_dict(self):
        return _drop_none({f.name: getattr(self, f.name) for f in fields(self)})


@dataclass(frozen=True)
class RunConfig:
    n_servers: int
    pu: ClassSection
    su: ClassSection
    sensing: SensingConfig | None = None
    imperfections: ImperfectionConfig | None = None
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
    truncation_cap: int = DEFAULT_CAP
    i_max: int | None = None
    j_max: int | None = None
    thresholds: ThresholdSection | None = None
    target: tuple[float, float] | None = None
    sweep: SweepSection | None = None
    simulation: SimulationSection = field(default_factory=SimulationSection)
    out_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _take(d, {"model", "sensing", "imperfections", "truncation", "thresholds", "target",
                  "sweep", "simulation", "output"}, "config", required=("model",))
        m = _take(d["model"], {"n_servers", "pu", "su"}, "model", required=("n_servers", "pu", "su"))
        kw = dict(
            n_servers=_num(m, "n_servers", "model", kind=int),
            pu=ClassSection.parse(m["pu"], "model.pu"),
            su=ClassSection.parse(m["su"], "model.su"),
        )
        try:
            if d.get("sensing") is not None:
                s = _take(d["sensing"], {"delta_t", "t_period"}, "sensing", required=("delta_t", "t_period"))
                kw["sensing"] = SensingConfig(_num(s, "delta_t", "sensing"), _num(s, "t_period", "sensing"))
            if d.get("imperfections") is not None:
                s = _take(d["imperfections"], {"p_d", "per_pu", "per_su"}, "imperfections", required=("p_d",))
                kw["imperfections"] = ImperfectionConfig(_num(s, "p_d", "imperfections"),
                                                         _num(s, "per_pu", "imperfections", 0.0),
                                                         _num(s, "per_su", "imperfections", 0.0))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        if d.get("truncation") is not None:
            t = _take(d["truncation"], {"tail_tolerance", "cap", "i_max", "j_max"}, "truncation")
            kw["tail_tolerance"] = _num(t, "tail_tolerance", "truncation", DEFAULT_TAIL_TOLERANCE)
            kw["truncation_cap"] = _num(t, "cap", "truncation", DEFAULT_CAP, kind=int)
            kw["i_max"] = _num(t, "i_max", "truncation", kind=int)
            kw["j_max"] = _num(t, "j_max", "truncation", kind=int)
            if (kw["i_max"] is None) != (kw["j_max"] is None):
                raise ConfigError("truncation: give both i_max and j_max or neither")
        if d.get("thresholds") is not None:
            kw["thresholds"] = ThresholdSection.parse(d["thresholds"])
        if d.get("target") is not None:
            t = _take(d["target"], {"w_pu", "w_su"}, "target", required=("w_pu", "w_su"))
            kw["target"] = (_num(t, "w_pu", "target"), _num(t, "w_su", "target"))
        if d.get("sweep") is not None:
            kw["sweep"] = SweepSection.parse(d["sweep"])
        if d.get("simulation") is not None:
            kw["simulation"] = SimulationSection.parse(d["simulation"])
        if d.get("output") is not None:
            o = _take(d["output"], {"dir"}, "output")
            kw["out_dir"] = o.get("dir")
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        d = {"model": {"n_servers": self.n_servers, "pu": self.pu.to_dict(), "su": self.su.to_dict()}}
        if self.sensing is not None:
            d["sensing"] = {"delta_t": self.sensing.delta_t, "t_period": self.sensing.t_period}
        if self.imperfections is not None:
            c = self.imperfections
            d["imperfections"] = {"p_d": c.p_d, "per_pu": c.per_pu, "per_su": c.per_su}
        d["truncation"] = _drop_none({"tail_tolerance": self.tail_tolerance, "cap": self.truncation_cap,
                                      "i_max": self.i_max, "j_max": self.j_max})
        if self.thresholds is not None:
            d["thresholds"] = self.thresholds.to_dict()
        if self.target is not None:
            d["target"] = {"w_pu": self.target[0], "w_su": self.target[1]}
        if self.sweep is not None:
            d["sweep"] = self.sweep.to_dict()
        d["simulation"] = self.simulation.to_dict()
        if self.out_dir is not None:
            d["output"] = {"dir": self.out_dir}
        return d

    def base_model(self) -> NetworkModel:
        try:
            return NetworkModel(self.n_servers, self.pu.params(), self.su.params())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def refine(self, model: NetworkModel) -> NetworkModel:
        """Apply the optional sensing and imperfection transforms, in that order."""
        if self.sensing is not None:
            model = apply_sensing(model, self.sensing)
        if self.imperfections is not None:
            model = apply_imperfections(model, self.imperfections)
        return model

    def model(self) -> NetworkModel:
        return self.refine(self.base_model())

    def model_at_rho_pu(self, rho_pu: float) -> NetworkModel:
        """Base model with lambda_pu set so the (unrefined) PU utilization is ``rho_pu``."""
        base = self.base_model()
        pu = ClassParams(rho_pu * base.pu.mu, base.pu.mu)
        return self.refine(NetworkModel(base.n_servers, pu, base.su))

    def truncation(self) -> TruncationSpec | None:
        if self.i_max is None:
            return None
        return TruncationSpec(self.i_max, self.j_max, self.tail_tolerance)

    def coupled_spec(self, model: NetworkModel) -> CoupledSpec:
        if self.pu.per_channel_lambda is not None and self.sensing is None and self.imperfections is None:
            per = self.pu.per_channel_lambda
            if len(per) != model.n_servers:
                raise ConfigError("model.pu.per_channel_lambda must have n_servers entries")
            stations = self.simulation.stations
            return CoupledSpec(per, model.pu.mu, ((model.su.lam / stations, model.su.mu),) * stations)
        return CoupledSpec.from_model(model, self.simulation.stations)
