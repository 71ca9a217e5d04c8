"""Command-line front end.

Usage::

    crn-queues analyze    --config run.json --out results/
    crn-queues sweep      --config run.json --out results/ [--no-sim]
    crn-queues synthesize --config run.json --out results/
    crn-queues optimize   --config run.json --out results/
    crn-queues simulate   --config run.json --out results/ [--seed N] [--emit-event-log]

Flags override the config file (``--out`` over ``output.dir``, ``--seed`` over
``simulation.seed``). Exit codes: 0 success or answered question, 1 usage or
parse error, 2 unstable model, 3 truncation cap exceeded, 4 simulation event
budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from functools import partial
from pathlib import Path

from . import conservation, ctmc, optimize, sim, synthesis
from .config import ConfigError, RunConfig
from .errors import (DegenerateRegionError, SimBudgetError, TruncationCapError, UndefinedDelayError,
                     UnstableModelError)
from .ioutil import atomic_write_text, write_csv
from .mmn import mmn_total_delay

EXIT_OK, EXIT_USAGE, EXIT_UNSTABLE, EXIT_TRUNCATION, EXIT_BUDGET = 0, 1, 2, 3, 4

SWEEP_HEADER = ["rho_pu", "d1_law", "d2_law", "d1_ctmc", "d2_ctmc", "law_rel_err",
                "d1_sim", "d2_sim", "d1_sim_ci", "d2_sim_ci", "status", "error"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rel(a, b):
    if a is None or b is None or b == 0:
        return None
    return abs(a - b) / abs(b)


def _dump(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _report(cfg: RunConfig, command: str, body: dict) -> dict:
    return {"command": command, "config": cfg.to_dict(),
            "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"), **body}


def _solve(cfg: RunConfig, model):
    return ctmc.solve(model, tail_tolerance=cfg.tail_tolerance, cap=cfg.truncation_cap,
                      trunc=cfg.truncation())


def analytic_block(cfg: RunConfig, model, pmf=None) -> dict:
    """Delays from the CTMC, the closed-form law and M/M/N, with pairwise errors."""
    if pmf is None:
        pmf = _solve(cfg, model)
    d = ctmc.delays_from_pmf(pmf)
    d1_mmn = mmn_total_delay(model.pu, model.n_servers) if model.pu.lam > 0 else None
    d2_law = conservation.secondary_delay_from_law(model) if model.su.lam > 0 else None
    law = conservation.conservation_sum(model)
    ctmc_sum = (model.pu.rho * (d.d_pu or 0.0)) + (model.su.rho * (d.d_su or 0.0))
    return {
        "ctmc": {"d_pu": d.d_pu, "d_su": d.d_su, "weighted_sum": ctmc_sum},
        "law": {"d_pu": d1_mmn, "d_su": d2_law, "weighted_sum": law},
        "mmn": {"d_pu": d1_mmn},
        "relative_errors": {
            "weighted_sum_law_vs_ctmc": _rel(ctmc_sum, law),
            "d_su_law_vs_ctmc": _rel(d2_law, d.d_su),
            "d_pu_mmn_vs_ctmc": _rel(d1_mmn, d.d_pu),
        },
        "truncation": pmf.truncation.to_dict(),
        "achieved_tail_mass": pmf.achieved_tail_mass,
        "residual": pmf.residual,
    }


def cmd_analyze(cfg: RunConfig, out: Path, args) -> int:
    model = cfg.model()
    model.require_stable()
    pmf = _solve(cfg, model)
    pu, su = pmf.marginals()
    pmf.to_csv(out / "joint_pmf.csv")
    write_csv(out / "pu_marginal.csv", ["i", "p"], enumerate(pu.tolist()))
    write_csv(out / "su_marginal.csv", ["j", "p"], enumerate(su.tolist()))
    body = {"model": model.to_dict(), "delays": analytic_block(cfg, model, pmf),
            "su_quantile_999": ctmc.quantile_index(su, 0.999),
            "pu_quantile_999": ctmc.quantile_index(pu, 0.999)}
    _dump(out / "analyze.json", _report(cfg, "analyze", body))
    print(f"wrote {out / 'analyze.json'}")
    return EXIT_OK


def _sweep_point(cfg: RunConfig, with_sim: bool, seed: int, rho_pu: float) -> list:
    row = dict.fromkeys(SWEEP_HEADER)
    row["rho_pu"] = rho_pu
    try:
        model = cfg.model_at_rho_pu(rho_pu)
        model.require_stable()
        block = analytic_block(cfg, model)
        row.update(d1_law=block["law"]["d_pu"], d2_law=block["law"]["d_su"],
                   d1_ctmc=block["ctmc"]["d_pu"], d2_ctmc=block["ctmc"]["d_su"],
                   law_rel_err=block["relative_errors"]["weighted_sum_law_vs_ctmc"])
        if with_sim:
            sim_cfg = cfg.simulation.sim_config(seed)
            est = sim.run_decoupled(model, sim_cfg)
            row.update(d1_sim=est.d_pu, d2_sim=est.d_su,
                       d1_sim_ci=est.ci_halfwidth.get("d_pu"), d2_sim_ci=est.ci_halfwidth.get("d_su"))
        row["status"] = "ok"
    except UnstableModelError as exc:
        row.update(status="unstable", error=str(exc))
    except TruncationCapError as exc:
        row.update(status="truncation_cap", error=str(exc))
    except SimBudgetError as exc:
        row.update(status="sim_budget", error=str(exc))
    except (ValueError, UndefinedDelayError) as exc:
        row.update(status="error", error=str(exc))
    return [row[k] for k in SWEEP_HEADER]


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a 'sweep' section")
    seed = args.seed if args.seed is not None else cfg.simulation.seed
    work = partial(_sweep_point, cfg, not args.no_sim, seed)
    values = cfg.sweep.values()
    workers = cfg.simulation.workers
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, values))
    else:
        rows = [work(v) for v in values]
    write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    status = [r[SWEEP_HEADER.index("status")] for r in rows]
    print(f"wrote {out / 'sweep.csv'} ({status.count('ok')}/{len(rows)} points ok)")
    if all(s == "ok" for s in status):
        return EXIT_OK
    for code, name in ((EXIT_UNSTABLE, "unstable"), (EXIT_TRUNCATION, "truncation_cap"), (EXIT_BUDGET, "sim_budget")):
        if name in status:
            return code
    return EXIT_USAGE


def _synthesis_body(cfg: RunConfig, model) -> tuple[dict, object, object]:
    v = conservation.region_vertices(model)
    body = {"model": model.to_dict(), "vertices": v.to_dict()}
    th = cfg.thresholds.resolve(v) if cfg.thresholds is not None else None
    interval = None
    if th is not None:
        interval = synthesis.feasible_interval(v, th)
        body["thresholds"] = {"th_pu": th.th_pu, "th_su": th.th_su}
        body["interval"] = interval.to_dict()
        body["feasible"] = interval.feasible
        try:
            fp = synthesis.frontier_point(v, th)
            body["frontier"] = fp.to_dict()
        except ValueError as exc:
            fp = None
            body["frontier"] = {"error": str(exc)}
        if not interval.feasible:
            body["suggestion"] = "relax th_pu"
    if cfg.target is not None:
        body["target"] = synthesis.unique_alpha_for_target(v, cfg.target).to_dict()
    return body, v, (th, interval)


def cmd_synthesize(cfg: RunConfig, out: Path, args) -> int:
    model = cfg.model()
    model.require_stable()
    body, v, (th, _) = _synthesis_body(cfg, model)
    synthesis.export_region_csv(out / "region.csv", v, th)
    _dump(out / "synthesize.json", _report(cfg, "synthesize", body))
    print(f"wrote {out / 'synthesize.json'}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, out: Path, args) -> int:
    if cfg.thresholds is None:
        raise ConfigError("optimize command needs a 'thresholds' section")
    model = cfg.model()
    model.require_stable()
    body, v, (th, interval) = _synthesis_body(cfg, model)
    coeffs = optimize.coefficients(v)
    body["coefficients"] = coeffs.to_dict()
    body["beta"] = optimize.unconstrained_minimizer(coeffs)
    if interval.feasible:
        mix = optimize.optimal_alpha(v, interval)
        body["optimal"] = mix.to_dict()
        optimize.export_cost_curve_csv(out / "cost_curve.csv", v, interval.a1, interval.a2)
    else:
        body["optimal"] = None
        body["skipped"] = "thresholds infeasible: no admissible mix; relax th_pu or th_su"
    _dump(out / "optimize.json", _report(cfg, "optimize", body))
    print(f"wrote {out / 'optimize.json'}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path, args) -> int:
    model = cfg.model()
    model.require_stable()
    sim_cfg = cfg.simulation.sim_config(args.seed)
    log = [] if args.emit_event_log else None
    body = {"model": model.to_dict()}
    if sim_cfg.topology is sim.Topology.COUPLED:
        spec = cfg.coupled_spec(model)
        est = sim.run_coupled(spec, sim_cfg, event_log=log)
        paired = sim.run_decoupled(model, sim_cfg)
        body["coupled_spec"] = spec.to_dict()
        body["comparison"] = {
            "decoupled": {"d_pu": paired.d_pu, "d_su": paired.d_su},
            "relative_difference": {"d_pu": _rel(est.d_pu, paired.d_pu), "d_su": _rel(est.d_su, paired.d_su)},
        }
    else:
        est = sim.run_decoupled(model, sim_cfg, event_log=log)
        if model.pu.lam > 0 and model.su.lam > 0:
            block = analytic_block(cfg, model)
            body["comparison"] = {
                "ctmc": block["ctmc"], "law": block["law"],
                "z_scores": {
                    "d_pu_vs_ctmc": _z(est, "d_pu", block["ctmc"]["d_pu"]),
                    "d_su_vs_ctmc": _z(est, "d_su", block["ctmc"]["d_su"]),
                    "d_su_vs_law": _z(est, "d_su", block["law"]["d_su"]),
                },
            }
    body["estimate"] = est.to_dict()
    body["little_law"] = est.little_law_check() if est.replications >= 2 else None
    if log is not None:
        sim.write_event_log(out / "events.csv", log)
    _dump(out / "simulate.json", _report(cfg, "simulate", body))
    print(f"wrote {out / 'simulate.json'}")
    return EXIT_OK


def _z(est, name, ref):
    ci = est.ci_halfwidth.get(name)
    val = getattr(est, name)
    if ci is None or val is None or ref is None or not ci > 0 or math.isnan(ci):
        return None
    return (val - ref) / ci


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "synthesize": cmd_synthesize,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="crn-queues", description="Two-class multi-channel CRN priority-queue analysis.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="Path to the JSON run configuration.")
    ap.add_argument("--out", default=None, help="Output directory (overrides output.dir).")
    ap.add_argument("--seed", type=int, default=None, help="Simulation master seed (unsigned 64-bit).")
    ap.add_argument("--no-sim", action="store_true", help="Skip simulation columns in sweep.")
    ap.add_argument("--emit-event-log", action="store_true", help="Write events.csv for replication 0.")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        out = Path(args.out or cfg.out_dir or ".")
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnstableModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except TruncationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except SimBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DegenerateRegionError, UndefinedDelayError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
