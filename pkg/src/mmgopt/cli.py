"""Command-line entry point: ``mmgopt <command> [flags]``.

Exit status is 0 on success, 1 for bad or inconsistent input and 2 when a
solve stopped on its iteration or time budget before converging.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import (RollingConfig, disruption_study, erl_table_csv, reports_summary,
                         reports_to_csv, resilience_study, run_rolling_horizon)
from .formulation import (MaintenanceSchedule, ModelTooLarge, ScheduleInfeasible,
                          build_deterministic_equivalent)
from .instances import demo_instances, desk_fleet, fleet_generator
from .lshaped import VARIANTS, LShapedConfig, run_lshaped
from .optimizer import write_lp
from .prognostics import (CostCurve, DegradationState, load_degradation_library,
                          maintenance_deadline, read_signals)
from .system import (GRID_CONNECTED, ISLANDED, LOCALLY_CONNECTED, GeneratorSpec, read_scenarios,
                     read_system, validate)

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2
COMMANDS = ("solve", "evaluate", "resilience", "validate", "dump-model")
MODES = (GRID_CONNECTED, LOCALLY_CONNECTED, ISLANDED)


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    system: str | None = None
    scenarios: str | None = None
    degradation: str | None = None
    signals: str | None = None
    demo: str | None = None
    variant: str = "week"
    eps_l: float = 1e-3
    eps_c: float = 1e-3
    workers: int = 1
    seed: int = 0
    out_dir: str = "."
    dump_model: str | None = None
    max_iterations: int = 200
    time_limit: float | None = None
    replications: int = 4
    span: int = 78
    plan_weeks: int = 52
    hours: int = 6
    schedules: dict = field(default_factory=dict)
    modes: tuple = (LOCALLY_CONNECTED, ISLANDED)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if not (self.eps_l > 0 and self.eps_c > 0):
            raise InputError("tolerances must be > 0")
        if self.workers < 1:
            raise InputError("--workers must be >= 1")
        if self.variant not in VARIANTS:
            raise InputError(f"--variant must be one of {VARIANTS}")

    def lshaped(self) -> LShapedConfig:
        return LShapedConfig(variant=self.variant, eps_l=self.eps_l, eps_c=self.eps_c,
                             workers=self.workers, max_iterations=self.max_iterations,
                             time_limit=self.time_limit)


# ---------------------------------------------------------------- input loading

def _violations_text(violations) -> str:
    return "\n".join(f"{v.code}: {v.detail}" for v in violations)


def _model_for(library: dict, der):
    for key in (der.id, der.tech, der.kind, "default"):
        if key in library:
            return library[key]
    raise InputError(f"no degradation model for DER {der.id} (tried id, tech, kind, 'default')")


def _curves(system, library: dict | None, signals: dict) -> tuple[dict, dict]:
    """Dynamic cost curves and deadlines per DER; zero curves over the horizon without a library."""
    T = system.T
    curves, deadlines = {}, {}
    for d in system.ders:
        if library is None:
            curves[d.id] = CostCurve(np.zeros(T), d.pm_cost, d.cm_cost)
            deadlines[d.id] = T
            continue
        st = DegradationState.from_history(_model_for(library, d), signals.get(d.id, ()), T,
                                           d.pm_cost, d.cm_cost)
        curves[d.id] = st.cost if st.cost is not None else CostCurve(np.zeros(T), d.pm_cost,
                                                                      d.cm_cost)
        deadlines[d.id] = maintenance_deadline(st.rld, d.reliability, T)
    return curves, deadlines


def load_problem(cfg: RunConfig):
    """``(system, scenarios, cost curves, deadlines)`` from a bundled demo or from files."""
    if cfg.demo:
        found = {i.name: i for i in demo_instances()}
        if cfg.demo not in found:
            raise InputError(f"unknown demo {cfg.demo!r}; choose from {sorted(found)}")
        inst = found[cfg.demo]
        return inst.system, inst.scenarios, inst.cost_curves, inst.deadlines
    if not (cfg.system and cfg.scenarios):
        raise InputError("need --system and --scenarios (or --demo)")
    try:
        system = read_system(cfg.system)
        scenarios = read_scenarios(cfg.scenarios)
        library = load_degradation_library(cfg.degradation) if cfg.degradation else None
        signals = read_signals(cfg.signals) if cfg.signals else {}
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"could not read inputs: {exc}") from exc
    problems = validate(system, scenarios)
    if problems:
        raise InputError(_violations_text(problems))
    curves, deadlines = _curves(system, library, signals)
    return system, scenarios, curves, deadlines


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(system, scenarios, curves, deadlines, path) -> None:
    try:
        handle = build_deterministic_equivalent(system, scenarios, curves, deadlines)
    except ModelTooLarge as exc:
        raise InputError(str(exc)) from exc
    write_lp(handle.lp, path)


# ---------------------------------------------------------------- commands

def cmd_solve(cfg: RunConfig) -> int:
    system, scenarios, curves, deadlines = load_problem(cfg)
    out = _out(cfg)
    if cfg.dump_model:
        _dump(system, scenarios, curves, deadlines, cfg.dump_model)
    try:
        res = run_lshaped(system, scenarios, curves, deadlines, config=cfg.lshaped())
    except ScheduleInfeasible as exc:
        raise InputError(str(exc)) from exc
    res.schedule.write(out / "schedule.csv")
    (out / "cut_log.jsonl").write_text(res.cut_log_jsonl())
    (out / "trace.jsonl").write_text("".join(json.dumps(r, sort_keys=True) + "\n"
                                             for r in res.state.trace))
    summary = {"status": res.status, "objective": res.objective,
               "first_stage_cost": res.first_stage_cost,
               "operations_cost": res.objective - res.first_stage_cost,
               "lower_bound": res.state.lb, "gap": res.state.gap,
               "iterations": res.state.iteration, "rounds": res.state.round,
               "optimality_cuts": len(res.cuts), "recovery_cuts": len(res.recovery_cuts),
               "variant": cfg.variant, "eps_l": cfg.eps_l, "eps_c": cfg.eps_c}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{res.status}: objective {res.objective:.6f} after {res.state.iteration} iterations, "
          f"{res.state.round} rounds")
    return EXIT_OK if res.status == "converged" else EXIT_BUDGET


def _fleet(cfg: RunConfig):
    if cfg.system:
        try:
            system = read_system(cfg.system)
            library = load_degradation_library(cfg.degradation) if cfg.degradation else None
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"could not read inputs: {exc}") from exc
        if library is None:
            raise InputError("evaluate with --system also needs --degradation")
        problems = validate(system)
        if problems:
            raise InputError(_violations_text(problems))
        models = {d.id: _model_for(library, d) for d in system.ders}
        return system, models, GeneratorSpec.from_system(system, 2)
    system, models = desk_fleet(H=cfg.hours)
    if cfg.degradation:
        library = load_degradation_library(cfg.degradation)
        models = {d.id: _model_for(library, d) for d in system.ders}
    return system, models, fleet_generator(system, 2)


def _rolling(cfg: RunConfig):
    system, models, gen = _fleet(cfg)
    rc = RollingConfig(T=cfg.plan_weeks, span=cfg.span, freeze=min(8, cfg.plan_weeks),
                       seeds=tuple(range(cfg.seed, cfg.seed + cfg.replications)),
                       lshaped=cfg.lshaped())
    return system, run_rolling_horizon(system, models, rc, gen)


def cmd_evaluate(cfg: RunConfig) -> int:
    _, res = _rolling(cfg)
    out = _out(cfg)
    (out / "metrics.csv").write_text(reports_to_csv(res.reports))
    (out / "outcomes.jsonl").write_text(res.outcome_log())
    print(reports_summary(res.reports), end="")
    return EXIT_OK


def cmd_resilience(cfg: RunConfig) -> int:
    out = _out(cfg)
    if cfg.schedules:
        system, scenarios, _, _ = load_problem(cfg)
        table = {}
        for method, path in cfg.schedules.items():
            try:
                sched = MaintenanceSchedule.read(path)
            except (OSError, KeyError, ValueError) as exc:
                raise InputError(f"could not read schedule {path}: {exc}") from exc
            for mode in cfg.modes:
                table[(mode, method)] = disruption_study(system, scenarios, sched, mode).erl
    elif cfg.system or cfg.demo:
        raise InputError("resilience on given inputs needs at least one --schedule METHOD=PATH")
    else:
        system, res = _rolling(cfg)
        table = resilience_study(system, res, cfg.modes)
    (out / "erl.csv").write_text(erl_table_csv(table))
    print(erl_table_csv(table), end="")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    if not cfg.system:
        raise InputError("need --system")
    try:
        system = read_system(cfg.system)
        scenarios = read_scenarios(cfg.scenarios) if cfg.scenarios else None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"could not read inputs: {exc}") from exc
    problems = validate(system, scenarios)
    if problems:
        print(_violations_text(problems))
        return EXIT_INPUT
    print("ok")
    return EXIT_OK


def cmd_dump_model(cfg: RunConfig) -> int:
    system, scenarios, curves, deadlines = load_problem(cfg)
    path = cfg.dump_model or str(_out(cfg) / "model.lp")
    _dump(system, scenarios, curves, deadlines, path)
    print(path)
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "evaluate": cmd_evaluate, "resilience": cmd_resilience,
            "validate": cmd_validate, "dump-model": cmd_dump_model}


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _schedule_arg(text: str) -> tuple[str, str]:
    method, sep, path = text.partition("=")
    if not sep or not method or not path:
        raise argparse.ArgumentTypeError("expected METHOD=PATH")
    return method, path


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mmgopt", description="Sensor-driven maintenance and operations planning "
                                           "for multi-microgrid systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--system", help="system JSON file")
        sp.add_argument("--scenarios", help="scenario CSV file")
        sp.add_argument("--degradation", help="degradation model library (JSON)")
        sp.add_argument("--signals", help="sensor observations CSV (der_id,week,signal)")
        sp.add_argument("--demo", help="use a bundled demo instance instead of files")
        sp.add_argument("--variant", choices=VARIANTS, default="week")
        sp.add_argument("--eps-l", type=float, default=1e-3, help="relative outer-loop tolerance")
        sp.add_argument("--eps-c", type=float, default=1e-3, help="relative recovery tolerance")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out-dir", default=".")
        sp.add_argument("--max-iterations", type=int, default=200)
        sp.add_argument("--time-limit", type=float, default=None, help="seconds per solve")

    s = sub.add_parser("solve", help="plan maintenance and operations")
    common(s)
    s.add_argument("--dump-model", help="also write the deterministic equivalent as LP text")

    for name, text in (("evaluate", "rolling-horizon comparison with the periodic benchmark"),
                       ("resilience", "expected resilience loss under disruptions")):
        e = sub.add_parser(name, help=text)
        common(e)
        e.add_argument("--replications", type=int, default=4)
        e.add_argument("--span", type=int, default=78, help="simulated weeks")
        e.add_argument("--plan-weeks", type=int, default=52)
        e.add_argument("--hours", type=int, default=6, help="hours per week in the bundled fleet")
        if name == "resilience":
            e.add_argument("--schedule", type=_schedule_arg, action="append", default=[],
                           metavar="METHOD=PATH", help="schedule CSV to study (repeatable)")
            e.add_argument("--mode", choices=MODES, action="append", default=None)

    v = sub.add_parser("validate", help="check system and scenario files")
    v.add_argument("--system")
    v.add_argument("--scenarios")

    d = sub.add_parser("dump-model", help="write the deterministic equivalent as LP text")
    common(d)
    d.add_argument("--dump-model", help="output path (default OUT_DIR/model.lp)")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    raw = dict(vars(ns))
    schedules = dict(raw.pop("schedule", None) or [])
    modes = raw.pop("mode", None)
    kw = {k: v for k, v in raw.items() if k in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**kw, schedules=schedules)
    if modes:
        cfg.modes = tuple(modes)
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return HANDLERS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


__all__ = ["COMMANDS", "EXIT_BUDGET", "EXIT_INPUT", "EXIT_OK", "InputError", "RunConfig",
           "build_parser", "load_problem", "main"]

if __name__ == "__main__":
    sys.exit(main())
