"""Command-line entry point.

Subcommands: ``solve`` (one deterministic/stochastic scheduling horizon),
``rolling`` (hourly rolling plan), ``experiment`` (the study sweeps),
``fit`` (regression surrogates), ``boundary`` (stability-boundary tables),
``convert-case`` (MATPOWER .m to JSON), ``make-forecast`` (synthetic
series). Exit codes: 0 success, 2 infeasible, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments, scenario, timeseries, vstab, zfit
from .caseio import CaseFormatError, convert_matpower, load_builtin, load_case
from .conic import BnBConfig
from .formulation import InitialConditions, UcFormulation, UcParams
from .netmodel import NetworkModel

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INPUT = 3


def _load_net(case_arg: str) -> NetworkModel:
    p = Path(case_arg)
    if p.exists():
        return load_case(p)
    try:
        return load_builtin(case_arg)
    except FileNotFoundError:
        raise CaseFormatError(f"case {case_arg!r}: no such file or builtin")


def _load_params(args) -> UcParams:
    params = UcParams.from_json(args.config) if args.config else UcParams()
    over = {}
    if getattr(args, "case_flag", None):
        over["case_flag"] = args.case_flag
    if getattr(args, "margin", None) is not None:
        over["margin"] = args.margin
    if getattr(args, "nv", None) is not None:
        over["n_v"] = args.nv
    if getattr(args, "gap", None) is not None:
        over["solver"] = replace(params.solver, rel_gap=args.gap)
    return replace(params, **over) if over else params


def _forecast(args, net: NetworkModel):
    if args.forecast:
        return timeseries.read_forecast_csv(args.forecast, net)
    return timeseries.synth_forecast(net, hours=args.horizon + 192, seed=args.seed)


def _models_for(net, params, path=None):
    if path:
        return zfit.load_models(path)
    if params.case_flag == "base" and params.fixed_power_factor is None:
        return None
    return zfit.fit_all(zfit.enumerate_dataset(net, n_v=params.n_v))


def cmd_solve(args) -> int:
    net = _load_net(args.case)
    params = _load_params(args)
    fc = _forecast(args, net)
    quantiles = [float(q) for q in args.quantiles.split(",")] if args.quantiles else [0.5]
    tree = scenario.build_tree(fc.window(args.start, args.horizon), quantiles,
                               args.horizon,
                               branch_times=(1, 2, 3) if len(quantiles) > 1 else ())
    models = _models_for(net, params, args.models)
    initial = (InitialConditions.warm(net) if args.initial == "warm"
               else InitialConditions.cold(net))
    form = UcFormulation(net, tree, params, models=models, initial=initial)
    if args.dump_program:
        form.build().dump_json(args.dump_program)
    res = form.solve()
    if res.x is None:
        print(f"solve failed: {res.status}", file=sys.stderr)
        return EXIT_INFEASIBLE
    sched = form.extract_schedule(res)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenario.write_schedule_csv(sched, net, out / "schedule.csv")
    summary = scenario.evaluate_schedule(sched, net, params.margin)
    scenario.write_violation_json(summary, out / "violations.json")
    recomputed = sched.recompute_objective(net, params.shed_cost)
    (out / "solve.json").write_text(json.dumps({
        "status": res.status, "objective": res.objective,
        "objective_recomputed": recomputed, "best_bound": res.best_bound,
        "mip_gap": res.mip_gap, "bnb_nodes": res.node_count,
        "violation_rate": summary.rate, "xi": summary.xi_mean,
        "case_flag": params.case_flag}, indent=1))
    print(f"{res.status}: objective {res.objective:.2f} "
          f"(gap {res.mip_gap:.2%}, {res.node_count} nodes), "
          f"violation rate {summary.rate:.2%}")
    return EXIT_OK


def cmd_rolling(args) -> int:
    net = _load_net(args.case)
    params = _load_params(args)
    fc = _forecast(args, net)
    quantiles = [float(q) for q in args.quantiles.split(",")] if args.quantiles else [0.5]
    models = _models_for(net, params, args.models)
    result = scenario.rolling_run(net, fc, params, steps=args.steps,
                                  horizon=args.horizon,
                                  error_quantiles=quantiles, seed=args.seed,
                                  models=models)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    applied = result.applied_schedule(net)
    scenario.write_schedule_csv(applied, net, out / "applied.csv")
    summary = scenario.evaluate_schedule(applied, net, params.margin)
    scenario.write_violation_json(summary, out / "violations.json")
    (out / "rolling.json").write_text(json.dumps({
        "steps": args.steps, "realized_cost": result.realized_cost,
        "violation_rate": summary.rate,
        "fallbacks": [s.step for s in result.steps if s.fallback]}, indent=1))
    print(f"rolling: {args.steps} steps, realized cost {result.realized_cost:.2f}, "
          f"violation rate {summary.rate:.2%}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    net = _load_net(args.case)
    params = _load_params(args)
    fc = _forecast(args, net)
    grid = tuple(float(v) for v in args.grid.split(","))
    cases = tuple(args.cases.split(",")) if args.cases else ("base", "I", "II")
    spec = experiments.ExperimentSpec(
        kind=args.experiment, net=net, forecast=fc, params=params,
        out_dir=Path(args.out), grid=grid, case_flags=cases,
        horizon=args.horizon, start_hour=args.start, seed=args.seed)
    points = experiments.run(spec)
    print(f"{args.experiment}: {len(points)} points -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    net = _load_net(args.case)
    ds = zfit.enumerate_dataset(net, n_v=args.nv or 4)
    models = zfit.fit_all(ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    zfit.save_models(models, out / "models.json")
    zfit.dump_dataset_csv(ds, out / "dataset.csv")
    for (c, d), m in sorted(models.items()):
        print(f"z[{c}|{d}]: r2={m.r2:.4f} rmse={m.rmse:.5f} "
              f"max_abs_err={m.max_abs_err:.5f}{' (ridge)' if m.ridge else ''}")
    return EXIT_OK


def cmd_boundary(args) -> int:
    scrs = [float(s) for s in args.scr.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    q_range = (args.q_min, args.q_max)
    vstab.write_boundary_csv(out / "boundaries.csv", scrs, q_range, args.points)
    vstab.write_boundary_json(out / "boundaries.json", scrs, q_range, args.points)
    print(f"boundary curves for SCR {scrs} -> {out}")
    return EXIT_OK


def cmd_convert_case(args) -> int:
    case = convert_matpower(Path(args.input).read_text(),
                            name=Path(args.input).stem)
    Path(args.out).write_text(json.dumps(case, indent=1))
    net = load_case(case)  # validates the conversion
    print(f"converted {args.input}: {net.n_bus} buses, {len(net.lines)} branches, "
          f"{len(net.gens)} generators -> {args.out}")
    return EXIT_OK


def cmd_make_forecast(args) -> int:
    net = _load_net(args.case)
    fc = timeseries.synth_forecast(net, hours=args.hours, seed=args.seed)
    timeseries.write_forecast_csv(fc, net, args.out)
    print(f"synthetic {args.hours}-hour forecast -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsuc",
                                 description="voltage-stability-constrained "
                                             "stochastic unit commitment")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, forecast=True):
        p.add_argument("--case", required=True,
                       help="case JSON path or builtin name (case30, case6)")
        if forecast:
            p.add_argument("--forecast", help="forecast CSV (default: synthetic)")
        p.add_argument("--config", help="UcParams JSON overrides")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--case-flag", choices=["base", "I", "II", "III"],
                       dest="case_flag")
        p.add_argument("--margin", type=float)
        p.add_argument("--nv", type=int)
        p.add_argument("--gap", type=float, help="relative MIP gap target")
        p.add_argument("--horizon", type=int, default=24)
        p.add_argument("--start", type=int, default=0,
                       help="start hour within the forecast")
        p.add_argument("--models", help="pre-fitted regression models JSON")
        p.add_argument("--initial", choices=["cold", "warm"], default="warm")

    ps = sub.add_parser("solve", help="solve one scheduling horizon")
    common(ps)
    ps.add_argument("--quantiles", help="comma list, e.g. 0.25,0.5,0.75")
    ps.add_argument("--dump-program", help="write the assembled MISOCP as JSON")
    ps.set_defaults(func=cmd_solve)

    pr = sub.add_parser("rolling", help="rolling-horizon run")
    common(pr)
    pr.add_argument("--steps", type=int, required=True)
    pr.add_argument("--quantiles")
    pr.set_defaults(func=cmd_rolling)

    pe = sub.add_parser("experiment", help="run a study sweep")
    common(pe)
    pe.add_argument("--experiment", required=True,
                    choices=list(experiments.EXPERIMENT_KINDS))
    pe.add_argument("--grid", required=True, help="comma list of sweep values")
    pe.add_argument("--cases", help="comma list of case flags")
    pe.set_defaults(func=cmd_experiment)

    pf = sub.add_parser("fit", help="fit impedance regression surrogates")
    pf.add_argument("--case", required=True)
    pf.add_argument("--nv", type=int, default=4)
    pf.add_argument("--out", default="out")
    pf.set_defaults(func=cmd_fit)

    pb = sub.add_parser("boundary", help="stability boundary tables")
    pb.add_argument("--scr", default="1.5,2,3,5", help="comma list of SCR values")
    pb.add_argument("--q-min", type=float, default=0.0)
    pb.add_argument("--q-max", type=float, default=2.0)
    pb.add_argument("--points", type=int, default=81)
    pb.add_argument("--out", default="out")
    pb.set_defaults(func=cmd_boundary)

    pc = sub.add_parser("convert-case", help="MATPOWER .m to case JSON")
    pc.add_argument("--input", required=True)
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_convert_case)

    pm = sub.add_parser("make-forecast", help="write a synthetic forecast CSV")
    pm.add_argument("--case", required=True)
    pm.add_argument("--hours", type=int, default=192)
    pm.add_argument("--seed", type=int, default=1)
    pm.add_argument("--out", required=True)
    pm.set_defaults(func=cmd_make_forecast)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (CaseFormatError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
