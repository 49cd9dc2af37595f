"""Experiment harness: the capacity/strength/interaction/power-factor/SI
sweeps, each emitting a CSV table plus a JSON file with plot-ready data.

All sweeps run deterministic horizons point by point; CSV bodies contain
only deterministic fields so a re-run with the same seed and config is
byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import scenario, zfit
from .formulation import InitialConditions, UcFormulation, UcParams
from .netmodel import SG, CostTerms, GenUnit, Line, NetworkModel
from .timeseries import ForecastSeries

EXPERIMENT_KINDS = ("wind_sweep", "strength_sweep", "interaction_sweep",
                    "power_factor_sweep", "si_interaction")


@dataclass
class ExperimentSpec:
    kind: str
    net: NetworkModel
    forecast: ForecastSeries
    params: UcParams
    out_dir: Path
    grid: tuple[float, ...]  # sweep points (units depend on the kind)
    case_flags: tuple[str, ...] = ("base", "I", "II")
    horizon: int = 24
    start_hour: int = 0
    seed: int = 0
    warm_start: bool = True  # start from an all-on fleet state
    sc_bus: int = 22  # synchronous-condenser bus for strength_sweep
    coupling_lines: tuple[tuple[int, int], ...] = ()  # for interaction_sweep

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment {self.kind!r}")
        if not self.grid or list(self.grid) != sorted(self.grid):
            raise ValueError("sweep grid must be nonempty and sorted")
        self.out_dir = Path(self.out_dir)


@dataclass
class SweepPoint:
    value: float
    case: str
    objective: float
    cost_per_hour: float
    violation_rate: float
    xi: float
    wind_dispatched: float  # p.u.h over the horizon
    mip_gap: float
    bnb_nodes: int
    status: str
    extra: dict = field(default_factory=dict)


def _scale_wind(fc: ForecastSeries, factors: dict[str, float]) -> ForecastSeries:
    return ForecastSeries(fc.hours, fc.demand_p, fc.demand_q,
                          {u: v * factors.get(u, 1.0) for u, v in fc.wind.items()},
                          dict(fc.alpha))


def _scale_line(net: NetworkModel, a: int, b: int, factor: float) -> NetworkModel:
    """Scale the impedance of every line between buses a and b."""
    lines = []
    hit = False
    for ln in net.lines:
        if {ln.from_bus, ln.to_bus} == {a, b}:
            lines.append(Line.from_impedance(ln.from_bus, ln.to_bus,
                                             ln.r_series * factor,
                                             ln.x_series * factor,
                                             ln.b_charging, ln.rate))
            hit = True
        else:
            lines.append(ln)
    if not hit:
        raise ValueError(f"no line between buses {a} and {b}")
    return NetworkModel(net.buses, lines, net.gens, net.base_mva, net.name)


def _with_condenser(net: NetworkModel, bus: int, mva: float,
                    x_own_base: float = 0.2, inertia: float = 2.0) -> NetworkModel:
    """Add a synchronous condenser: an always-on zero-cost SG with zero
    active capability that contributes reactance and reactive range."""
    if mva <= 0:
        return net
    cap = mva / net.base_mva
    sc = GenUnit(id=f"SC{bus}", kind=SG, bus=bus, capacity=0.0,
                 x_g=x_own_base / cap, p_min=0.0,
                 q_min=-cap, q_max=cap, inertia=inertia,
                 cost=CostTerms(), min_up=1, min_down=1,
                 ramp_up=float("inf"), ramp_down=float("inf"), pfr_max=0.0)
    return NetworkModel(net.buses, net.lines, list(net.gens) + [sc],
                        net.base_mva, net.name)


def _solve_point(net: NetworkModel, fc: ForecastSeries, params: UcParams,
                 horizon: int, start: int, models, warm: bool) -> tuple:
    tree = scenario.deterministic_tree(fc.window(start, horizon), horizon)
    init = InitialConditions.warm(net) if warm else InitialConditions.cold(net)
    form = UcFormulation(net, tree, params, models=models, initial=init)
    res = form.solve()
    if res.x is None:
        raise RuntimeError(f"{params.case_flag} point unsolvable: {res.status}")
    sched = form.extract_schedule(res)
    summary = scenario.evaluate_schedule(sched, net, params.margin)
    return sched, res, summary


def _point_record(value, case, sched, res, summary, net, horizon) -> SweepPoint:
    wind = sum(sum(sched.p_ibg[n.id].values()) for n in sched.tree.nodes)
    return SweepPoint(value=value, case=case, objective=res.objective,
                      cost_per_hour=res.objective / horizon,
                      violation_rate=summary.rate, xi=summary.xi_mean,
                      wind_dispatched=wind, mip_gap=res.mip_gap,
                      bnb_nodes=res.node_count, status=res.status)


def _fit_models(net: NetworkModel, n_v: int):
    return zfit.fit_all(zfit.enumerate_dataset(net, n_v=n_v))


def run(spec: ExperimentSpec) -> list[SweepPoint]:
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    points = RUNNERS[spec.kind](spec)
    _write_outputs(spec, points)
    return points


def _run_wind_sweep(spec: ExperimentSpec, si_variants=False) -> list[SweepPoint]:
    """Total installed IBG capacity sweep (grid in MW). For si_variants the
    base case is solved with and without synthetic inertia."""
    net0 = spec.net
    base_total = sum(g.capacity for g in net0.ibgs)
    models = None
    points = []
    for cap_mw in spec.grid:
        cap = cap_mw / net0.base_mva
        net = net0.scale_ibg_capacity(cap)
        ratio = cap / base_total
        fc = _scale_wind(spec.forecast, {g.id: ratio for g in net.ibgs})
        if models is None:  # Y is capacity-independent; fit once
            models = _fit_models(net, spec.params.n_v)
        if si_variants:
            for si in (True, False):
                params = replace(spec.params, case_flag="base", si_enabled=si)
                sched, res, summ = _solve_point(net, fc, params, spec.horizon,
                                                spec.start_hour, None, spec.warm_start)
                pt = _point_record(cap_mw, f"base+si={'on' if si else 'off'}",
                                   sched, res, summ, net, spec.horizon)
                points.append(pt)
        else:
            for flag in spec.case_flags:
                params = replace(spec.params, case_flag=flag)
                sched, res, summ = _solve_point(net, fc, params, spec.horizon,
                                                spec.start_hour,
                                                models if flag != "base" else None,
                                                spec.warm_start)
                points.append(_point_record(cap_mw, flag, sched, res, summ,
                                            net, spec.horizon))
    return points


def _run_si_interaction(spec: ExperimentSpec) -> list[SweepPoint]:
    return _run_wind_sweep(spec, si_variants=True)


def _run_strength_sweep(spec: ExperimentSpec) -> list[SweepPoint]:
    """Synchronous-condenser capacity sweep (grid in MVA) at spec.sc_bus."""
    points = []
    for mva in spec.grid:
        net = _with_condenser(spec.net, spec.sc_bus, mva)
        models = _fit_models(net, spec.params.n_v)
        strength = _avg_strength(net)
        for flag in spec.case_flags:
            params = replace(spec.params, case_flag=flag)
            sched, res, summ = _solve_point(net, spec.forecast, params,
                                            spec.horizon, spec.start_hour,
                                            models if flag != "base" else None,
                                            spec.warm_start)
            pt = _point_record(mva, flag, sched, res, summ, net, spec.horizon)
            pt.extra["avg_strength"] = strength
            points.append(pt)
    return points


def _avg_strength(net: NetworkModel) -> float:
    view = net.impedance_view(net.all_on())
    return float(np.mean([view.gamma_denom(c) for c in net.ibg_ids]))


def _run_interaction_sweep(spec: ExperimentSpec) -> list[SweepPoint]:
    """Electrical-distance sweep: scales the impedance of the coupling
    line(s) between IBG buses by each grid factor."""
    lines = spec.coupling_lines
    if not lines:
        ibg_buses = sorted({g.bus for g in spec.net.ibgs})
        if len(ibg_buses) < 2:
            raise ValueError("interaction sweep needs at least two IBG buses")
        lines = ((ibg_buses[0], ibg_buses[1]),)
    points = []
    for factor in spec.grid:
        net = spec.net
        for (a, b) in lines:
            net = _scale_line(net, a, b, factor)
        models = _fit_models(net, spec.params.n_v)
        for flag in spec.case_flags:
            params = replace(spec.params, case_flag=flag)
            sched, res, summ = _solve_point(net, spec.forecast, params,
                                            spec.horizon, spec.start_hour,
                                            models if flag != "base" else None,
                                            spec.warm_start)
            pt = _point_record(factor, flag, sched, res, summ, net, spec.horizon)
            pt.extra["xi_all_on"] = _xi_all_on(net)
            points.append(pt)
    return points


def _xi_all_on(net: NetworkModel) -> float:
    view = net.impedance_view(net.all_on())
    r = [view.zmag_ratio(c, c2) for c in net.ibg_ids
         for c2 in net.ibg_ids if c2 != c]
    return float(np.mean(r))


def _run_power_factor_sweep(spec: ExperimentSpec) -> list[SweepPoint]:
    """Fixed-power-factor grid against the optimized-Q reference (Case II)."""
    models = _fit_models(spec.net, spec.params.n_v)
    points = []
    params_ref = replace(spec.params, case_flag="II", fixed_power_factor=None)
    sched, res, summ = _solve_point(spec.net, spec.forecast, params_ref,
                                    spec.horizon, spec.start_hour, models,
                                    spec.warm_start)
    ref = _point_record(math.nan, "II-optimized", sched, res, summ,
                        spec.net, spec.horizon)
    points.append(ref)
    for pf in spec.grid:
        params = replace(spec.params, case_flag="II", fixed_power_factor=pf)
        sched, res, summ = _solve_point(spec.net, spec.forecast, params,
                                        spec.horizon, spec.start_hour, models,
                                        spec.warm_start)
        points.append(_point_record(pf, f"II-pf", sched, res, summ,
                                    spec.net, spec.horizon))
    return points


RUNNERS = {
    "wind_sweep": _run_wind_sweep,
    "strength_sweep": _run_strength_sweep,
    "interaction_sweep": _run_interaction_sweep,
    "power_factor_sweep": _run_power_factor_sweep,
    "si_interaction": _run_si_interaction,
}

AXES = {
    "wind_sweep": ("installed IBG capacity [MW]", "cost [per h]"),
    "strength_sweep": ("condenser capacity [MVA]", "cost [per h]"),
    "interaction_sweep": ("coupling impedance factor", "cost [per h]"),
    "power_factor_sweep": ("fixed power factor", "cost [per h]"),
    "si_interaction": ("installed IBG capacity [MW]", "violation rate"),
}


def _write_outputs(spec: ExperimentSpec, points: list[SweepPoint]):
    csv_path = spec.out_dir / f"{spec.kind}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        extra_keys = sorted({k for p in points for k in p.extra})
        w.writerow(["value", "case", "objective", "cost_per_hour",
                    "violation_rate", "xi", "wind_dispatched",
                    "mip_gap", "bnb_nodes", "status"] + extra_keys)
        for p in points:
            w.writerow([f"{p.value:.10g}", p.case, f"{p.objective:.6f}",
                        f"{p.cost_per_hour:.6f}", f"{p.violation_rate:.8f}",
                        f"{p.xi:.8f}", f"{p.wind_dispatched:.8f}",
                        f"{p.mip_gap:.3e}", p.bnb_nodes, p.status]
                       + [f"{p.extra.get(k, ''):.10g}" if k in p.extra else ""
                          for k in extra_keys])
    xlabel, ylabel = AXES[spec.kind]
    series: dict[str, dict] = {}
    for p in points:
        series.setdefault(p.case, {"x": [], "cost_per_hour": [],
                                   "violation_rate": [], "xi": []})
        series[p.case]["x"].append(p.value)
        series[p.case]["cost_per_hour"].append(p.cost_per_hour)
        series[p.case]["violation_rate"].append(p.violation_rate)
        series[p.case]["xi"].append(p.xi)
    (spec.out_dir / f"{spec.kind}_plot.json").write_text(json.dumps({
        "experiment": spec.kind, "xlabel": xlabel, "ylabel": ylabel,
        "horizon_h": spec.horizon, "series": series}, indent=1))
