"""Scenario trees, expected-cost bookkeeping, rolling-horizon driver, and
exact (non-surrogate) stability screening of finished schedules.

Decisions attach to tree nodes, so non-anticipativity is structural: one
commitment/dispatch per node, shared by every scenario passing through it.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import vstab
from .netmodel import NetworkModel, SingularStateError
from .timeseries import ForecastSeries

log = logging.getLogger(__name__)


class TreeError(ValueError):
    pass


@dataclass
class ScenarioNode:
    id: int
    parent: int | None
    prob: float
    t_index: int  # hour offset from the tree root
    dt: float  # step length, h
    demand_p: np.ndarray  # per bus, p.u.
    demand_q: np.ndarray
    wind: dict[str, float]  # available power per wind unit, p.u.
    alpha: dict[str, float]  # online fraction per VSG
    children: list[int] = field(default_factory=list)


@dataclass
class ScenarioTree:
    nodes: list[ScenarioNode]
    horizon: int
    quantiles: tuple[float, ...]

    @property
    def root(self) -> ScenarioNode:
        return self.nodes[0]

    def parent(self, node: ScenarioNode) -> ScenarioNode | None:
        return None if node.parent is None else self.nodes[node.parent]

    def ancestors(self, node: ScenarioNode) -> list[ScenarioNode]:
        """Path from the node back to the root, inclusive."""
        out = [node]
        while out[-1].parent is not None:
            out.append(self.nodes[out[-1].parent])
        return out

    def level(self, t_index: int) -> list[ScenarioNode]:
        return [n for n in self.nodes if n.t_index == t_index]

    def validate(self, tol: float = 1e-12):
        if abs(self.root.prob - 1.0) > tol:
            raise TreeError("root probability must be 1")
        for n in self.nodes:
            if n.dt <= 0:
                raise TreeError(f"node {n.id}: dt must be positive")
            if n.children:
                s = sum(self.nodes[c].prob for c in n.children)
                if abs(s - n.prob) > tol:
                    raise TreeError(
                        f"node {n.id}: children probabilities sum to {s}, "
                        f"expected {n.prob}")
        for t in range(self.horizon):
            s = sum(n.prob for n in self.level(t))
            if abs(s - 1.0) > 1e-9:
                raise TreeError(f"level {t}: probabilities sum to {s}")


def quantile_probabilities(quantiles: Sequence[float]) -> np.ndarray:
    """Branch weights from quantile spacing, normalized to sum to one."""
    q = list(quantiles)
    if not q or any(not 0 < v < 1 for v in q) or sorted(q) != q:
        raise TreeError("quantiles must be sorted and inside (0, 1)")
    aug = [0.0] + q + [1.0]
    raw = np.array([(aug[i + 2] - aug[i]) / 2.0 for i in range(len(q))])
    return raw / raw.sum()


def build_tree(forecast: ForecastSeries,
               error_quantiles: Sequence[float],
               horizon: int,
               branch_times: Sequence[int] = (1, 2, 3),
               demand_error_std: float = 0.03,
               wind_error_std: float = 0.10) -> ScenarioTree:
    """Scenario tree from a point forecast and forecast-error quantiles.

    The tree branches at the given look-ahead hours into one child per
    quantile; each child scales demand and wind by 1 + z_q * std * sqrt(t)
    (z_q the standard-normal quantile), compounding down the tree.
    """
    if horizon < 1:
        raise TreeError("horizon must be at least one step")
    if len(forecast) < horizon:
        raise TreeError(f"forecast covers {len(forecast)} h < horizon {horizon}")
    probs = quantile_probabilities(error_quantiles)
    zvals = stats.norm.ppf(np.asarray(error_quantiles))
    branch_at = {t for t in branch_times if 1 <= t < horizon}

    nodes: list[ScenarioNode] = []

    def series_node(t: int, parent: int | None, prob: float,
                    dfac: float, wfac: float) -> ScenarioNode:
        node = ScenarioNode(
            id=len(nodes), parent=parent, prob=prob, t_index=t, dt=1.0,
            demand_p=np.maximum(forecast.demand_p[t] * dfac, 0.0),
            demand_q=np.maximum(forecast.demand_q[t] * dfac, 0.0),
            wind={u: max(v[t] * wfac, 0.0) for u, v in forecast.wind.items()},
            alpha={u: float(np.clip(v[t] * wfac, 0.0, 1.0))
                   for u, v in forecast.alpha.items()},
        )
        nodes.append(node)
        return node

    frontier = [(series_node(0, None, 1.0, 1.0, 1.0), 1.0, 1.0)]
    for t in range(1, horizon):
        nxt = []
        for node, dfac, wfac in frontier:
            if t in branch_at:
                for z, pr in zip(zvals, probs):
                    sc = math.sqrt(t)
                    df = dfac * (1.0 + z * demand_error_std * sc)
                    wf = max(wfac * (1.0 + z * wind_error_std * sc), 0.0)
                    child = series_node(t, node.id, node.prob * pr, df, wf)
                    node.children.append(child.id)
                    nxt.append((child, df, wf))
            else:
                child = series_node(t, node.id, node.prob, dfac, wfac)
                node.children.append(child.id)
                nxt.append((child, dfac, wfac))
        frontier = nxt
    tree = ScenarioTree(nodes, horizon, tuple(error_quantiles))
    tree.validate()
    return tree


def deterministic_tree(forecast: ForecastSeries, horizon: int) -> ScenarioTree:
    """Degenerate chain: the median-quantile tree with no branching."""
    return build_tree(forecast, (0.5,), horizon, branch_times=())


# -- schedules ---------------------------------------------------------------

@dataclass
class Schedule:
    """Per-node decisions plus enough context to recompute the objective."""

    tree: ScenarioTree
    commit: dict[int, dict[str, int]]  # node -> SG -> 0/1
    startup: dict[int, dict[str, float]]
    p_gen: dict[int, dict[str, float]]  # SG and VSG dispatch
    q_gen: dict[int, dict[str, float]]
    p_ibg: dict[int, dict[str, float]]
    q_ibg: dict[int, dict[str, float]]
    shed: dict[int, dict[int, float]]  # node -> bus id -> p.u.
    pfr: dict[int, float]
    inertia: dict[int, float]
    h_si: dict[int, dict[str, float]]
    objective: float
    initial_commit: dict[str, int]
    solve_status: str = "optimal"
    mip_gap: float = 0.0
    node_count: int = 0
    wall_time: float = 0.0

    def cost_breakdown(self, net: NetworkModel, shed_cost: float) -> dict[int, dict[str, float]]:
        out = {}
        for n in self.tree.nodes:
            gen = sum(
                (g.cost.no_load * n.dt * self.commit[n.id].get(g.id, 0)
                 + g.cost.startup * self.startup[n.id].get(g.id, 0.0)
                 + g.cost.marginal * net.base_mva * n.dt
                 * (self.p_gen[n.id].get(g.id, 0.0) + self.p_ibg[n.id].get(g.id, 0.0)))
                for g in net.gens)
            sh = shed_cost * net.base_mva * n.dt * sum(self.shed[n.id].values())
            out[n.id] = {"generation": gen, "shed": sh}
        return out

    def recompute_objective(self, net: NetworkModel, shed_cost: float) -> float:
        parts = self.cost_breakdown(net, shed_cost)
        return sum(n.prob * (parts[n.id]["generation"] + parts[n.id]["shed"])
                   for n in self.tree.nodes)


def objective_coefficients(tree: ScenarioTree, net: NetworkModel,
                           shed_cost: float) -> dict[tuple[str, str | int, int], float]:
    """Expected-cost coefficients keyed by (kind, unit-or-bus, node id).

    kinds: 'x' commitment (no-load), 'u' startup, 'p' dispatch (marginal),
    'shed' load shedding. The same map drives program assembly and the
    independent objective recomputation.
    """
    coefs: dict[tuple[str, str | int, int], float] = {}
    for n in tree.nodes:
        for g in net.gens:
            if g.kind == "SG":
                coefs[("x", g.id, n.id)] = n.prob * g.cost.no_load * n.dt
                coefs[("u", g.id, n.id)] = n.prob * g.cost.startup
            if g.cost.marginal:
                coefs[("p", g.id, n.id)] = (n.prob * g.cost.marginal
                                            * net.base_mva * n.dt)
        for b in net.buses:
            if n.demand_p[net.bus_index[b.id]] > 0:
                coefs[("shed", b.id, n.id)] = (n.prob * shed_cost
                                               * net.base_mva * n.dt)
    return coefs


# -- exact screening ---------------------------------------------------------

@dataclass
class ViolationSummary:
    total_pairs: int
    violated_pairs: int
    worst_excess: float  # max of lhs - rhs over pairs
    per_node: dict[int, list[str]]  # node -> violated IBG ids
    xi_mean: float  # interaction factor averaged over nodes
    singular_nodes: list[int] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.violated_pairs / self.total_pairs if self.total_pairs else 0.0


def evaluate_schedule(schedule: Schedule, net: NetworkModel,
                      margin: float = vstab.DEFAULT_MARGIN) -> ViolationSummary:
    """Re-check every (node, IBG) pair against the exact criterion, with
    gamma and the impedance ratios from a fresh matrix inversion."""
    total = 0
    violated = 0
    worst = -math.inf
    per_node: dict[int, list[str]] = {}
    xi_samples = []
    singular = []
    for n in schedule.tree.nodes:
        x = schedule.commit[n.id]
        state = net.state(x={g: float(v) for g, v in x.items()},
                          alpha=n.alpha)
        try:
            view = net.impedance_view(state)
        except SingularStateError:
            singular.append(n.id)
            continue
        p = schedule.p_ibg[n.id]
        q = schedule.q_ibg[n.id]
        p_hats = {}
        for c in net.ibg_ids:
            inj = vstab.equivalent_injection(p, q, view, c)
            p_hats[c] = inj.p_hat
            a = vstab.check_stability(inj, margin)
            total += 1
            worst = max(worst, a.lhs - a.rhs)
            if a.violated:
                violated += 1
                per_node.setdefault(n.id, []).append(c)
        xi, _ = vstab.interaction_factor(p, p_hats)
        if any(abs(v) > 1e-9 for v in p.values()):
            xi_samples.append(xi)
    return ViolationSummary(total_pairs=total, violated_pairs=violated,
                            worst_excess=worst if total else 0.0,
                            per_node=per_node,
                            xi_mean=float(np.mean(xi_samples)) if xi_samples else 0.0,
                            singular_nodes=singular)


# -- rolling horizon ---------------------------------------------------------

@dataclass
class RollingStep:
    step: int
    applied_node: ScenarioNode
    commit: dict[str, int]
    p_gen: dict[str, float]
    p_ibg: dict[str, float]
    q_ibg: dict[str, float]
    shed: float
    cost: float
    status: str
    fallback: bool = False


@dataclass
class RollingResult:
    steps: list[RollingStep]
    realized_cost: float
    schedules: list[Schedule]

    def applied_schedule(self, net: NetworkModel) -> Schedule:
        """Stitch the applied root decisions into one chain schedule."""
        nodes = []
        first = self.schedules[0]
        for k, st in enumerate(self.steps):
            n = st.applied_node
            nodes.append(ScenarioNode(id=k, parent=None if k == 0 else k - 1,
                                      prob=1.0, t_index=k, dt=n.dt,
                                      demand_p=n.demand_p, demand_q=n.demand_q,
                                      wind=dict(n.wind), alpha=dict(n.alpha),
                                      children=[k + 1] if k + 1 < len(self.steps) else []))
        tree = ScenarioTree(nodes, len(nodes), (0.5,))
        sched = Schedule(
            tree=tree,
            commit={k: dict(s.commit) for k, s in enumerate(self.steps)},
            startup={k: {} for k in range(len(self.steps))},
            p_gen={k: dict(s.p_gen) for k, s in enumerate(self.steps)},
            q_gen={k: {} for k in range(len(self.steps))},
            p_ibg={k: dict(s.p_ibg) for k, s in enumerate(self.steps)},
            q_ibg={k: dict(s.q_ibg) for k, s in enumerate(self.steps)},
            shed={k: {} for k in range(len(self.steps))},
            pfr={}, inertia={}, h_si={},
            objective=self.realized_cost,
            initial_commit=first.initial_commit)
        return sched


def rolling_run(net: NetworkModel, forecast: ForecastSeries, params,
                steps: int, horizon: int = 24,
                error_quantiles: Sequence[float] = (0.5,),
                branch_times: Sequence[int] = (1, 2, 3),
                seed: int = 0,
                models=None,
                initial=None) -> RollingResult:
    """Hourly rolling plan: solve a fresh horizon each step, apply the root
    decisions, advance along a realization sampled by branch probability
    (fixed seed), and warm-start the next solve with the shifted binaries.
    """
    from .formulation import InitialConditions, UcFormulation

    if len(forecast) < steps + horizon - 1:
        raise ValueError(f"need at least steps + horizon - 1 = "
                         f"{steps + horizon - 1} forecast hours, have {len(forecast)}")
    rng = np.random.default_rng(seed)
    probs = quantile_probabilities(error_quantiles)
    zvals = stats.norm.ppf(np.asarray(error_quantiles))

    init = initial or InitialConditions.cold(net)
    prev_sched: Schedule | None = None
    realized_factor = 1.0  # realized wind/demand multiplier for the next roots
    out_steps: list[RollingStep] = []
    schedules: list[Schedule] = []
    realized_cost = 0.0

    for s in range(steps):
        win = forecast.window(s, min(horizon, len(forecast) - s))
        if realized_factor != 1.0:
            win = ForecastSeries(win.hours, win.demand_p, win.demand_q,
                                 {u: v * realized_factor for u, v in win.wind.items()},
                                 {u: np.clip(v * realized_factor, 0, 1)
                                  for u, v in win.alpha.items()})
        tree = build_tree(win, error_quantiles, len(win), branch_times)
        form = UcFormulation(net, tree, params, models=models, initial=init)
        hint = form.commitment_hint(prev_sched) if prev_sched else None
        result = form.solve(incumbent_hint=hint)
        fallback = False
        if result.status in ("infeasible", "tol_limit"):
            log.warning("step %d %s; retrying without frequency rows", s, result.status)
            form = UcFormulation(net, tree, params.without_frequency(),
                                 models=models, initial=init)
            result = form.solve(incumbent_hint=hint)
            fallback = True
            if result.status in ("infeasible", "tol_limit"):
                raise RuntimeError(f"rolling step {s} unsolvable: {result.status}")
        sched = form.extract_schedule(result)
        schedules.append(sched)
        prev_sched = sched
        root = tree.root
        parts = sched.cost_breakdown(net, params.shed_cost)[root.id]
        cost = parts["generation"] + parts["shed"]
        realized_cost += cost
        out_steps.append(RollingStep(
            step=s, applied_node=root, commit=dict(sched.commit[root.id]),
            p_gen=dict(sched.p_gen[root.id]), p_ibg=dict(sched.p_ibg[root.id]),
            q_ibg=dict(sched.q_ibg[root.id]),
            shed=sum(sched.shed[root.id].values()), cost=cost,
            status=result.status, fallback=fallback))

        init = init.advance(net, sched.commit[root.id],
                            {g: sched.p_gen[root.id].get(g, 0.0) for g in net.sg_ids})
        # realization: sample the branch visited at the next hour
        if len(zvals) > 1:
            k = int(rng.choice(len(zvals), p=probs))
            realized_factor *= max(1.0 + zvals[k] * 0.10, 0.0)
    return RollingResult(out_steps, realized_cost, schedules)


# -- exports -----------------------------------------------------------------

def write_schedule_csv(schedule: Schedule, net: NetworkModel, path: str | Path):
    unit_ids = [g.id for g in net.gens]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "parent", "t", "prob"]
                   + [f"x:{g}" for g in net.sg_ids]
                   + [f"p:{u}" for u in unit_ids] + [f"q:{u}" for u in unit_ids]
                   + ["pfr", "inertia", "shed_total"])
        for n in schedule.tree.nodes:
            pg = {**schedule.p_gen[n.id], **schedule.p_ibg[n.id]}
            qg = {**schedule.q_gen[n.id], **schedule.q_ibg[n.id]}
            w.writerow([n.id, n.parent if n.parent is not None else "",
                        n.t_index, f"{n.prob:.10g}"]
                       + [schedule.commit[n.id].get(g, 0) for g in net.sg_ids]
                       + [f"{pg.get(u, 0.0):.8f}" for u in unit_ids]
                       + [f"{qg.get(u, 0.0):.8f}" for u in unit_ids]
                       + [f"{schedule.pfr.get(n.id, 0.0):.8f}",
                          f"{schedule.inertia.get(n.id, 0.0):.8f}",
                          f"{sum(schedule.shed[n.id].values()):.8f}"])


def write_violation_json(summary: ViolationSummary, path: str | Path):
    Path(path).write_text(json.dumps({
        "total_pairs": summary.total_pairs,
        "violated_pairs": summary.violated_pairs,
        "rate": summary.rate,
        "worst_excess": summary.worst_excess,
        "xi_mean": summary.xi_mean,
        "per_node": {str(k): v for k, v in sorted(summary.per_node.items())},
        "singular_nodes": summary.singular_nodes,
    }, indent=1))
