"""Assembly of the scheduling MISOCP over a scenario tree.

Per node this wires together:
  * SOC-relaxed AC power flow in the (c_ii, c_ij, s_ij) variables, with
    cross-term line-flow variables and apparent-power thermal cones,
  * unit-commitment logic (limits, startup/shutdown, min up/down, ramps),
  * voltage-stability cones at the IBG buses using the regression
    surrogates for the impedance ratios, with binary x binary products
    handled by an exact big-M linearization,
  * IBG capacity cones and frequency (nadir/steady-state/RoCoF) rows,
    the nadir as a rotated cone.

Sign conventions: the active balance at bus i reads
    sum(injections) + shed - demand = G_ii c_ii + sum_j P_ij
with P_ij = -g c_ij + b s_ij the cross term of the line flow, and G_ii the
diagonal of the full bus admittance matrix; reactive analogously with
-B_ii c_ii and Q_ij = g s_ij + b c_ij. Full physical flows are recovered
as P_ij + g c_ii for reporting and thermal limits.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import vstab
from .conic import Affine, BnBConfig, ConicProgram, SolveResult, solve_misocp
from .netmodel import IBG, SG, VSG, CommitmentState, GenUnit, NetworkModel
from .scenario import (Schedule, ScenarioNode, ScenarioTree,
                       objective_coefficients)
from .zfit import GAMMA_TARGET, RegressionModel

CASE_FLAGS = ("base", "I", "II", "III")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class UcParams:
    """Scheduling options and frequency-security parameters (per-unit)."""

    case_flag: str = "base"
    margin: float = 0.05
    shed_cost: float = 30_000.0  # currency per MWh unserved
    gamma_factor: float = 0.5  # gamma = factor * (1/|Z_cc| surrogate)
    n_v: int = 4
    # frequency security
    delta_p_loss: float = 0.5  # largest infeed loss, p.u.
    t_delivery: float = 10.0  # PFR delivery time, s
    f_nadir_lim: float = 0.8  # Hz
    f_ss_lim: float = 0.5  # Hz
    rocof_lim: float = 0.5  # Hz/s
    f0: float = 50.0  # Hz
    damping_pct: float = 0.005  # load damping per Hz, fraction of demand
    enable_nadir: bool = True
    enable_ss: bool = True
    enable_rocof: bool = True
    si_enabled: bool = True
    fixed_power_factor: float | None = None  # ties Q_c = tan(acos(pf)) P_c
    case3_no_q: tuple[str, ...] | None = None  # explicit Case III pinned IBGs
    solver: BnBConfig = field(default_factory=BnBConfig)

    def __post_init__(self):
        if self.case_flag not in CASE_FLAGS:
            raise ConfigurationError(f"case flag must be one of {CASE_FLAGS}")
        if not 0.0 <= self.margin < 1.0:
            raise ConfigurationError("margin must lie in [0, 1)")
        if min(self.shed_cost, self.delta_p_loss, self.t_delivery,
               self.f_nadir_lim, self.f_ss_lim, self.rocof_lim, self.f0) <= 0:
            raise ConfigurationError("frequency/shed parameters must be positive")

    def without_frequency(self) -> "UcParams":
        return replace(self, enable_nadir=False, enable_ss=False,
                       enable_rocof=False)

    @staticmethod
    def from_json(path: str | Path) -> "UcParams":
        raw = json.loads(Path(path).read_text())
        solver = BnBConfig(**raw.pop("solver", {}))
        if "case3_no_q" in raw and raw["case3_no_q"] is not None:
            raw["case3_no_q"] = tuple(raw["case3_no_q"])
        return UcParams(solver=solver, **raw)


@dataclass(frozen=True)
class InitialConditions:
    """Fleet state at the start of the horizon."""

    x0: dict[str, int]
    p0: dict[str, float]
    hours_on: dict[str, int]
    hours_off: dict[str, int]

    @staticmethod
    def cold(net: NetworkModel, off_hours: int = 1000) -> "InitialConditions":
        return InitialConditions(x0={g: 0 for g in net.sg_ids},
                                 p0={g: 0.0 for g in net.sg_ids},
                                 hours_on={g: 0 for g in net.sg_ids},
                                 hours_off={g: off_hours for g in net.sg_ids})

    @staticmethod
    def warm(net: NetworkModel, on_hours: int = 1000) -> "InitialConditions":
        return InitialConditions(x0={g: 1 for g in net.sg_ids},
                                 p0={g: net.unit[g].p_min for g in net.sg_ids},
                                 hours_on={g: on_hours for g in net.sg_ids},
                                 hours_off={g: 0 for g in net.sg_ids})

    def advance(self, net: NetworkModel, commit: Mapping[str, int],
                dispatch: Mapping[str, float]) -> "InitialConditions":
        x0, p0, on, off = {}, {}, {}, {}
        for g in net.sg_ids:
            xg = int(commit.get(g, 0))
            x0[g] = xg
            p0[g] = float(dispatch.get(g, 0.0))
            on[g] = self.hours_on[g] + 1 if xg else 0
            off[g] = 0 if xg else self.hours_off[g] + 1
        return InitialConditions(x0, p0, on, off)


# -- product linearization (module-level, reusable) ---------------------------

def add_pair_binary(program: ConicProgram, x1: int, x2: int, name: str,
                    as_binary: bool = False) -> int:
    """Ancillary y with y = x1 * x2 enforced at binary points of x1, x2.

    The three rows pin y to the exact product whenever x1 and x2 are
    integral, so y needs no branching of its own and is declared
    continuous unless explicitly requested otherwise."""
    y = program.add_var(name, lb=0.0, ub=1.0, binary=as_binary)
    program.add_le({y: 1.0, x1: -1.0}, 0.0, f"{name}<=a")
    program.add_le({y: 1.0, x2: -1.0}, 0.0, f"{name}<=b")
    program.add_ge({y: 1.0, x1: -1.0, x2: -1.0}, -1.0, f"{name}>=a+b-1")
    return y


def add_product_linearization(program: ConicProgram, x_bin: int, p_var: int,
                              p_max: float, name: str) -> int:
    """Continuous mu with mu = x_bin * p exactly at binary points of x_bin,
    via the four-row big-M encoding; p_max must bound |p|."""
    if p_max <= 0:
        raise ConfigurationError(f"product bound for {name} must be positive")
    mu = program.add_var(name, lb=-p_max, ub=p_max)
    program.add_le({mu: 1.0, x_bin: -p_max}, 0.0, f"{name}<=xM")
    program.add_ge({mu: 1.0, x_bin: p_max}, 0.0, f"{name}>=-xM")
    program.add_le({mu: 1.0, p_var: -1.0, x_bin: p_max}, p_max, f"{name}<=p+(1-x)M")
    program.add_ge({mu: 1.0, p_var: -1.0, x_bin: -p_max}, -p_max, f"{name}>=p-(1-x)M")
    return mu


def surrogate_injection(models: Mapping[tuple[str, str], RegressionModel],
                        state: CommitmentState,
                        p: Mapping[str, float], q: Mapping[str, float],
                        c: str, gamma_factor: float = 0.5) -> vstab.EquivalentInjection:
    """Equivalent injection at IBG c with surrogate-evaluated ratios and
    gamma; the assembled constraint rows must agree with this at binary
    commitment points."""
    from .zfit import evaluate

    p_hat, q_hat = float(p[c]), float(q[c])
    for (cc, delta), m in models.items():
        if cc == c and delta != GAMMA_TARGET:
            r = evaluate(m, state)
            p_hat += r * float(p[delta])
            q_hat += r * float(q[delta])
    gamma = gamma_factor * evaluate(models[(c, GAMMA_TARGET)], state)
    return vstab.EquivalentInjection(ibg=c, p_hat=p_hat, q_hat=q_hat, gamma=gamma)


class UcFormulation:
    """Builds the ConicProgram for one scheduling horizon and maps the
    solution back into a Schedule."""

    def __init__(self, net: NetworkModel, tree: ScenarioTree, params: UcParams,
                 models: Mapping[tuple[str, str], RegressionModel] | None = None,
                 initial: InitialConditions | None = None,
                 name: str | None = None):
        tree.validate()
        self.net = net
        self.tree = tree
        self.params = params
        self.models = dict(models) if models else {}
        self.initial = initial or InitialConditions.cold(net)
        self.program = ConicProgram(name or f"uc-{net.name}-{params.case_flag}")
        self.built = False
        if params.case_flag != "base":
            missing = [k for k in self._required_model_keys() if k not in self.models]
            if missing:
                raise ConfigurationError(
                    f"case {params.case_flag} needs regression models for {missing}")
        # variable handle caches: kind -> (key, node) -> index
        self.v: dict[str, dict] = {k: {} for k in
                                   ("x", "u", "w", "pg", "qg", "pc", "qc",
                                    "cii", "cl", "sl", "pf", "qf", "shed",
                                    "phat", "qhat", "gam", "H", "R", "rg",
                                    "hs", "nu_p", "nu_q", "mu_p", "mu_q", "xp")}
        # all unordered (V)SG pairs, in feature order
        self.net_pairs = list(itertools.combinations(
            self.net.sg_ids + self.net.vsg_ids, 2))

    def _required_model_keys(self) -> list[tuple[str, str]]:
        keys = []
        for c in self.net.ibg_ids:
            keys.append((c, GAMMA_TARGET))
            for c2 in self.net.ibg_ids:
                if c2 != c:
                    keys.append((c, c2))
        return keys

    # -- small helpers ------------------------------------------------------
    def _q_free(self, c: str) -> bool:
        """Whether IBG c may inject reactive power under the case flag."""
        flag = self.params.case_flag
        if flag in ("base", "II"):
            return True
        if flag == "I":
            return False
        pinned = self.params.case3_no_q
        if pinned is None:
            ids = sorted(self.net.ibg_ids)
            pinned = tuple(ids[len(ids) // 2:])  # later half loses Q support
        return c not in pinned

    def _sg_pairs(self) -> list[tuple[str, str]]:
        ids = self.net.sg_ids
        return [(ids[i], ids[j]) for i in range(len(ids))
                for j in range(i + 1, len(ids))]

    # -- variable declaration ------------------------------------------------
    def _declare_node_vars(self, n: ScenarioNode):
        p, net = self.program, self.net
        nid = n.id
        for g in net.sgs:
            # branch commitments hour by hour: earlier decisions propagate
            # through min up/down and ramping, so fixing them first keeps
            # the tree shallow
            self.v["x"][g.id, nid] = p.add_var(f"x[{g.id}|{nid}]", binary=True,
                                               branch_priority=10_000 - n.t_index)
            self.v["u"][g.id, nid] = p.add_var(f"u[{g.id}|{nid}]", 0.0, 1.0)
            self.v["w"][g.id, nid] = p.add_var(f"w[{g.id}|{nid}]", 0.0, 1.0)
            self.v["pg"][g.id, nid] = p.add_var(f"pg[{g.id}|{nid}]", 0.0, g.capacity)
            self.v["qg"][g.id, nid] = p.add_var(f"qg[{g.id}|{nid}]",
                                                min(g.q_min, 0.0), max(g.q_max, 0.0))
        for g in net.vsgs:
            lim = n.alpha.get(g.id, 0.0) * g.capacity
            self.v["pg"][g.id, nid] = p.add_var(f"pg[{g.id}|{nid}]", 0.0, lim)
            self.v["qg"][g.id, nid] = p.add_var(f"qg[{g.id}|{nid}]",
                                                max(g.q_min, -lim), min(g.q_max, lim))
        for g in net.ibgs:
            avail = min(n.wind.get(g.id, 0.0), g.capacity)
            self.v["pc"][g.id, nid] = p.add_var(f"pc[{g.id}|{nid}]", 0.0, avail)
            q_free = self._q_free(g.id)
            self.v["qc"][g.id, nid] = p.add_var(
                f"qc[{g.id}|{nid}]",
                g.q_min if q_free else 0.0, g.q_max if q_free else 0.0)
        for b in net.buses:
            self.v["cii"][b.id, nid] = p.add_var(f"cii[{b.id}|{nid}]",
                                                 b.v_min**2, b.v_max**2)
            dem = n.demand_p[net.bus_index[b.id]]
            if dem > 0:
                self.v["shed"][b.id, nid] = p.add_var(f"shed[{b.id}|{nid}]", 0.0, dem)
        for k, ln in enumerate(net.lines):
            vmax2 = net.buses[net.bus_index[ln.from_bus]].v_max \
                * net.buses[net.bus_index[ln.to_bus]].v_max
            self.v["cl"][k, nid] = p.add_var(f"c[{k}|{nid}]", 0.0, vmax2)
            self.v["sl"][k, nid] = p.add_var(f"s[{k}|{nid}]", -vmax2, vmax2)
            for d in ("f", "r"):
                self.v["pf"][k, d, nid] = p.add_var(f"pf[{k}{d}|{nid}]")
                self.v["qf"][k, d, nid] = p.add_var(f"qf[{k}{d}|{nid}]")

    # -- constraint blocks ---------------------------------------------------
    def add_power_flow(self, node: ScenarioNode) -> list[str]:
        """SOC power flow: balance rows carrying the G_ii/B_ii diagonal
        terms, cross-term flow definitions, cone rows per line, and
        apparent-power thermal cones on the full flows."""
        p, net = self.program, self.net
        nid = node.id
        handles = []
        y0 = net.build_y0()
        # flow definitions and cones per line
        for k, ln in enumerate(net.lines):
            i = net.bus_index[ln.from_bus]
            j = net.bus_index[ln.to_bus]
            cl, sl = self.v["cl"][k, nid], self.v["sl"][k, nid]
            cii, cjj = self.v["cii"][ln.from_bus, nid], self.v["cii"][ln.to_bus, nid]
            g, b = ln.g, ln.b
            # cross-term flows: P_ij = -g c + b s (forward), reverse flips s
            for d, sgn, cown in (("f", 1.0, cii), ("r", -1.0, cjj)):
                pf, qf = self.v["pf"][k, d, nid], self.v["qf"][k, d, nid]
                name = f"pfdef[{k}{d}|{nid}]"
                p.add_eq({pf: 1.0, cl: g, sl: -sgn * b}, 0.0, name)
                handles.append(name)
                name = f"qfdef[{k}{d}|{nid}]"
                p.add_eq({qf: 1.0, sl: -sgn * g, cl: -b}, 0.0, name)
                handles.append(name)
                # thermal cone on the physical flow (adds the diagonal part)
                if math.isfinite(ln.rate):
                    cone = f"thermal[{k}{d}|{nid}]"
                    p.add_soc(Affine.const_of(ln.rate),
                              [Affine({pf: 1.0, cown: g}),
                               Affine({qf: 1.0, cown: -(b + 0.5 * ln.b_charging)})],
                              cone)
                    handles.append(cone)
            cone = f"socflow[{k}|{nid}]"
            p.add_rsoc(Affine.of(cii, 1.0 / math.sqrt(2.0)),
                       Affine.of(cjj, 1.0 / math.sqrt(2.0)),
                       [Affine.of(cl), Affine.of(sl)], cone)
            handles.append(cone)
        # nodal balance
        for b_ in net.buses:
            i = net.bus_index[b_.id]
            gii, bii = y0[i, i].real, y0[i, i].imag
            pterms: dict[int, float] = {self.v["cii"][b_.id, nid]: -gii}
            qterms: dict[int, float] = {self.v["cii"][b_.id, nid]: bii}
            for k, ln in enumerate(net.lines):
                if ln.from_bus == b_.id:
                    pterms[self.v["pf"][k, "f", nid]] = -1.0
                    qterms[self.v["qf"][k, "f", nid]] = -1.0
                elif ln.to_bus == b_.id:
                    pterms[self.v["pf"][k, "r", nid]] = -1.0
                    qterms[self.v["qf"][k, "r", nid]] = -1.0
            for g in net.gens:
                if g.bus != b_.id:
                    continue
                if g.kind == IBG:
                    pterms[self.v["pc"][g.id, nid]] = 1.0
                    qterms[self.v["qc"][g.id, nid]] = 1.0
                else:
                    pterms[self.v["pg"][g.id, nid]] = 1.0
                    qterms[self.v["qg"][g.id, nid]] = 1.0
            pd = node.demand_p[i]
            qd = node.demand_q[i]
            if (b_.id, nid) in self.v["shed"]:
                sh = self.v["shed"][b_.id, nid]
                pterms[sh] = pterms.get(sh, 0.0) + 1.0
                if pd > 0:
                    qterms[sh] = qterms.get(sh, 0.0) + qd / pd
            name = f"pbal[{b_.id}|{nid}]"
            p.add_eq(pterms, pd, name)
            handles.append(name)
            name = f"qbal[{b_.id}|{nid}]"
            p.add_eq(qterms, qd, name)
            handles.append(name)
        return handles

    def add_uc_standard(self, node: ScenarioNode) -> list[str]:
        """Textbook commitment constraints along the tree ancestry."""
        p, net = self.program, self.net
        nid = node.id
        parent = self.tree.parent(node)
        handles = []
        anc = self.tree.ancestors(node)
        for g in net.sgs:
            x = self.v["x"][g.id, nid]
            u = self.v["u"][g.id, nid]
            w = self.v["w"][g.id, nid]
            pg = self.v["pg"][g.id, nid]
            qg = self.v["qg"][g.id, nid]
            p.add_le({pg: 1.0, x: -g.capacity}, 0.0, f"pmax[{g.id}|{nid}]")
            p.add_ge({pg: 1.0, x: -g.p_min}, 0.0, f"pmin[{g.id}|{nid}]")
            p.add_le({qg: 1.0, x: -g.q_max}, 0.0, f"qmax[{g.id}|{nid}]")
            p.add_ge({qg: 1.0, x: -g.q_min}, 0.0, f"qmin[{g.id}|{nid}]")
            # commitment logic and ramps against the parent (or initial) state
            x0 = self.initial.x0[g.id]
            p0 = self.initial.p0[g.id]
            ru = g.ramp_up * node.dt
            rd = g.ramp_down * node.dt
            su = max(g.p_min, ru if math.isfinite(ru) else g.capacity)
            sd = max(g.p_min, rd if math.isfinite(rd) else g.capacity)
            if parent is None:
                p.add_eq({x: 1.0, u: -1.0, w: 1.0}, x0, f"logic[{g.id}|{nid}]")
                if math.isfinite(ru):
                    p.add_le({pg: 1.0, u: -su}, p0 + ru * x0, f"rampup[{g.id}|{nid}]")
                if math.isfinite(rd):
                    p.add_le({pg: -1.0, x: -rd, w: -sd}, -p0, f"rampdn[{g.id}|{nid}]")
            else:
                xp = self.v["x"][g.id, parent.id]
                pp = self.v["pg"][g.id, parent.id]
                p.add_eq({x: 1.0, xp: -1.0, u: -1.0, w: 1.0}, 0.0,
                         f"logic[{g.id}|{nid}]")
                if math.isfinite(ru):
                    p.add_le({pg: 1.0, pp: -1.0, xp: -ru, u: -su}, 0.0,
                             f"rampup[{g.id}|{nid}]")
                if math.isfinite(rd):
                    p.add_le({pp: 1.0, pg: -1.0, x: -rd, w: -sd}, 0.0,
                             f"rampdn[{g.id}|{nid}]")
            handles.append(f"logic[{g.id}|{nid}]")
            # min up/down over the ancestor window
            ups = {self.v["u"][g.id, a.id]: 1.0 for a in anc
                   if node.t_index - a.t_index < g.min_up}
            p.add_le({**ups, x: -1.0}, 0.0, f"minup[{g.id}|{nid}]")
            handles.append(f"minup[{g.id}|{nid}]")
            dns = {self.v["w"][g.id, a.id]: 1.0 for a in anc
                   if node.t_index - a.t_index < g.min_down}
            p.add_le({**dns, x: 1.0}, 1.0, f"mindn[{g.id}|{nid}]")
            handles.append(f"mindn[{g.id}|{nid}]")
            # residual minimum up/down time from the initial state
            if x0 == 1:
                left = g.min_up - self.initial.hours_on[g.id]
                if node.t_index < left:
                    self.program.variables[x].lb = 1.0
            else:
                left = g.min_down - self.initial.hours_off[g.id]
                if node.t_index < left:
                    self.program.variables[x].ub = 0.0
        return handles

    def add_ibg_capacity(self, node: ScenarioNode) -> list[str]:
        """Apparent-power cones P_c^2 + Q_c^2 <= S_max^2 (availability is a
        variable bound); optional fixed-power-factor tie rows."""
        p, net = self.program, self.net
        nid = node.id
        handles = []
        pf = self.params.fixed_power_factor
        for g in net.ibgs:
            pc, qc = self.v["pc"][g.id, nid], self.v["qc"][g.id, nid]
            name = f"scap[{g.id}|{nid}]"
            p.add_soc(Affine.const_of(g.s_max), [Affine.of(pc), Affine.of(qc)], name)
            handles.append(name)
            if pf is not None and self._q_free(g.id):
                if not 0.0 < pf <= 1.0:
                    raise ConfigurationError("fixed power factor must be in (0, 1]")
                tanphi = math.tan(math.acos(pf))
                name = f"fixedpf[{g.id}|{nid}]"
                p.add_eq({qc: 1.0, pc: -tanphi}, 0.0, name)
                handles.append(name)
        return handles

    def _linearized_ratio_terms(self, c: str, target: str, node: ScenarioNode,
                                power: str) -> dict[int, float]:
        """Terms implementing ratio(x, alpha) * P_target with the products
        replaced by their linearization variables. ``power`` is 'p' or 'q'."""
        m = self.models[(c, target)]
        coefs = m.coefficients()
        nid = node.id
        alpha = {g.id: node.alpha.get(g.id, 0.0) for g in self.net.vsgs}
        pvar = self.v["pc" if power == "p" else "qc"][target, nid]
        nu = self.v["nu_p" if power == "p" else "nu_q"]
        mu = self.v["mu_p" if power == "p" else "mu_q"]
        terms: dict[int, float] = {}

        def bump(idx: int, c_: float):
            terms[idx] = terms.get(idx, 0.0) + c_

        for g in self.net.sg_ids:
            bump(nu[g, target, nid], coefs[g])
        const_ratio = 0.0
        for v in self.net.vsg_ids:
            const_ratio += coefs[v] * alpha[v]
        for (a, b) in self.net_pairs:
            k = coefs[f"{a}*{b}"]
            if a in alpha and b in alpha:  # VSG-VSG
                const_ratio += k * alpha[a] * alpha[b]
            elif b in alpha:  # SG-VSG
                bump(nu[a, target, nid], k * alpha[b])
            elif a in alpha:
                bump(nu[b, target, nid], k * alpha[a])
            else:  # SG-SG pair product with P: exact big-M variable
                bump(mu[a, b, target, nid], k)
        if const_ratio:
            bump(pvar, const_ratio)
        return terms

    def add_product_linearizations(self, node: ScenarioNode) -> list[str]:
        """Pair binaries and mu variables for every (SG pair, IBG) product
        appearing in the stability rows of this node."""
        p, net = self.program, self.net
        nid = node.id
        handles = []
        for (a, b) in self._sg_pairs():
            xp = add_pair_binary(p, self.v["x"][a, nid], self.v["x"][b, nid],
                                 f"xp[{a}*{b}|{nid}]")
            self.v["xp"][a, b, nid] = xp
            handles.append(f"xp[{a}*{b}|{nid}]")
        for c in net.ibg_ids:
            unit = net.unit[c]
            cap = unit.capacity
            for g in net.sg_ids:
                self.v["nu_p"][g, c, nid] = add_product_linearization(
                    p, self.v["x"][g, nid], self.v["pc"][c, nid], cap,
                    f"nu_p[{g},{c}|{nid}]")
                if self._q_free(c):
                    self.v["nu_q"][g, c, nid] = add_product_linearization(
                        p, self.v["x"][g, nid], self.v["qc"][c, nid],
                        max(abs(unit.q_min), unit.q_max, 1e-9),
                        f"nu_q[{g},{c}|{nid}]")
            for (a, b) in self._sg_pairs():
                self.v["mu_p"][a, b, c, nid] = add_product_linearization(
                    p, self.v["xp"][a, b, nid], self.v["pc"][c, nid], cap,
                    f"mu_p[{a}*{b},{c}|{nid}]")
                if self._q_free(c):
                    self.v["mu_q"][a, b, c, nid] = add_product_linearization(
                        p, self.v["xp"][a, b, nid], self.v["qc"][c, nid],
                        max(abs(unit.q_min), unit.q_max, 1e-9),
                        f"mu_q[{a}*{b},{c}|{nid}]")
        return handles

    def add_voltage_stability(self, node: ScenarioNode) -> list[str]:
        """Equivalent-injection rows from the surrogates plus the stability
        cone per IBG."""
        p, net = self.program, self.net
        nid = node.id
        handles = []
        alpha = {g.id: node.alpha.get(g.id, 0.0) for g in net.vsgs}
        margin = self.params.margin
        for c in net.ibg_ids:
            phat = p.add_var(f"phat[{c}|{nid}]")
            qhat = p.add_var(f"qhat[{c}|{nid}]")
            gam = p.add_var(f"gam[{c}|{nid}]")
            self.v["phat"][c, nid] = phat
            self.v["qhat"][c, nid] = qhat
            self.v["gam"][c, nid] = gam
            # p_hat = P_c + sum_{c'} ratio-linearization * P_c'
            pterms = {phat: 1.0, self.v["pc"][c, nid]: -1.0}
            qterms = {qhat: 1.0, self.v["qc"][c, nid]: -1.0}
            for c2 in net.ibg_ids:
                if c2 == c:
                    continue
                for idx, coef in self._linearized_ratio_terms(c, c2, node, "p").items():
                    pterms[idx] = pterms.get(idx, 0.0) - coef
                if self._q_free(c2):
                    for idx, coef in self._linearized_ratio_terms(c, c2, node, "q").items():
                        qterms[idx] = qterms.get(idx, 0.0) - coef
            p.add_eq(pterms, 0.0, f"phatdef[{c}|{nid}]")
            p.add_eq(qterms, 0.0, f"qhatdef[{c}|{nid}]")
            # gamma row: factor * z^1 surrogate, pair products via xp
            m = self.models[(c, GAMMA_TARGET)]
            coefs = m.coefficients()
            f = self.params.gamma_factor
            gterms = {gam: 1.0}
            gconst = 0.0
            for g in net.sg_ids:
                gterms[self.v["x"][g, nid]] = -f * coefs[g]
            for v in net.vsg_ids:
                gconst += f * coefs[v] * alpha[v]
            for (a, b) in self.net_pairs:
                k = coefs[f"{a}*{b}"]
                if a in alpha and b in alpha:
                    gconst += f * k * alpha[a] * alpha[b]
                elif b in alpha:
                    gterms[self.v["x"][a, nid]] = gterms.get(self.v["x"][a, nid], 0.0) \
                        - f * k * alpha[b]
                elif a in alpha:
                    gterms[self.v["x"][b, nid]] = gterms.get(self.v["x"][b, nid], 0.0) \
                        - f * k * alpha[a]
                else:
                    gterms[self.v["xp"][a, b, nid]] = -f * k
            p.add_eq(gterms, gconst, f"gamdef[{c}|{nid}]")
            handles += [f"phatdef[{c}|{nid}]", f"qhatdef[{c}|{nid}]", f"gamdef[{c}|{nid}]"]
            cone = f"vscone[{c}|{nid}]"
            p.add_soc(Affine({qhat: 1.0 - margin, gam: 1.0 - margin}),
                      [Affine.of(phat), Affine.of(qhat)], cone)
            handles.append(cone)
        return handles

    def add_frequency(self, node: ScenarioNode) -> list[str]:
        """Inertia/PFR definitions, nadir rotated cone, steady-state and
        RoCoF rows."""
        p, net, prm = self.program, self.net, self.params
        nid = node.id
        handles = []
        demand = float(node.demand_p.sum())
        d_damp = prm.damping_pct * demand
        x1sq = (prm.delta_p_loss**2 * prm.t_delivery / (4.0 * prm.f_nadir_lim)
                - prm.delta_p_loss * prm.t_delivery * d_damp / 4.0)
        if prm.enable_nadir and x1sq <= 0:
            raise ConfigurationError(
                "nadir constant x1^2 <= 0: need delta_p_loss/f_nadir_lim > damping")
        H = p.add_var(f"H[{nid}]", 0.0)
        R = p.add_var(f"R[{nid}]", 0.0)
        self.v["H"][nid] = H
        self.v["R"][nid] = R
        hterms = {H: 1.0}
        for g in net.sgs:
            hterms[self.v["x"][g.id, nid]] = -g.inertia * g.capacity
        hs_vars = []
        farms = [g for g in net.gens if g.kind in (VSG, IBG) and g.si_h_max > 0]
        for g in farms:
            ub = g.si_h_max * g.capacity if prm.si_enabled else 0.0
            hs = p.add_var(f"hs[{g.id}|{nid}]", 0.0, ub)
            self.v["hs"][g.id, nid] = hs
            hterms[hs] = -1.0
            hs_vars.append((g, hs))
        p.add_eq(hterms, 0.0, f"Hdef[{nid}]")
        handles.append(f"Hdef[{nid}]")
        rterms = {R: 1.0}
        for g in net.sgs:
            rg = p.add_var(f"rg[{g.id}|{nid}]", 0.0, g.pfr_max)
            self.v["rg"][g.id, nid] = rg
            rterms[rg] = -1.0
            p.add_le({rg: 1.0, self.v["x"][g.id, nid]: -g.pfr_max}, 0.0,
                     f"rgcommit[{g.id}|{nid}]")
            p.add_le({rg: 1.0, self.v["pg"][g.id, nid]: 1.0,
                      self.v["x"][g.id, nid]: -g.capacity}, 0.0,
                     f"rghead[{g.id}|{nid}]")
        p.add_eq(rterms, 0.0, f"Rdef[{nid}]")
        handles.append(f"Rdef[{nid}]")
        if prm.enable_nadir:
            u = [Affine.const_of(math.sqrt(x1sq))]
            for g, hs in hs_vars:
                u.append(Affine.of(hs, math.sqrt(
                    prm.delta_p_loss * prm.t_delivery * g.gamma_si / 4.0)))
            cone = f"nadir[{nid}]"
            p.add_rsoc(Affine.of(H, 1.0 / math.sqrt(2.0)),
                       Affine.of(R, 1.0 / math.sqrt(2.0)), u, cone)
            handles.append(cone)
        if prm.enable_ss:
            p.add_ge({R: 1.0}, prm.delta_p_loss - d_damp * prm.f_ss_lim,
                     f"ssfreq[{nid}]")
            handles.append(f"ssfreq[{nid}]")
        if prm.enable_rocof:
            p.add_ge({H: 1.0}, prm.delta_p_loss * prm.f0 / (2.0 * prm.rocof_lim),
                     f"rocof[{nid}]")
            handles.append(f"rocof[{nid}]")
        return handles

    # -- assembly ------------------------------------------------------------
    def build(self) -> ConicProgram:
        if self.built:
            return self.program
        for n in self.tree.nodes:
            self._declare_node_vars(n)
        with_vs = self.params.case_flag != "base"
        for n in self.tree.nodes:
            self.add_power_flow(n)
            self.add_uc_standard(n)
            self.add_ibg_capacity(n)
            if with_vs and len(self.net.ibg_ids) > 1:
                self.add_product_linearizations(n)
            if with_vs:
                self.add_voltage_stability(n)
            self.add_frequency(n)
        # objective
        coefs = objective_coefficients(self.tree, self.net, self.params.shed_cost)
        terms: dict[int, float] = {}
        for (kind, key, nid), c in coefs.items():
            if kind == "x":
                idx = self.v["x"][key, nid]
            elif kind == "u":
                idx = self.v["u"][key, nid]
            elif kind == "p":
                idx = (self.v["pg"].get((key, nid))
                       if (key, nid) in self.v["pg"] else self.v["pc"][key, nid])
            else:
                idx = self.v["shed"].get((key, nid))
                if idx is None:
                    continue
            terms[idx] = terms.get(idx, 0.0) + c
        self.program.set_objective(terms)
        self.built = True
        return self.program

    def solve(self, incumbent_hint: Mapping[str, float] | None = None) -> SolveResult:
        self.build()
        return solve_misocp(self.program, self.params.solver, incumbent_hint)

    def commitment_hint(self, prev: Schedule) -> dict[str, float]:
        """Warm-start values: the previous schedule's most probable path,
        shifted one hour earlier."""
        path = []
        node = prev.tree.root
        while True:
            path.append(node)
            if not node.children:
                break
            node = max((prev.tree.nodes[c] for c in node.children),
                       key=lambda m: (m.prob, -m.id))
        profile = {n.t_index: prev.commit[n.id] for n in path}
        last_t = max(profile)
        hint = {}
        for n in self.tree.nodes:
            src = profile[min(n.t_index + 1, last_t)]
            for g in self.net.sg_ids:
                hint[f"x[{g}|{n.id}]"] = float(src.get(g, 0))
        return hint

    def extract_schedule(self, result: SolveResult) -> Schedule:
        if result.x is None:
            raise ValueError(f"no solution to extract (status {result.status})")
        x = result.x
        net = self.net

        def val(kind, *key) -> float:
            idx = self.v[kind].get(key if len(key) > 1 else key[0])
            return float(x[idx]) if idx is not None else 0.0

        commit, startup, p_gen, q_gen, p_ibg, q_ibg = {}, {}, {}, {}, {}, {}
        shed, pfr, inertia, h_si = {}, {}, {}, {}
        for n in self.tree.nodes:
            nid = n.id
            commit[nid] = {g: int(round(val("x", g, nid))) for g in net.sg_ids}
            startup[nid] = {g: max(val("u", g, nid), 0.0) for g in net.sg_ids}
            p_gen[nid] = {g.id: val("pg", g.id, nid) for g in net.sgs + net.vsgs}
            q_gen[nid] = {g.id: val("qg", g.id, nid) for g in net.sgs + net.vsgs}
            p_ibg[nid] = {g.id: val("pc", g.id, nid) for g in net.ibgs}
            q_ibg[nid] = {g.id: val("qc", g.id, nid) for g in net.ibgs}
            shed[nid] = {b.id: val("shed", b.id, nid) for b in net.buses
                         if (b.id, nid) in self.v["shed"]}
            pfr[nid] = val("R", nid)
            inertia[nid] = val("H", nid)
            h_si[nid] = {g.id: val("hs", g.id, nid) for g in net.gens
                         if (g.id, nid) in self.v["hs"]}
        return Schedule(tree=self.tree, commit=commit, startup=startup,
                        p_gen=p_gen, q_gen=q_gen, p_ibg=p_ibg, q_ibg=q_ibg,
                        shed=shed, pfr=pfr, inertia=inertia, h_si=h_si,
                        objective=result.objective,
                        initial_commit=dict(self.initial.x0),
                        solve_status=result.status, mip_gap=result.mip_gap,
                        node_count=result.node_count, wall_time=result.wall_time)

    def line_flows(self, result: SolveResult, node_id: int) -> list[dict]:
        """Physical directed flows recovered from the (c, s) solution."""
        x = result.x
        out = []
        for k, ln in enumerate(self.net.lines):
            rec = {"line": k, "from": ln.from_bus, "to": ln.to_bus}
            for d, own in (("f", ln.from_bus), ("r", ln.to_bus)):
                cown = x[self.v["cii"][own, node_id]]
                pf = x[self.v["pf"][k, d, node_id]] + ln.g * cown
                qf = x[self.v["qf"][k, d, node_id]] \
                    - (ln.b + 0.5 * ln.b_charging) * cown
                rec[f"p_{d}"] = float(pf)
                rec[f"q_{d}"] = float(qf)
            out.append(rec)
        return out
