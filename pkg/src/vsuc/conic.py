"""Solver-agnostic MISOCP intermediate representation and a deterministic
branch-and-bound driver.

A ConicProgram holds continuous/binary variables with bounds, a linear
objective (minimization), linear equality/inequality rows, and affine
second-order cone memberships (standard ||u|| <= t and rotated
||u||^2 <= 2 v w). Continuous relaxations are delegated to Clarabel, an
interior-point conic solver; rotated cones are mapped onto standard ones
via (v + w, sqrt(2) u, v - w). The program serializes to JSON so other
solvers can be differential-tested against the same instance.

Branch and bound uses best-bound node selection with deterministic
tie-breaking on node ids, branching on the most fractional binary within
the highest declared branch priority (or pseudo-costs when configured).
Integral incumbents are polished by re-solving with the binaries fixed.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import clarabel
import numpy as np
from scipy import sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"
TOL_LIMIT = "tol_limit"

EQ = "=="
LE = "<="


@dataclass
class Affine:
    """Sparse affine expression: sum(terms[i] * x_i) + const."""

    terms: dict[int, float] = field(default_factory=dict)
    const: float = 0.0

    @staticmethod
    def of(var: int, coef: float = 1.0, const: float = 0.0) -> "Affine":
        return Affine({var: coef}, const)

    @staticmethod
    def const_of(value: float) -> "Affine":
        return Affine({}, value)

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(c * x[i] for i, c in self.terms.items())

    def scaled(self, k: float) -> "Affine":
        return Affine({i: k * c for i, c in self.terms.items()}, k * self.const)


@dataclass
class Variable:
    name: str
    lb: float = -math.inf
    ub: float = math.inf
    binary: bool = False
    branch_priority: int = 0


@dataclass
class LinRow:
    terms: dict[int, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass
class SocCone:
    t: Affine
    u: list[Affine]
    name: str = ""


@dataclass
class RsocCone:
    v: Affine
    w: Affine
    u: list[Affine]
    name: str = ""


@dataclass
class ViolationReport:
    rows: list[tuple[str, float]]
    bounds: list[tuple[str, float]]
    cones: list[tuple[str, float]]
    binaries: list[tuple[str, float]]

    @property
    def max_violation(self) -> float:
        vals = [v for _, v in self.rows + self.bounds + self.cones]
        return max(vals) if vals else 0.0

    @property
    def max_binary_gap(self) -> float:
        return max((v for _, v in self.binaries), default=0.0)


@dataclass
class SolveResult:
    status: str
    objective: float | None
    x: np.ndarray | None
    best_bound: float
    mip_gap: float = 0.0
    node_count: int = 0
    wall_time: float = 0.0
    message: str = ""
    node_log: list[tuple[int, float, float]] = field(default_factory=list)

    def value(self, program: "ConicProgram", name: str) -> float:
        return float(self.x[program.index[name]])


@dataclass
class BnBConfig:
    integrality_tol: float = 1e-5
    feasibility_tol: float = 1e-6
    rel_gap: float = 1e-3
    branching: str = "most_fractional"  # or "pseudo_cost"
    node_limit: int = 100_000
    time_limit: float = math.inf  # seconds
    root_rounding_probe: bool = True
    dive_probe: bool = True  # fix-and-dive heuristic for the first incumbent
    dive_rounds: int = 40

    def __post_init__(self):
        if min(self.integrality_tol, self.feasibility_tol, self.rel_gap) <= 0:
            raise ValueError("tolerances must be positive")
        if self.branching not in ("most_fractional", "pseudo_cost"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


class ConicProgram:
    """Mutable builder; freeze by compiling (done lazily by the solvers)."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.variables: list[Variable] = []
        self.index: dict[str, int] = {}
        self.rows: list[LinRow] = []
        self.cones: list[SocCone | RsocCone] = []
        self.obj_terms: dict[int, float] = {}
        self.obj_const: float = 0.0

    # -- building ----------------------------------------------------------
    def add_var(self, name: str, lb: float = -math.inf, ub: float = math.inf,
                binary: bool = False, branch_priority: int = 0) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name!r}")
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb > ub")
        self.variables.append(Variable(name, lb, ub, binary, branch_priority))
        self.index[name] = len(self.variables) - 1
        return self.index[name]

    def _check_terms(self, terms: Mapping[int, float]):
        for i in terms:
            if not 0 <= i < len(self.variables):
                raise ValueError(f"row references unknown variable index {i}")

    def add_eq(self, terms: Mapping[int, float], rhs: float, name: str = ""):
        self._check_terms(terms)
        self.rows.append(LinRow(dict(terms), EQ, float(rhs), name))

    def add_le(self, terms: Mapping[int, float], rhs: float, name: str = ""):
        self._check_terms(terms)
        self.rows.append(LinRow(dict(terms), LE, float(rhs), name))

    def add_ge(self, terms: Mapping[int, float], rhs: float, name: str = ""):
        self.add_le({i: -c for i, c in terms.items()}, -rhs, name)

    def add_soc(self, t: Affine, u: Sequence[Affine], name: str = ""):
        for a in list(u) + [t]:
            self._check_terms(a.terms)
        self.cones.append(SocCone(t, list(u), name))

    def add_rsoc(self, v: Affine, w: Affine, u: Sequence[Affine], name: str = ""):
        for a in list(u) + [v, w]:
            self._check_terms(a.terms)
        self.cones.append(RsocCone(v, w, list(u), name))

    def set_objective(self, terms: Mapping[int, float], const: float = 0.0):
        self._check_terms(terms)
        for c in terms.values():
            if not math.isfinite(c):
                raise ValueError("objective coefficients must be finite")
        self.obj_terms = dict(terms)
        self.obj_const = float(const)

    def add_objective_term(self, var: int, coef: float):
        self.obj_terms[var] = self.obj_terms.get(var, 0.0) + coef

    @property
    def binary_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.binary]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    # -- validation --------------------------------------------------------
    def point_from(self, values: Mapping[str, float]) -> np.ndarray:
        x = np.zeros(self.n_vars)
        for k, v in values.items():
            x[self.index[k]] = v
        return x

    def validate(self, point: np.ndarray | Mapping[str, float]) -> ViolationReport:
        """Signed violations per row, bound and cone (<= 0 means satisfied;
        equality rows report |residual|)."""
        x = self.point_from(point) if isinstance(point, Mapping) else np.asarray(point, float)
        if x.shape != (self.n_vars,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.n_vars},)")
        rows = []
        for r in self.rows:
            lhs = sum(c * x[i] for i, c in r.terms.items())
            rows.append((r.name, abs(lhs - r.rhs) if r.sense == EQ else lhs - r.rhs))
        bounds = []
        for i, v in enumerate(self.variables):
            if math.isfinite(v.ub):
                bounds.append((f"{v.name}<=ub", x[i] - v.ub))
            if math.isfinite(v.lb):
                bounds.append((f"{v.name}>=lb", v.lb - x[i]))
        cones = []
        for c in self.cones:
            if isinstance(c, SocCone):
                un = math.hypot(*[a.value(x) for a in c.u]) if c.u else 0.0
                cones.append((c.name, un - c.t.value(x)))
            else:
                vv, ww = c.v.value(x), c.w.value(x)
                uu = sum(a.value(x) ** 2 for a in c.u)
                cones.append((c.name, max(uu - 2.0 * vv * ww, -vv, -ww)))
        binaries = [(self.variables[i].name, abs(x[i] - round(x[i])))
                    for i in self.binary_indices]
        return ViolationReport(rows, bounds, cones, binaries)

    def objective_value(self, x: np.ndarray) -> float:
        return self.obj_const + sum(c * x[i] for i, c in self.obj_terms.items())

    # -- serialization -----------------------------------------------------
    def _affine_dict(self, a: Affine) -> dict:
        return {"terms": {self.variables[i].name: c for i, c in a.terms.items()},
                "const": a.const}

    def to_dict(self) -> dict:
        def cone_dict(c):
            if isinstance(c, SocCone):
                return {"type": "soc", "name": c.name, "t": self._affine_dict(c.t),
                        "u": [self._affine_dict(a) for a in c.u]}
            return {"type": "rsoc", "name": c.name, "v": self._affine_dict(c.v),
                    "w": self._affine_dict(c.w), "u": [self._affine_dict(a) for a in c.u]}

        return {
            "name": self.name,
            "variables": [{"name": v.name, "lb": v.lb, "ub": v.ub, "binary": v.binary,
                           "branch_priority": v.branch_priority}
                          for v in self.variables],
            "objective": {"terms": {self.variables[i].name: c
                                    for i, c in self.obj_terms.items()},
                          "const": self.obj_const},
            "rows": [{"name": r.name, "sense": r.sense, "rhs": r.rhs,
                      "terms": {self.variables[i].name: c for i, c in r.terms.items()}}
                     for r in self.rows],
            "cones": [cone_dict(c) for c in self.cones],
        }

    @staticmethod
    def from_dict(d: dict) -> "ConicProgram":
        p = ConicProgram(d.get("name", "program"))
        for v in d["variables"]:
            p.add_var(v["name"], v.get("lb", -math.inf), v.get("ub", math.inf),
                      v.get("binary", False), v.get("branch_priority", 0))

        def aff(a) -> Affine:
            return Affine({p.index[k]: c for k, c in a["terms"].items()}, a["const"])

        for r in d["rows"]:
            terms = {p.index[k]: c for k, c in r["terms"].items()}
            (p.add_eq if r["sense"] == EQ else p.add_le)(terms, r["rhs"], r["name"])
        for c in d["cones"]:
            if c["type"] == "soc":
                p.add_soc(aff(c["t"]), [aff(a) for a in c["u"]], c["name"])
            else:
                p.add_rsoc(aff(c["v"]), aff(c["w"]), [aff(a) for a in c["u"]], c["name"])
        p.set_objective({p.index[k]: c for k, c in d["objective"]["terms"].items()},
                        d["objective"]["const"])
        return p

    def dump_json(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @staticmethod
    def load_json(path: str | Path) -> "ConicProgram":
        return ConicProgram.from_dict(json.loads(Path(path).read_text()))


# -- Clarabel backend --------------------------------------------------------

_BIG = 1e18  # stand-in for infinite bounds in the compiled block


class _Compiled:
    """One-time CSC assembly; per-node solves only rewrite entries of b."""

    def __init__(self, program: ConicProgram, relax_binaries: bool = True):
        self.program = program
        n = program.n_vars
        rows_i, cols, vals, b, cones = [], [], [], [], []
        r = 0
        # equalities
        n_eq = 0
        for row in program.rows:
            if row.sense == EQ:
                for i, c in row.terms.items():
                    rows_i.append(r), cols.append(i), vals.append(c)
                b.append(row.rhs)
                r += 1
                n_eq += 1
        if n_eq:
            cones.append(clarabel.ZeroConeT(n_eq))
        # inequalities
        n_in = 0
        for row in program.rows:
            if row.sense == LE:
                for i, c in row.terms.items():
                    rows_i.append(r), cols.append(i), vals.append(c)
                b.append(row.rhs)
                r += 1
                n_in += 1
        # bound rows for finite bounds only (huge stand-ins break the
        # solver's equilibration); binaries always get both, so branching
        # can rewrite them in place
        self.ub_row = np.full(n, -1, dtype=int)
        self.lb_row = np.full(n, -1, dtype=int)
        for i, v in enumerate(program.variables):
            if math.isfinite(v.ub):
                rows_i.append(r), cols.append(i), vals.append(1.0)
                b.append(v.ub)
                self.ub_row[i] = r
                r += 1
                n_in += 1
            if math.isfinite(v.lb):
                rows_i.append(r), cols.append(i), vals.append(-1.0)
                b.append(-v.lb)
                self.lb_row[i] = r
                r += 1
                n_in += 1
        if n_in:
            cones.append(clarabel.NonnegativeConeT(n_in))
        # cones: s = b - A x must equal the affine entries
        for c in program.cones:
            if isinstance(c, SocCone):
                entries = [c.t] + c.u
            else:
                # rotated -> standard: (v + w, sqrt(2) u..., v - w)
                vp = Affine(dict(c.v.terms), c.v.const)
                for i, coef in c.w.terms.items():
                    vp.terms[i] = vp.terms.get(i, 0.0) + coef
                vp.const += c.w.const
                vm = Affine(dict(c.v.terms), c.v.const)
                for i, coef in c.w.terms.items():
                    vm.terms[i] = vm.terms.get(i, 0.0) - coef
                vm.const -= c.w.const
                entries = [vp] + [a.scaled(math.sqrt(2.0)) for a in c.u] + [vm]
            for a in entries:
                for i, coef in a.terms.items():
                    rows_i.append(r), cols.append(i), vals.append(-coef)
                b.append(a.const)
                r += 1
            cones.append(clarabel.SecondOrderConeT(len(entries)))

        self.A = sparse.csc_matrix((vals, (rows_i, cols)), shape=(r, n))
        self.b0 = np.array(b)
        self.cones = cones
        self.q = np.zeros(n)
        for i, c in program.obj_terms.items():
            self.q[i] = c
        self.P = sparse.csc_matrix((n, n))
        self.relax_binaries = relax_binaries

    def solve(self, overrides: Mapping[int, tuple[float, float]] | None = None,
              settings: clarabel.DefaultSettings | None = None) -> SolveResult:
        b = self.b0.copy()
        if overrides:
            for i, (lb, ub) in overrides.items():
                if self.ub_row[i] < 0 or self.lb_row[i] < 0:
                    raise ValueError(
                        f"variable {self.program.variables[i].name!r} has no "
                        "bound rows to override")
                b[self.ub_row[i]] = ub
                b[self.lb_row[i]] = -lb
        if settings is None:
            settings = clarabel.DefaultSettings()
            settings.verbose = False
        solver = clarabel.DefaultSolver(self.P, self.q, self.A, b,
                                        self.cones, settings)
        sol = solver.solve()
        status = str(sol.status)
        x = np.asarray(sol.x)
        obj = float(sol.obj_val) + self.program.obj_const
        if status in ("Solved", "AlmostSolved"):
            return SolveResult(OPTIMAL, obj, x, best_bound=obj,
                               wall_time=sol.solve_time)
        if "PrimalInfeasible" in status:
            return SolveResult(INFEASIBLE, None, None, best_bound=math.inf,
                               message=status, wall_time=sol.solve_time)
        if "DualInfeasible" in status:
            return SolveResult(UNBOUNDED, None, None, best_bound=-math.inf,
                               message=status, wall_time=sol.solve_time)
        return SolveResult(TOL_LIMIT, None, None, best_bound=-math.inf,
                           message=status, wall_time=sol.solve_time)


def solve_relaxation(program: ConicProgram,
                     bound_overrides: Mapping[int, tuple[float, float]] | None = None,
                     compiled: _Compiled | None = None) -> SolveResult:
    """Solve the continuous relaxation (binaries relaxed to their bounds)."""
    comp = compiled or _Compiled(program)
    return comp.solve(bound_overrides)


# -- branch and bound --------------------------------------------------------

@dataclass(order=True)
class _Node:
    bound: float
    nid: int
    overrides: dict[int, tuple[float, float]] = field(compare=False)
    x: np.ndarray = field(compare=False)
    depth: int = field(compare=False, default=0)


def _fractional(program: ConicProgram, x: np.ndarray, tol: float) -> list[tuple[int, float]]:
    out = []
    for i in program.binary_indices:
        d = abs(x[i] - round(x[i]))
        if d > tol:
            out.append((i, d))
    return out


def _dive_probe(program: ConicProgram, comp: "_Compiled", binaries: list[int],
                x_root: np.ndarray, config: BnBConfig, try_fixed) -> None:
    """Rounding dive for a first incumbent.

    With several branch-priority groups (e.g. one per scheduling hour) the
    binaries are fixed group by group, re-solving in between so later
    groups round against an updated relaxation; an infeasible group fix is
    retried rounded up before giving up. With a single group this reduces
    to fix-and-dive on the most fractional variable.
    """
    groups = sorted({program.variables[i].branch_priority for i in binaries},
                    reverse=True)
    x_cur = x_root
    if len(groups) > 1:
        fixed: dict[int, tuple[float, float]] = {}
        for gp in groups:
            members = [i for i in binaries
                       if program.variables[i].branch_priority == gp]
            for i in members:
                v = 1.0 if x_cur[i] > 0.5 else 0.0
                fixed[i] = (v, v)
            r = comp.solve(fixed)
            if r.status != OPTIMAL:
                for i in members:
                    v = 1.0 if x_cur[i] > config.integrality_tol else 0.0
                    fixed[i] = (v, v)
                r = comp.solve(fixed)
                if r.status != OPTIMAL:
                    return
            x_cur = r.x
        try_fixed({i: x_cur[i] for i in binaries})
        return
    fixed = {}
    for _ in range(config.dive_rounds):
        moved = False
        for i in binaries:
            if i not in fixed and min(x_cur[i], 1.0 - x_cur[i]) < 0.1:
                fixed[i] = (round(x_cur[i]), round(x_cur[i]))
                moved = True
        open_frac = [(x_cur[i], i) for i in binaries if i not in fixed]
        if not open_frac:
            try_fixed({i: x_cur[i] for i in binaries})
            return
        if not moved:
            _, i = max(open_frac)
            fixed[i] = (1.0, 1.0)
        r = comp.solve(fixed)
        if r.status != OPTIMAL:
            return
        x_cur = r.x
        if not _fractional(program, x_cur, config.integrality_tol):
            try_fixed({i: x_cur[i] for i in binaries})
            return


def solve_misocp(program: ConicProgram, config: BnBConfig | None = None,
                 incumbent_hint: Mapping[str, float] | None = None) -> SolveResult:
    """Branch-and-bound over the binary variables.

    Deterministic for a fixed config: best-bound node selection with node-id
    tie-breaks, down-branch explored before up-branch. An optional hint
    (binary name -> value) seeds the incumbent, which is how rolling-horizon
    runs warm-start consecutive solves.
    """
    config = config or BnBConfig()
    t0 = time.perf_counter()
    comp = _Compiled(program)
    binaries = program.binary_indices
    node_log: list[tuple[int, float, float]] = []

    if not binaries:
        res = comp.solve()
        res.node_count = 0
        res.wall_time = time.perf_counter() - t0
        return res

    incumbent_obj = math.inf
    incumbent_x: np.ndarray | None = None

    def try_fixed(values: Mapping[int, float]) -> None:
        """Solve with binaries pinned; adopt as incumbent if it improves."""
        nonlocal incumbent_obj, incumbent_x
        ov = {i: (float(round(v)), float(round(v))) for i, v in values.items()}
        r = comp.solve(ov)
        if r.status == OPTIMAL and r.objective < incumbent_obj - 1e-12:
            incumbent_obj, incumbent_x = r.objective, r.x

    root = comp.solve()
    if root.status == INFEASIBLE:
        return SolveResult(INFEASIBLE, None, None, math.inf, node_count=1,
                           wall_time=time.perf_counter() - t0)
    if root.status == UNBOUNDED:
        return SolveResult(UNBOUNDED, None, None, -math.inf, node_count=1,
                           wall_time=time.perf_counter() - t0)
    if root.status == TOL_LIMIT:
        return SolveResult(TOL_LIMIT, None, None, -math.inf, node_count=1,
                           message=root.message, wall_time=time.perf_counter() - t0)

    if incumbent_hint:
        try_fixed({program.index[k]: v for k, v in incumbent_hint.items()
                   if program.index.get(k) in binaries or k in program.index})

    frac = _fractional(program, root.x, config.integrality_tol)
    if not frac:
        try_fixed({i: root.x[i] for i in binaries})
        if incumbent_x is None:  # polish failed; accept the relaxation point
            incumbent_obj, incumbent_x = root.objective, root.x
        return SolveResult(OPTIMAL, incumbent_obj, incumbent_x, root.objective,
                           mip_gap=0.0, node_count=1,
                           wall_time=time.perf_counter() - t0,
                           node_log=[(0, root.objective, incumbent_obj)])
    if config.root_rounding_probe:
        try_fixed({i: root.x[i] for i in binaries})
        # commitment-style problems: rounding everything fractional up is
        # far more likely feasible than rounding to nearest
        try_fixed({i: math.ceil(root.x[i] - config.integrality_tol)
                   for i in binaries})
    if config.dive_probe:
        _dive_probe(program, comp, binaries, root.x, config, try_fixed)

    pseudo_up = {i: (0.0, 0) for i in binaries}
    pseudo_dn = {i: (0.0, 0) for i in binaries}

    def pick_branch(x: np.ndarray) -> int:
        cand = _fractional(program, x, config.integrality_tol)
        top = max(program.variables[i].branch_priority for i, _ in cand)
        cand = [(i, d) for i, d in cand if program.variables[i].branch_priority == top]
        if config.branching == "pseudo_cost":
            def score(item):
                i, d = item
                f = x[i] - math.floor(x[i])
                su, nu = pseudo_up[i]
                sd, nd = pseudo_dn[i]
                up = su / nu if nu else 1.0
                dn = sd / nd if nd else 1.0
                return (max(dn * f, 1e-8) * max(up * (1.0 - f), 1e-8), d, -i)
            return max(cand, key=score)[0]
        return max(cand, key=lambda it: (it[1], -it[0]))[0]

    heap: list[_Node] = []
    heapq.heappush(heap, _Node(root.objective, 0, {}, root.x))
    next_id = 1
    nodes_solved = 1

    def global_bound() -> float:
        lb = min((n.bound for n in heap), default=math.inf)
        return min(lb, incumbent_obj)

    status = OPTIMAL
    while heap:
        if nodes_solved >= config.node_limit:
            status = NODE_LIMIT
            break
        if time.perf_counter() - t0 > config.time_limit:
            status = NODE_LIMIT
            break
        gap_now = (incumbent_obj - global_bound()) / max(1.0, abs(incumbent_obj))
        if incumbent_x is not None and gap_now <= config.rel_gap:
            break
        node = heapq.heappop(heap)
        if node.bound >= incumbent_obj - 1e-12:
            continue
        bi = pick_branch(node.x)
        f = node.x[bi] - math.floor(node.x[bi])
        for side, (lo, hi) in (("dn", (0.0, 0.0)), ("up", (1.0, 1.0))):
            ov = dict(node.overrides)
            ov[bi] = (lo, hi)
            child = comp.solve(ov)
            nodes_solved += 1
            if child.status in (INFEASIBLE, TOL_LIMIT):
                continue
            if child.status == UNBOUNDED:
                return SolveResult(UNBOUNDED, None, None, -math.inf,
                                   node_count=nodes_solved,
                                   wall_time=time.perf_counter() - t0)
            delta = max(child.objective - node.bound, 0.0)
            if side == "dn":
                s, k = pseudo_dn[bi]
                pseudo_dn[bi] = (s + delta / max(f, 1e-9), k + 1)
            else:
                s, k = pseudo_up[bi]
                pseudo_up[bi] = (s + delta / max(1.0 - f, 1e-9), k + 1)
            if child.objective >= incumbent_obj - 1e-12:
                continue
            if not _fractional(program, child.x, config.integrality_tol):
                fixed = {i: child.x[i] for i in binaries}
                before = incumbent_obj
                try_fixed(fixed)
                if incumbent_obj >= before and child.objective < before:
                    incumbent_obj, incumbent_x = child.objective, child.x
            else:
                heapq.heappush(heap, _Node(child.objective, next_id, ov,
                                           child.x, node.depth + 1))
                next_id += 1
        node_log.append((node.nid, global_bound(), incumbent_obj))

    lb = global_bound()
    wall = time.perf_counter() - t0
    if incumbent_x is None:
        st = INFEASIBLE if status == OPTIMAL else status
        return SolveResult(st, None, None, lb, node_count=nodes_solved,
                           wall_time=wall, node_log=node_log)
    gap = (incumbent_obj - lb) / max(1.0, abs(incumbent_obj))
    return SolveResult(status, incumbent_obj, incumbent_x, lb, mip_gap=max(gap, 0.0),
                       node_count=nodes_solved, wall_time=wall, node_log=node_log)
