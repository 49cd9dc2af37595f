"""Per-unit network model: admittance/impedance matrices and strength metrics.

Conventions used throughout:
  * all powers and impedances are per-unit on the system MVA base,
  * a branch is described by its series admittance g + jb (b < 0 for an
    inductive line) plus total line-charging susceptance,
  * generator reactances enter the admittance matrix as 1/(jX) = -j/X,
    scaled by the unit's commitment (binary for SGs, online fraction
    alpha for grid-forming VSGs).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

SLACK = "slack"
GENERATOR = "generator"
LOAD = "load"

SG = "SG"
VSG = "VSG"
IBG = "IBG"

# condition-number estimate above which Y is treated as singular
COND_LIMIT = 1e12


class TopologyError(ValueError):
    """Network graph is unusable (empty, disconnected, bad references)."""


class SingularStateError(ValueError):
    """Y = Y0 + Yg is singular for the given commitment state."""

    def __init__(self, message: str, state: "CommitmentState | None" = None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str = LOAD
    v_min: float = 0.94
    v_max: float = 1.06
    p_demand: float = 0.0
    q_demand: float = 0.0
    shunt_g: float = 0.0
    shunt_b: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.v_min <= self.v_max):
            raise ValueError(f"bus {self.id}: need 0 < v_min <= v_max")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    g: float  # series conductance
    b: float  # series susceptance (negative for inductive branches)
    b_charging: float = 0.0  # total shunt charging susceptance
    rate: float = float("inf")  # apparent-power thermal limit

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise ValueError("line endpoints must differ")
        if self.b == 0.0:
            raise ValueError("line series susceptance must be nonzero")

    @property
    def x_series(self) -> float:
        """Series reactance recovered from the admittance."""
        return -self.b / (self.g**2 + self.b**2)

    @property
    def r_series(self) -> float:
        return self.g / (self.g**2 + self.b**2)

    @staticmethod
    def from_impedance(from_bus, to_bus, r, x, b_charging=0.0, rate=float("inf")) -> "Line":
        den = r * r + x * x
        if den == 0.0:
            raise ValueError("line impedance must be nonzero")
        return Line(from_bus, to_bus, r / den, -x / den, b_charging, rate)


@dataclass(frozen=True)
class CostTerms:
    startup: float = 0.0  # per start
    no_load: float = 0.0  # per hour committed
    marginal: float = 0.0  # per MWh

    def __post_init__(self):
        if min(self.startup, self.no_load, self.marginal) < 0:
            raise ValueError("cost terms must be nonnegative")


@dataclass(frozen=True)
class GenUnit:
    id: str
    kind: str
    bus: int
    capacity: float  # rated active power, p.u. on system base
    x_g: float = 0.3  # source reactance, SG/VSG only
    p_min: float = 0.0
    q_min: float = 0.0
    q_max: float = 0.0
    s_max: float | None = None  # apparent limit, IBG only
    inertia: float = 0.0  # H_g in s on unit base, SG only
    cost: CostTerms = field(default_factory=CostTerms)
    min_up: int = 1
    min_down: int = 1
    ramp_up: float = float("inf")  # p.u./h
    ramp_down: float = float("inf")
    pfr_max: float = 0.0  # primary-frequency-response ceiling, p.u.
    gamma_si: float = 0.1  # synthetic-inertia damping penalty (wind only)
    si_h_max: float = 0.0  # synthetic-inertia ceiling, p.u.-s (wind only)

    def __post_init__(self):
        if self.kind not in (SG, VSG, IBG):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind in (SG, VSG) and self.x_g <= 0:
            raise ValueError(f"unit {self.id}: X_g must be positive")
        if self.kind == IBG and (self.s_max is None or self.s_max <= 0):
            raise ValueError(f"unit {self.id}: IBG needs a positive S_max")


@dataclass(frozen=True)
class CommitmentState:
    """On/off status per SG and online-capacity fraction per VSG.

    Arrays follow the order of ``NetworkModel.sg_ids`` / ``vsg_ids``.
    """

    x: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        a = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "alpha", a)
        if x.size and not np.all((x == 0) | (x == 1)):
            raise ValueError("SG commitments must be binary")
        if a.size and (a.min() < 0 or a.max() > 1):
            raise ValueError("VSG online fractions must lie in [0, 1]")

    def describe(self) -> str:
        return f"x={self.x.astype(int).tolist()}, alpha={np.round(self.alpha, 4).tolist()}"


class NetworkModel:
    """Immutable per-unit description of buses, branches and the fleet."""

    def __init__(self, buses: Sequence[Bus], lines: Sequence[Line],
                 gens: Sequence[GenUnit], base_mva: float = 100.0,
                 name: str = "network"):
        self.name = name
        self.base_mva = float(base_mva)
        self.buses = list(buses)
        self.lines = list(lines)
        self.gens = list(gens)

        self.bus_index = {b.id: i for i, b in enumerate(self.buses)}
        if len(self.bus_index) != len(self.buses):
            raise TopologyError("duplicate bus ids")
        slacks = [b for b in self.buses if b.kind == SLACK]
        if len(slacks) != 1:
            raise TopologyError(f"need exactly one slack bus, found {len(slacks)}")
        self.slack_bus = slacks[0].id

        for ln in self.lines:
            if ln.from_bus not in self.bus_index or ln.to_bus not in self.bus_index:
                raise TopologyError(f"line {ln.from_bus}-{ln.to_bus} references unknown bus")
        for g in self.gens:
            if g.bus not in self.bus_index:
                raise TopologyError(f"unit {g.id} references unknown bus {g.bus}")

        self.sgs = [g for g in self.gens if g.kind == SG]
        self.vsgs = [g for g in self.gens if g.kind == VSG]
        self.ibgs = [g for g in self.gens if g.kind == IBG]
        self.sg_ids = [g.id for g in self.sgs]
        self.vsg_ids = [g.id for g in self.vsgs]
        self.ibg_ids = [g.id for g in self.ibgs]
        self.unit = {g.id: g for g in self.gens}
        if len(self.unit) != len(self.gens):
            raise ValueError("duplicate unit ids")

    # -- mappings ---------------------------------------------------------
    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_of(self, unit_id: str) -> int:
        """Bus index (not id) hosting the given unit."""
        return self.bus_index[self.unit[unit_id].bus]

    def all_off(self) -> CommitmentState:
        return CommitmentState(np.zeros(len(self.sgs)), np.zeros(len(self.vsgs)))

    def all_on(self) -> CommitmentState:
        return CommitmentState(np.ones(len(self.sgs)), np.ones(len(self.vsgs)))

    def state(self, x: Mapping[str, float] | Sequence[float] | None = None,
              alpha: Mapping[str, float] | Sequence[float] | None = None) -> CommitmentState:
        """Build a CommitmentState from per-unit mappings or plain sequences."""
        if isinstance(x, Mapping):
            xv = np.array([x.get(g, 0.0) for g in self.sg_ids], dtype=float)
        else:
            xv = np.ones(len(self.sgs)) if x is None else np.asarray(x, dtype=float)
        if isinstance(alpha, Mapping):
            av = np.array([alpha.get(g, 0.0) for g in self.vsg_ids], dtype=float)
        else:
            av = np.ones(len(self.vsgs)) if alpha is None else np.asarray(alpha, dtype=float)
        if xv.shape != (len(self.sgs),) or av.shape != (len(self.vsgs),):
            raise ValueError("commitment dimensions do not match the fleet")
        return CommitmentState(xv, av)

    def scale_ibg_capacity(self, total_capacity: float) -> "NetworkModel":
        """Copy of the network with IBG capacity rescaled to the given total,
        split proportionally to the existing capacities. S_max follows."""
        cur = sum(g.capacity for g in self.ibgs)
        if cur <= 0:
            raise ValueError("network has no IBG capacity to scale")
        k = total_capacity / cur
        gens = [replace(g, capacity=g.capacity * k, s_max=(g.s_max or g.capacity) * k)
                if g.kind == IBG else g for g in self.gens]
        return NetworkModel(self.buses, self.lines, gens, self.base_mva, self.name)

    # -- admittance assembly ----------------------------------------------
    def check_connected(self):
        if not self.lines:
            raise TopologyError("network has no lines")
        n = self.n_bus
        adj = [[] for _ in range(n)]
        for ln in self.lines:
            i, j = self.bus_index[ln.from_bus], self.bus_index[ln.to_bus]
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            for k in adj[stack.pop()]:
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        if len(seen) != n:
            raise TopologyError("network is not connected")

    def build_y0(self, neglect_resistance: bool = False) -> np.ndarray:
        """Bus admittance matrix of the passive network (lines + shunts).

        With ``neglect_resistance`` the series elements are rebuilt from the
        reactance alone, which is the convention used by the stability path.
        """
        self.check_connected()
        n = self.n_bus
        y0 = np.zeros((n, n), dtype=complex)
        for ln in self.lines:
            i, j = self.bus_index[ln.from_bus], self.bus_index[ln.to_bus]
            if neglect_resistance:
                y = 1.0 / (1j * ln.x_series)
            else:
                y = complex(ln.g, ln.b)
            y0[i, i] += y + 0.5j * ln.b_charging
            y0[j, j] += y + 0.5j * ln.b_charging
            y0[i, j] -= y
            y0[j, i] -= y
        for b in self.buses:
            k = self.bus_index[b.id]
            y0[k, k] += complex(b.shunt_g, b.shunt_b)
        return y0

    def build_yg(self, state: CommitmentState) -> np.ndarray:
        """Diagonal admittance increment from committed (V)SG reactances."""
        if state.x.shape != (len(self.sgs),) or state.alpha.shape != (len(self.vsgs),):
            raise ValueError("commitment dimensions do not match the fleet")
        diag = np.zeros(self.n_bus, dtype=complex)
        for g, xg in zip(self.sgs, state.x):
            diag[self.bus_index[g.bus]] += xg / (1j * g.x_g)
        for g, a in zip(self.vsgs, state.alpha):
            diag[self.bus_index[g.bus]] += a / (1j * g.x_g)
        return np.diag(diag)

    def impedance_view(self, state: CommitmentState,
                       neglect_resistance: bool = True) -> "ImpedanceView":
        """Invert Y = Y0 + Yg for the given commitment state."""
        y0 = self.build_y0(neglect_resistance=neglect_resistance)
        yg = self.build_yg(state)
        y = y0 + yg
        try:
            z = np.linalg.inv(y)
        except np.linalg.LinAlgError as exc:
            raise SingularStateError(
                f"admittance matrix singular for state {state.describe()}", state) from exc
        cond_est = np.linalg.norm(y, 1) * np.linalg.norm(z, 1)
        if not np.isfinite(cond_est) or cond_est > COND_LIMIT:
            raise SingularStateError(
                f"admittance matrix near-singular (cond~{cond_est:.2e}) "
                f"for state {state.describe()}", state)
        residual = float(np.abs(z @ y - np.eye(self.n_bus)).max())
        ibg_bus = {g.id: self.bus_index[g.bus] for g in self.ibgs}
        gen_bus = {g.id: self.bus_index[g.bus] for g in self.gens if g.kind != IBG}
        return ImpedanceView(y0=y0, yg=yg, z=z, residual=residual, state=state,
                             ibg_bus=ibg_bus, gen_bus=gen_bus)

    def scr(self, state: CommitmentState, ibg_id: str,
            v_grid: float = 1.0) -> float:
        """Short-circuit ratio |V_G|^2 / (|Z_cc| * capacity) at an IBG bus."""
        unit = self.unit[ibg_id]
        if unit.capacity <= 0:
            raise ValueError(f"unit {ibg_id} has nonpositive capacity")
        view = self.impedance_view(state)
        return v_grid**2 * view.gamma_denom(ibg_id) / unit.capacity


@dataclass(frozen=True)
class ImpedanceView:
    """Z = (Y0 + Yg)^-1 together with the magnitude ratios used by the
    stability criterion. Immutable; safe to share."""

    y0: np.ndarray
    yg: np.ndarray
    z: np.ndarray
    residual: float
    state: CommitmentState
    ibg_bus: Mapping[str, int]
    gen_bus: Mapping[str, int]

    def z_cc(self, c: str) -> complex:
        k = self.ibg_bus[c]
        return self.z[k, k]

    def z_cross(self, c: str, c2: str) -> complex:
        return self.z[self.ibg_bus[c], self.ibg_bus[c2]]

    def zmag_ratio(self, c: str, c2: str) -> float:
        """|Z_{cc'}| / |Z_cc| referred to IBG c's bus."""
        return abs(self.z_cross(c, c2)) / abs(self.z_cc(c))

    def gamma_denom(self, c: str) -> float:
        """1 / |Z_cc|, the strength term feeding Gamma and the SCR."""
        return 1.0 / abs(self.z_cc(c))
