"""Static voltage stability at grid-following IBG buses.

Every IBG bus is reduced to an equivalent two-bus circuit: the grid side
collapses into a Thevenin voltage behind Z_cc, and power injected by the
other IBGs is referred across by impedance-magnitude ratios. Stability
requires the equivalent injection to stay inside the cone

    sqrt(p_hat^2 + q_hat^2) <= (q_hat + gamma) * (1 - margin),

with gamma = |V_G|^2 / (2 |Z_cc|). The equivalent-circuit Jacobian
determinant provides an independent singularity oracle for testing:
the cone boundary and det J = 0 coincide.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .netmodel import ImpedanceView

DEFAULT_MARGIN = 0.05


@dataclass(frozen=True)
class EquivalentTwoBus:
    ibg: str
    v_grid: complex  # Thevenin voltage of the collapsed grid side
    z_cc: complex
    i_equiv: complex  # local current plus referred IBG currents
    theta: float  # angle(v_grid) - angle(v_ibg), radians

    @property
    def v_ibg(self) -> complex:
        return self.v_grid + self.z_cc * self.i_equiv


@dataclass(frozen=True)
class EquivalentInjection:
    ibg: str
    p_hat: float
    q_hat: float
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class StabilityAssessment:
    ibg: str
    lhs: float  # sqrt(p_hat^2 + q_hat^2)
    rhs: float  # (q_hat + gamma) * (1 - margin)
    violated: bool
    margin: float
    degenerate: bool = False  # q_hat + gamma < 0


def reduce_two_bus(view: ImpedanceView, injections: np.ndarray,
                   c: str) -> EquivalentTwoBus:
    """Collapse the network seen from IBG c's bus given nodal currents.

    ``injections`` holds the complex current injected at every bus
    (typically from a solved power flow with loads folded into the
    network). The reconstruction v_grid + z_cc * i_equiv reproduces the
    full-network voltage at the IBG bus exactly.
    """
    injections = np.asarray(injections, dtype=complex)
    n = view.z.shape[0]
    if injections.shape != (n,):
        raise ValueError(f"need one current per bus ({n}), got {injections.shape}")
    k = view.ibg_bus[c]
    z_cc = view.z[k, k]
    ibg_buses = set(view.ibg_bus.values())
    v_grid = sum(view.z[k, m] * injections[m] for m in range(n) if m not in ibg_buses)
    i_equiv = injections[k]
    for c2, m in view.ibg_bus.items():
        if c2 != c:
            i_equiv += view.z[k, m] / z_cc * injections[m]
    v_ibg = v_grid + z_cc * i_equiv
    theta = float(np.angle(v_grid) - np.angle(v_ibg))
    return EquivalentTwoBus(ibg=c, v_grid=v_grid, z_cc=z_cc,
                            i_equiv=i_equiv, theta=theta)


def equivalent_injection(p: Mapping[str, float], q: Mapping[str, float],
                         view: ImpedanceView, c: str) -> EquivalentInjection:
    """Equivalent P/Q at IBG c: own output plus |Z|-ratio-weighted output
    of the other IBGs, with gamma = 1/(2 |Z_cc|) (|V_G| taken as 1)."""
    p_hat = float(p[c])
    q_hat = float(q[c])
    for c2 in view.ibg_bus:
        if c2 != c:
            r = view.zmag_ratio(c, c2)
            p_hat += r * float(p[c2])
            q_hat += r * float(q[c2])
    return EquivalentInjection(ibg=c, p_hat=p_hat, q_hat=q_hat,
                               gamma=0.5 * view.gamma_denom(c))


def check_stability(inj: EquivalentInjection,
                    margin: float = DEFAULT_MARGIN) -> StabilityAssessment:
    if not 0.0 <= margin < 1.0:
        raise ValueError("margin must lie in [0, 1)")
    lhs = math.hypot(inj.p_hat, inj.q_hat)
    cap = inj.q_hat + inj.gamma
    rhs = cap * (1.0 - margin)
    if cap < 0:
        # no stable operating point on this side; report conservatively
        return StabilityAssessment(inj.ibg, lhs, rhs, True, margin, degenerate=True)
    return StabilityAssessment(inj.ibg, lhs, rhs, lhs > rhs, margin)


def boundary_p_max(gamma: float, q_hat: float) -> float:
    """Largest p_hat on the stability boundary for a given q_hat."""
    disc = gamma * gamma + 2.0 * gamma * q_hat
    return math.sqrt(disc) if disc > 0 else 0.0


def boundary_curve(scr: float, q_range: tuple[float, float] = (0.0, 2.0),
                   n_points: int = 81) -> list[tuple[float, float]]:
    """Stability boundary (q_hat, p_hat_max) for a unit-capacity IBG.

    With |V_G| = 1 and powers in per-unit of the IBG capacity,
    gamma = SCR / 2 and the boundary is p_hat = sqrt(gamma^2 + 2 gamma q_hat).
    """
    if scr <= 0:
        raise ValueError("SCR must be positive")
    gamma = 0.5 * scr
    lo = max(q_range[0], -0.5 * gamma)
    qs = np.linspace(lo, q_range[1], n_points)
    return [(float(q), boundary_p_max(gamma, float(q))) for q in qs]


def jacobian_singularity_oracle(v_mag: float, v_grid_mag: float,
                                theta: float, z_mag: float) -> float:
    """Determinant of the equivalent two-bus power-flow Jacobian
    d(p_hat, q_hat)/d(|V|, theta). Zero at the stability boundary."""
    if z_mag <= 0:
        raise ValueError("z_mag must be positive")
    g, u = v_grid_mag, v_mag
    jac = np.array([
        [-g * math.sin(theta), -g * u * math.cos(theta)],
        [2.0 * u - g * math.cos(theta), g * u * math.sin(theta)],
    ]) / z_mag
    return float(np.linalg.det(jac))


def solve_equivalent_voltage(p_hat: float, q_hat: float, gamma: float,
                             v_grid_mag: float = 1.0,
                             tol: float = 1e-12) -> tuple[float, float]:
    """Invert the equivalent two-bus power equations for (|V|, theta).

    For fixed theta the q_hat equation is quadratic in |V|; its upper root
    defines the high-voltage branch, along which p_hat(theta) rises from 0
    at theta = 0 to a single maximum (the nose). Bisection first brackets
    the nose via the sign of dp/dtheta, then walks back toward theta = 0
    to match the requested p_hat. Feeds the Jacobian oracle in tests.
    """
    g = v_grid_mag
    z = g * g / (2.0 * gamma)

    def u_of(theta: float) -> float:
        disc = g * g * math.cos(theta) ** 2 + 4.0 * q_hat * z
        if disc < 0:
            return math.nan
        return 0.5 * (g * math.cos(theta) + math.sqrt(disc))

    def p_of(theta: float) -> float:
        u = u_of(theta)
        return -u * g * math.sin(theta) / z if math.isfinite(u) else -math.inf

    def dp(theta: float) -> float:
        """Analytic dp/dtheta along the high-voltage branch."""
        c, s = math.cos(theta), math.sin(theta)
        disc = g * g * c * c + 4.0 * q_hat * z
        if disc <= 0:
            return math.inf
        u = 0.5 * (g * c + math.sqrt(disc))
        du = -0.5 * g * s * (1.0 + g * c / math.sqrt(disc))
        return -g / z * (du * s + u * c)

    # bisect on the derivative sign to locate the nose: p rises when theta
    # moves away from 0 (dp < 0 there) and falls again approaching -pi/2
    lo, hi = -math.pi / 2 + 1e-9, -1e-9
    if dp(lo) <= 0:  # maximum sits at/beyond -pi/2: p monotone on the range
        nose = lo
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if dp(mid) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol:
                break
        nose = 0.5 * (lo + hi)

    p_nose = p_of(nose)
    if p_hat > p_nose + 1e-7:
        raise ValueError(f"p_hat={p_hat:.6f} exceeds the nose value {p_nose:.6f}")
    # high-voltage branch: p monotone from 0 at theta->0- up to the nose
    lo, hi = nose, -1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p_of(mid) < p_hat:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    theta = 0.5 * (lo + hi)
    return u_of(theta), theta


def interaction_factor(p: Mapping[str, float],
                       p_hat: Mapping[str, float],
                       zero_tol: float = 1e-9) -> tuple[float, list[str]]:
    """Mean referred-to-own active power ratio over the IBGs.

    IBGs with (near-)zero own injection are excluded from the mean and
    returned in the second element.
    """
    ratios, excluded = [], []
    for c, pc in p.items():
        if abs(pc) <= zero_tol:
            excluded.append(c)
        else:
            ratios.append((p_hat[c] - pc) / pc)
    xi = float(np.mean(ratios)) if ratios else 0.0
    return xi, excluded


# -- export helpers ----------------------------------------------------------

def write_boundary_csv(path: str | Path, scrs: Sequence[float],
                       q_range: tuple[float, float] = (0.0, 2.0),
                       n_points: int = 81):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scr", "q_hat", "p_hat_max"])
        for scr in scrs:
            for q, pm in boundary_curve(scr, q_range, n_points):
                w.writerow([scr, f"{q:.12g}", f"{pm:.12g}"])


def write_boundary_json(path: str | Path, scrs: Sequence[float],
                        q_range: tuple[float, float] = (0.0, 2.0),
                        n_points: int = 81):
    data = {str(scr): [{"q_hat": q, "p_hat_max": pm}
                       for q, pm in boundary_curve(scr, q_range, n_points)]
            for scr in scrs}
    Path(path).write_text(json.dumps(data, indent=1))
