"""Newton-Raphson AC power flow in polar form.

Serves as the independent oracle against which the SOC relaxation and the
two-bus reductions are checked. Dense algebra; per-unit throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .netmodel import NetworkModel


class PowerFlowError(RuntimeError):
    pass


@dataclass
class PfResult:
    v: np.ndarray  # complex bus voltages
    converged: bool
    iterations: int
    max_mismatch: float

    @property
    def v_mag(self) -> np.ndarray:
        return np.abs(self.v)

    @property
    def v_ang(self) -> np.ndarray:
        return np.angle(self.v)


def bus_injections(y: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Complex power injected at each bus for voltages v, S = V (Y V)*."""
    return v * np.conj(y @ v)


def solve_power_flow(net: NetworkModel,
                     p_inj: np.ndarray,
                     q_inj: np.ndarray,
                     slack_voltage: float = 1.0,
                     pv_setpoints: Mapping[int, float] | None = None,
                     tol: float = 1e-10,
                     max_iter: int = 60) -> PfResult:
    """Solve the AC power flow.

    p_inj/q_inj are net injections (generation minus demand) indexed by
    bus position. The slack bus takes the P/Q residual; buses listed in
    ``pv_setpoints`` (bus id -> |V|) hold voltage magnitude and P.
    """
    y = net.build_y0()
    n = net.n_bus
    slack = net.bus_index[net.slack_bus]
    pv = sorted(net.bus_index[b] for b in (pv_setpoints or {}))
    if slack in pv:
        raise ValueError("slack bus cannot also be a PV bus")
    pq = [i for i in range(n) if i != slack and i not in pv]
    pvpq = sorted(pv + pq)

    v = np.ones(n, dtype=complex) * 1.0
    v[slack] = slack_voltage
    for b, vs in (pv_setpoints or {}).items():
        v[net.bus_index[b]] = vs

    npvpq, npq = len(pvpq), len(pq)
    mism = np.inf
    for it in range(max_iter):
        s_calc = bus_injections(y, v)
        dp = p_inj[pvpq] - s_calc.real[pvpq]
        dq = q_inj[pq] - s_calc.imag[pq]
        f = np.concatenate([dp, dq])
        mism = float(np.abs(f).max()) if f.size else 0.0
        if mism < tol:
            return PfResult(v=v, converged=True, iterations=it, max_mismatch=mism)

        # dS/dtheta and dS/d|V| (standard complex-matrix construction)
        ibus = y @ v
        dv = np.diag(v)
        di = np.diag(ibus)
        dvn = np.diag(v / np.abs(v))
        ds_dth = 1j * dv @ np.conj(di - y @ dv)
        ds_dvm = dv @ np.conj(y @ dvn) + np.conj(di) @ dvn

        j11 = ds_dth.real[np.ix_(pvpq, pvpq)]
        j12 = ds_dvm.real[np.ix_(pvpq, pq)]
        j21 = ds_dth.imag[np.ix_(pq, pvpq)]
        j22 = ds_dvm.imag[np.ix_(pq, pq)]
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(f"Jacobian singular at iteration {it}") from exc

        th = np.angle(v)
        vm = np.abs(v)
        th[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:npvpq + npq]
        v = vm * np.exp(1j * th)

    return PfResult(v=v, converged=False, iterations=max_iter, max_mismatch=mism)


def net_injection_vectors(net: NetworkModel, gen_p: Mapping[str, float],
                          gen_q: Mapping[str, float],
                          demand_p: np.ndarray | None = None,
                          demand_q: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-bus net injections from unit dispatch and nodal demand."""
    p = -(demand_p if demand_p is not None
          else np.array([b.p_demand for b in net.buses]))
    q = -(demand_q if demand_q is not None
          else np.array([b.q_demand for b in net.buses])).astype(float)
    p = p.astype(float)
    for gid, val in gen_p.items():
        p[net.bus_of(gid)] += val
    for gid, val in gen_q.items():
        q[net.bus_of(gid)] += val
    return p, q
