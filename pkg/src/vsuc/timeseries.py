"""Hourly demand/wind series: synthetic generation and CSV round trip.

The forecast CSV carries one row per hour with per-bus demand and per-unit
available wind (plus the VSG online fraction alpha), all in MW on the
case base except alpha:

    hour, demand_p:<bus>..., demand_q:<bus>..., wind:<unit>..., alpha:<unit>...
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .netmodel import NetworkModel


@dataclass
class ForecastSeries:
    hours: np.ndarray  # (T,)
    demand_p: np.ndarray  # (T, n_bus) p.u.
    demand_q: np.ndarray
    wind: dict[str, np.ndarray]  # unit id -> (T,) available power, p.u.
    alpha: dict[str, np.ndarray]  # VSG id -> (T,) online fraction

    def __len__(self) -> int:
        return len(self.hours)

    def window(self, start: int, length: int) -> "ForecastSeries":
        if start + length > len(self):
            raise ValueError(f"window [{start}, {start + length}) exceeds the "
                             f"{len(self)}-hour series")
        sl = slice(start, start + length)
        return ForecastSeries(self.hours[sl], self.demand_p[sl], self.demand_q[sl],
                              {k: v[sl] for k, v in self.wind.items()},
                              {k: v[sl] for k, v in self.alpha.items()})

    def total_demand(self) -> np.ndarray:
        return self.demand_p.sum(axis=1)


def synth_forecast(net: NetworkModel, hours: int = 168, seed: int = 1,
                   demand_min: float | None = None,
                   demand_max: float | None = None) -> ForecastSeries:
    """Deterministic synthetic series: a two-peak daily demand shape scaled
    between demand_min/max (p.u. totals), and wind availability loosely
    anticorrelated with demand (windy nights, calm evening peaks)."""
    rng = np.random.default_rng(seed)
    base_p = np.array([b.p_demand for b in net.buses])
    base_q = np.array([b.q_demand for b in net.buses])
    total = base_p.sum()
    if total <= 0:
        raise ValueError("network carries no demand")
    dmin = demand_min if demand_min is not None else 0.6 * total
    dmax = demand_max if demand_max is not None else 1.4 * total

    t = np.arange(hours)
    h = t % 24
    shape = (0.55
             + 0.28 * np.exp(-0.5 * ((h - 11.0) / 3.2) ** 2)
             + 0.42 * np.exp(-0.5 * ((h - 18.5) / 2.4) ** 2)
             - 0.18 * np.exp(-0.5 * ((h - 3.5) / 3.0) ** 2))
    weekday = np.where((t // 24) % 7 >= 5, 0.92, 1.0)
    wob = 1.0 + 0.02 * np.sin(2 * np.pi * t / 167.0) + 0.01 * rng.standard_normal(hours)
    s = shape * weekday * wob
    s = (s - s.min()) / (s.max() - s.min())  # normalized 0..1
    totals = dmin + (dmax - dmin) * s

    share_p = base_p / total
    pf_ratio = np.divide(base_q, base_p, out=np.zeros_like(base_q),
                         where=base_p > 0)
    demand_p = totals[:, None] * share_p[None, :]
    demand_q = demand_p * pf_ratio[None, :]

    wind, alpha = {}, {}
    for k, g in enumerate([g for g in net.gens if g.kind in ("VSG", "IBG")]):
        noise = rng.standard_normal(hours)
        smooth = np.convolve(noise, np.ones(7) / 7.0, mode="same")
        factor = np.clip(0.86 - 0.52 * s + 0.16 * smooth
                         + 0.05 * np.sin(2 * np.pi * (t + 9 * k) / 24.0), 0.05, 0.97)
        wind[g.id] = factor * g.capacity
        if g.kind == "VSG":
            alpha[g.id] = factor
    return ForecastSeries(t, demand_p, demand_q, wind, alpha)


def write_forecast_csv(series: ForecastSeries, net: NetworkModel, path: str | Path):
    base = net.base_mva
    bus_ids = [b.id for b in net.buses]
    wind_ids = sorted(series.wind)
    alpha_ids = sorted(series.alpha)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour"]
                   + [f"demand_p:{b}" for b in bus_ids]
                   + [f"demand_q:{b}" for b in bus_ids]
                   + [f"wind:{u}" for u in wind_ids]
                   + [f"alpha:{u}" for u in alpha_ids])
        for i in range(len(series)):
            row = [int(series.hours[i])]
            row += [f"{v * base:.6f}" for v in series.demand_p[i]]
            row += [f"{v * base:.6f}" for v in series.demand_q[i]]
            row += [f"{series.wind[u][i] * base:.6f}" for u in wind_ids]
            row += [f"{series.alpha[u][i]:.6f}" for u in alpha_ids]
            w.writerow(row)


def read_forecast_csv(path: str | Path, net: NetworkModel) -> ForecastSeries:
    base = net.base_mva
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"forecast file {path} has no data rows")
    header = rows[0]
    cols = {name: k for k, name in enumerate(header)}
    bus_ids = [b.id for b in net.buses]
    for b in bus_ids:
        if f"demand_p:{b}" not in cols:
            raise ValueError(f"forecast file missing demand_p:{b}")
    data = rows[1:]
    T = len(data)
    hours = np.array([int(float(r[cols["hour"]])) for r in data])
    dp = np.array([[float(r[cols[f"demand_p:{b}"]]) for b in bus_ids] for r in data]) / base
    dq = np.array([[float(r[cols[f"demand_q:{b}"]]) for b in bus_ids] for r in data]) / base
    wind, alpha = {}, {}
    for name, k in cols.items():
        if name.startswith("wind:"):
            wind[name[5:]] = np.array([float(r[k]) for r in data]) / base
        elif name.startswith("alpha:"):
            alpha[name[6:]] = np.array([float(r[k]) for r in data])
    return ForecastSeries(hours, dp, dq, wind, alpha)
