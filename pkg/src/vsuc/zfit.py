"""Linear surrogates for the commitment dependence of the impedance matrix.

The scheduling model needs |Z_cc'|/|Z_cc| and 1/|Z_cc| as functions of the
commitment state. Both are regressed on the SG binaries, the VSG online
fractions, and all pairwise products between (V)SG units; higher-order
interactions are dropped. The training set enumerates every SG on/off
combination crossed with evenly binned VSG fractions, excluding states
whose admittance matrix is singular.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .netmodel import SG, VSG, CommitmentState, NetworkModel, SingularStateError

log = logging.getLogger(__name__)

ENUMERATION_GUARD = 12  # refuse to enumerate more than 2^12 SG combinations
GAMMA_TARGET = "1"  # delta selector for the 1/|Z_cc| target


class DatasetSizeError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpace:
    """Orders the regression features: SG binaries, VSG fractions, then
    pairwise products eta over all unordered (V)SG unit pairs."""

    sg_ids: tuple[str, ...]
    vsg_ids: tuple[str, ...]

    @property
    def pairs(self) -> tuple[tuple[str, str], ...]:
        units = self.sg_ids + self.vsg_ids
        return tuple(itertools.combinations(units, 2))

    @property
    def names(self) -> tuple[str, ...]:
        return (self.sg_ids + self.vsg_ids
                + tuple(f"{a}*{b}" for a, b in self.pairs))

    def vector(self, state: CommitmentState) -> np.ndarray:
        vals = {g: x for g, x in zip(self.sg_ids, state.x)}
        vals.update({g: a for g, a in zip(self.vsg_ids, state.alpha)})
        eta = [vals[a] * vals[b] for a, b in self.pairs]
        return np.array(list(state.x) + list(state.alpha) + eta, dtype=float)

    @property
    def size(self) -> int:
        n = len(self.sg_ids) + len(self.vsg_ids)
        return n + n * (n - 1) // 2


@dataclass
class Dataset:
    """Enumerated commitment states with their impedance targets."""

    space: FeatureSpace
    states: list[CommitmentState]
    features: np.ndarray  # (n_samples, n_features)
    targets: dict[tuple[str, str], np.ndarray]  # (ibg, delta) -> values
    excluded: list[CommitmentState]
    n_v: int

    @property
    def size(self) -> int:
        return len(self.states)

    def target_keys(self) -> list[tuple[str, str]]:
        return sorted(self.targets)


def alpha_bins(n_v: int) -> np.ndarray:
    """Midpoints of n_v even bins of [0, 1]."""
    return (np.arange(n_v) + 0.5) / n_v


def enumerate_states(net: NetworkModel, n_v: int) -> Iterator[CommitmentState]:
    n_sg, n_vsg = len(net.sgs), len(net.vsgs)
    for xs in itertools.product((0.0, 1.0), repeat=n_sg):
        for als in itertools.product(alpha_bins(n_v), repeat=n_vsg):
            yield CommitmentState(np.array(xs), np.array(als))


def enumerate_dataset(net: NetworkModel, n_v: int = 4) -> Dataset:
    """Build the training set over all SG combinations x VSG bins.

    Singular states (no grounding path) are excluded and logged.
    """
    if n_v < 1:
        raise ValueError("n_v must be at least 1")
    if len(net.sgs) > ENUMERATION_GUARD:
        raise DatasetSizeError(
            f"{len(net.sgs)} SGs exceeds the enumeration guard ({ENUMERATION_GUARD})")
    space = FeatureSpace(tuple(net.sg_ids), tuple(net.vsg_ids))
    states, rows, excluded = [], [], []
    targets: dict[tuple[str, str], list[float]] = {}
    for c in net.ibg_ids:
        targets[(c, GAMMA_TARGET)] = []
        for c2 in net.ibg_ids:
            if c2 != c:
                targets[(c, c2)] = []
    for st in enumerate_states(net, n_v):
        try:
            view = net.impedance_view(st)
        except SingularStateError:
            excluded.append(st)
            log.info("excluded singular state %s", st.describe())
            continue
        states.append(st)
        rows.append(space.vector(st))
        for c in net.ibg_ids:
            targets[(c, GAMMA_TARGET)].append(view.gamma_denom(c))
            for c2 in net.ibg_ids:
                if c2 != c:
                    targets[(c, c2)].append(view.zmag_ratio(c, c2))
    return Dataset(space=space, states=states,
                   features=np.array(rows) if rows else np.zeros((0, space.size)),
                   targets={k: np.array(v) for k, v in targets.items()},
                   excluded=excluded, n_v=n_v)


@dataclass
class RegressionModel:
    """No-intercept least-squares surrogate for one (ibg, delta) target."""

    ibg: str
    delta: str
    space: FeatureSpace
    coef: np.ndarray
    rmse: float
    r2: float
    max_abs_err: float
    ridge: bool = False  # True when the rank-deficient fallback was used

    def coefficients(self) -> dict[str, float]:
        return dict(zip(self.space.names, self.coef.tolist()))

    def to_dict(self) -> dict:
        return {"ibg": self.ibg, "delta": self.delta,
                "sg_ids": list(self.space.sg_ids),
                "vsg_ids": list(self.space.vsg_ids),
                "coefficients": self.coefficients(),
                "diagnostics": {"rmse": self.rmse, "r2": self.r2,
                                "max_abs_err": self.max_abs_err,
                                "ridge": self.ridge}}

    @staticmethod
    def from_dict(d: dict) -> "RegressionModel":
        space = FeatureSpace(tuple(d["sg_ids"]), tuple(d["vsg_ids"]))
        coef = np.array([d["coefficients"][name] for name in space.names])
        diag = d["diagnostics"]
        return RegressionModel(d["ibg"], d["delta"], space, coef,
                               diag["rmse"], diag["r2"], diag["max_abs_err"],
                               diag.get("ridge", False))


def fit(dataset: Dataset, c: str, delta: str) -> RegressionModel:
    """Least-squares fit of one target; ridge fallback if rank-deficient.

    R^2 uses the uncentered total sum of squares, the standard convention
    for intercept-free models (the centered one is ill-posed without an
    intercept and can go negative on near-constant targets).
    """
    y = dataset.targets[(c, delta)]
    if y.size == 0:
        raise ValueError("dataset is empty")
    A = dataset.features
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    ridge = False
    if rank < A.shape[1]:
        lam = 1e-8
        coef = np.linalg.solve(A.T @ A + lam * np.eye(A.shape[1]), A.T @ y)
        ridge = True
        log.warning("rank-deficient design for (%s, %s); ridge fallback", c, delta)
    resid = A @ coef - y
    rmse = float(np.sqrt(np.mean(resid**2)))
    ss_tot = float(np.sum(y**2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RegressionModel(ibg=c, delta=delta, space=dataset.space, coef=coef,
                           rmse=rmse, r2=r2,
                           max_abs_err=float(np.abs(resid).max()), ridge=ridge)


def fit_all(dataset: Dataset) -> dict[tuple[str, str], RegressionModel]:
    return {key: fit(dataset, *key) for key in dataset.target_keys()}


def evaluate(model: RegressionModel, state: CommitmentState) -> float:
    """Evaluate the linear surrogate at a commitment state."""
    return float(model.space.vector(state) @ model.coef)


# -- persistence -------------------------------------------------------------

def save_models(models: dict[tuple[str, str], RegressionModel], path: str | Path):
    Path(path).write_text(json.dumps(
        [models[k].to_dict() for k in sorted(models)], indent=1))


def load_models(path: str | Path) -> dict[tuple[str, str], RegressionModel]:
    out = {}
    for d in json.loads(Path(path).read_text()):
        m = RegressionModel.from_dict(d)
        out[(m.ibg, m.delta)] = m
    return out


def dump_dataset_csv(dataset: Dataset, path: str | Path):
    """Samples and targets in one flat table (regression-plot input)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        keys = dataset.target_keys()
        w.writerow(["sample"] + list(dataset.space.names)
                   + [f"z[{c}|{d}]" for c, d in keys])
        for i in range(dataset.size):
            w.writerow([i] + [f"{v:.12g}" for v in dataset.features[i]]
                       + [f"{dataset.targets[k][i]:.12g}" for k in keys])
