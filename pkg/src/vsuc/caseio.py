"""Case ingestion: JSON case files mirroring MATPOWER tables, plus a
converter for MATPOWER ``.m`` case text.

JSON case schema (units follow MATPOWER: MW/MVAr/MVA and p.u. impedances
on ``baseMVA``):

    {
      "name": "case6",
      "baseMVA": 100.0,
      "bus":    [{"bus_i", "type", "Pd", "Qd", "Gs", "Bs", "Vmax", "Vmin"}, ...],
      "branch": [{"fbus", "tbus", "r", "x", "b", "rateA"}, ...],
      "gen":    [{"id", "bus", "Pmax", "Pmin", "Qmax", "Qmin",
                  "cost": {"startup", "no_load", "marginal"},
                  "ext":  {"kind", "X_g", "S_max", "H_g", "min_up", "min_down",
                           "ramp_up", "ramp_down", "pfr_max", "gamma_si", "si_h_max"}}, ...]
    }

``type`` uses the MATPOWER code (3 = slack, 2 = generator, 1 = load).
``X_g`` is p.u. on the system base; ``ramp_*``/``pfr_max`` are MW(/h);
``si_h_max`` is seconds on the unit's own MVA base. rateA = 0 means
unlimited. The generator ``ext`` block is this package's extension; the
``.m`` converter fills it with flagged defaults.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .netmodel import (IBG, SG, VSG, Bus, CostTerms, GenUnit, Line,
                       NetworkModel)

BUS_KIND = {3: "slack", 2: "generator", 1: "load"}
BUS_CODE = {v: k for k, v in BUS_KIND.items()}

EXT_DEFAULTS = {
    "kind": SG,
    "X_g": 0.3,
    "S_max": None,
    "H_g": 4.0,
    "min_up": 1,
    "min_down": 1,
    "ramp_up": None,  # None -> unlimited
    "ramp_down": None,
    "pfr_max": 0.0,
    "gamma_si": 0.1,
    "si_h_max": 0.0,
}


class CaseFormatError(ValueError):
    """Raised on malformed case input; carries a line number when known."""


def load_case(source: str | Path | dict) -> NetworkModel:
    """Build a NetworkModel from a JSON case file, JSON text, or dict."""
    if isinstance(source, dict):
        case = source
    else:
        p = Path(source)
        text = p.read_text() if p.exists() else str(source)
        case = json.loads(text)
    return case_to_network(case)


def case_to_network(case: dict) -> NetworkModel:
    try:
        base = float(case["baseMVA"])
        buses = [Bus(id=int(b["bus_i"]), kind=BUS_KIND[int(b.get("type", 1))],
                     v_min=float(b.get("Vmin", 0.94)), v_max=float(b.get("Vmax", 1.06)),
                     p_demand=float(b.get("Pd", 0.0)) / base,
                     q_demand=float(b.get("Qd", 0.0)) / base,
                     shunt_g=float(b.get("Gs", 0.0)) / base,
                     shunt_b=float(b.get("Bs", 0.0)) / base)
                 for b in case["bus"]]
        lines = [Line.from_impedance(int(br["fbus"]), int(br["tbus"]),
                                     float(br["r"]), float(br["x"]),
                                     b_charging=float(br.get("b", 0.0)),
                                     rate=(float(br["rateA"]) / base
                                           if br.get("rateA") else float("inf")))
                 for br in case["branch"]]
        gens = []
        for i, g in enumerate(case["gen"]):
            ext = {**EXT_DEFAULTS, **g.get("ext", {})}
            cost = g.get("cost", {})
            cap = float(g["Pmax"]) / base
            kind = ext["kind"]
            gens.append(GenUnit(
                id=str(g.get("id", f"G{i + 1}")),
                kind=kind,
                bus=int(g["bus"]),
                capacity=cap,
                x_g=float(ext["X_g"]),
                p_min=float(g.get("Pmin", 0.0)) / base,
                q_min=float(g.get("Qmin", 0.0)) / base,
                q_max=float(g.get("Qmax", 0.0)) / base,
                s_max=(float(ext["S_max"]) / base if ext["S_max"] is not None
                       else (cap if kind == IBG else None)),
                inertia=float(ext["H_g"]),
                cost=CostTerms(startup=float(cost.get("startup", 0.0)),
                               no_load=float(cost.get("no_load", 0.0)),
                               marginal=float(cost.get("marginal", 0.0))),
                min_up=int(ext["min_up"]),
                min_down=int(ext["min_down"]),
                ramp_up=(float(ext["ramp_up"]) / base if ext["ramp_up"] is not None
                         else float("inf")),
                ramp_down=(float(ext["ramp_down"]) / base if ext["ramp_down"] is not None
                           else float("inf")),
                pfr_max=float(ext["pfr_max"]) / base,
                gamma_si=float(ext["gamma_si"]),
                si_h_max=float(ext["si_h_max"]),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise CaseFormatError(f"bad case data: {exc}") from exc
    return NetworkModel(buses, lines, gens, base_mva=base,
                        name=str(case.get("name", "case")))


def network_to_case(net: NetworkModel) -> dict:
    """Inverse of case_to_network (semantic round trip, MW units)."""
    base = net.base_mva
    case = {"name": net.name, "baseMVA": base, "bus": [], "branch": [], "gen": []}
    for b in net.buses:
        case["bus"].append({"bus_i": b.id, "type": BUS_CODE[b.kind],
                            "Pd": b.p_demand * base, "Qd": b.q_demand * base,
                            "Gs": b.shunt_g * base, "Bs": b.shunt_b * base,
                            "Vmax": b.v_max, "Vmin": b.v_min})
    for ln in net.lines:
        case["branch"].append({"fbus": ln.from_bus, "tbus": ln.to_bus,
                               "r": ln.r_series, "x": ln.x_series,
                               "b": ln.b_charging,
                               "rateA": 0.0 if ln.rate == float("inf") else ln.rate * base})
    for g in net.gens:
        case["gen"].append({
            "id": g.id, "bus": g.bus, "Pmax": g.capacity * base,
            "Pmin": g.p_min * base, "Qmax": g.q_max * base, "Qmin": g.q_min * base,
            "cost": {"startup": g.cost.startup, "no_load": g.cost.no_load,
                     "marginal": g.cost.marginal},
            "ext": {"kind": g.kind, "X_g": g.x_g,
                    "S_max": None if g.s_max is None else g.s_max * base,
                    "H_g": g.inertia, "min_up": g.min_up, "min_down": g.min_down,
                    "ramp_up": None if g.ramp_up == float("inf") else g.ramp_up * base,
                    "ramp_down": None if g.ramp_down == float("inf") else g.ramp_down * base,
                    "pfr_max": g.pfr_max * base, "gamma_si": g.gamma_si,
                    "si_h_max": g.si_h_max},
        })
    return case


def save_case(net: NetworkModel, path: str | Path):
    Path(path).write_text(json.dumps(network_to_case(net), indent=1))


# -- MATPOWER .m conversion -------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _strip_comment(line: str) -> str:
    k = line.find("%")
    return line if k < 0 else line[:k]


def _parse_matrix(text: str, name: str, required: bool = True) -> list[tuple[int, list[float]]]:
    """Extract rows of ``mpc.<name> = [...]`` with their 1-based line numbers."""
    lines = text.splitlines()
    start = None
    for i, raw in enumerate(lines):
        if re.match(rf"\s*mpc\.{name}\s*=\s*\[", _strip_comment(raw)):
            start = i
            break
    if start is None:
        if required:
            raise CaseFormatError(f"table mpc.{name} not found")
        return []
    rows = []
    for i in range(start, len(lines)):
        body = _strip_comment(lines[i])
        if i == start:
            body = body.split("[", 1)[1]
        closed = "]" in body
        body = body.split("]", 1)[0]
        for chunk in body.replace(",", " ").split(";"):
            nums = re.findall(_NUM, chunk)
            if nums:
                rows.append((i + 1, [float(v) for v in nums]))
        if closed:
            return rows
    raise CaseFormatError(f"table mpc.{name} starting at line {start + 1} is never closed")


def convert_matpower(text: str, name: str = "converted") -> dict:
    """Convert MATPOWER ``.m`` case text to the JSON case dict.

    The standard bus/branch/gen tables are carried over losslessly;
    the generator extension block is filled with defaults and flagged
    for user completion. Transformer tap ratios are not modeled and are
    dropped with a note.
    """
    if not text.strip():
        raise CaseFormatError("empty case text")
    m = re.search(rf"mpc\.baseMVA\s*=\s*({_NUM})", text)
    if not m:
        raise CaseFormatError("mpc.baseMVA not found")
    base = float(m.group(1))

    case: dict = {"name": name, "baseMVA": base, "bus": [], "branch": [], "gen": [],
                  "notes": ["generator extension block filled with defaults; review "
                            "kind/X_g/H_g/min up-down/ramps before scheduling runs"]}
    for lineno, row in _parse_matrix(text, "bus"):
        if len(row) < 13:
            raise CaseFormatError(f"bus row at line {lineno} has {len(row)} columns, need 13")
        case["bus"].append({"bus_i": int(row[0]), "type": int(row[1]),
                            "Pd": row[2], "Qd": row[3], "Gs": row[4], "Bs": row[5],
                            "Vmax": row[11], "Vmin": row[12]})
    dropped_taps = 0
    for lineno, row in _parse_matrix(text, "branch"):
        if len(row) < 11:
            raise CaseFormatError(f"branch row at line {lineno} has {len(row)} columns, need 11")
        if row[8] not in (0.0, 1.0):
            dropped_taps += 1
        case["branch"].append({"fbus": int(row[0]), "tbus": int(row[1]),
                               "r": row[2], "x": row[3], "b": row[4], "rateA": row[5]})
    if dropped_taps:
        case["notes"].append(f"{dropped_taps} transformer tap ratio(s) dropped (not modeled)")

    gencost = _parse_matrix(text, "gencost", required=False)
    for k, (lineno, row) in enumerate(_parse_matrix(text, "gen")):
        if len(row) < 10:
            raise CaseFormatError(f"gen row at line {lineno} has {len(row)} columns, need 10")
        cost = {"startup": 0.0, "no_load": 0.0, "marginal": 0.0}
        if k < len(gencost):
            crow = gencost[k][1]
            # polynomial model: [2, startup, shutdown, n, c_{n-1} ... c_0]
            if crow and crow[0] == 2.0 and len(crow) >= 4:
                n = int(crow[3])
                coefs = crow[4:4 + n]
                cost["startup"] = crow[1]
                if n >= 1:
                    cost["no_load"] = coefs[-1]
                if n >= 2:
                    cost["marginal"] = coefs[-2]
        case["gen"].append({"id": f"G{k + 1}", "bus": int(row[0]),
                            "Pmax": row[8], "Pmin": row[9],
                            "Qmax": row[3], "Qmin": row[4],
                            "cost": cost, "ext": dict(EXT_DEFAULTS),
                            "defaults_applied": sorted(EXT_DEFAULTS)})
    return case


def builtin_case_path(name: str) -> Path:
    return Path(__file__).parent / "data" / f"{name}.json"


def load_builtin(name: str) -> NetworkModel:
    """Load one of the packaged cases (``case30``, ``case6``)."""
    return load_case(builtin_case_path(name))
