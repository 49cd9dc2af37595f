"""Regenerate the packaged case files (data/case30.json, data/case6.json).

case30 is the classic IEEE 30-bus network (Alsac & Stott tables) with the
original thermal units replaced by a six-unit fleet and wind added as a
grid-forming VSG at bus 1 and grid-following IBGs at buses 23 and 24.
case6 is a small synthetic system used by the fast tests: a meshed core
(buses 1-3) feeding a weak radial pocket (buses 4-6) that hosts both IBGs.
"""

import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "vsuc" / "data"

# fbus tbus r x b rateA(MVA)
BRANCH30 = [
    (1, 2, 0.0192, 0.0575, 0.0528, 130),
    (1, 3, 0.0452, 0.1652, 0.0408, 130),
    (2, 4, 0.0570, 0.1737, 0.0368, 65),
    (3, 4, 0.0132, 0.0379, 0.0084, 130),
    (2, 5, 0.0472, 0.1983, 0.0418, 130),
    (2, 6, 0.0581, 0.1763, 0.0374, 65),
    (4, 6, 0.0119, 0.0414, 0.0090, 90),
    (5, 7, 0.0460, 0.1160, 0.0204, 70),
    (6, 7, 0.0267, 0.0820, 0.0170, 130),
    (6, 8, 0.0120, 0.0420, 0.0090, 32),
    (6, 9, 0.0, 0.2080, 0.0, 65),
    (6, 10, 0.0, 0.5560, 0.0, 32),
    (9, 11, 0.0, 0.2080, 0.0, 65),
    (9, 10, 0.0, 0.1100, 0.0, 65),
    (4, 12, 0.0, 0.2560, 0.0, 65),
    (12, 13, 0.0, 0.1400, 0.0, 65),
    (12, 14, 0.1231, 0.2559, 0.0, 32),
    (12, 15, 0.0662, 0.1304, 0.0, 32),
    (12, 16, 0.0945, 0.1987, 0.0, 32),
    (14, 15, 0.2210, 0.1997, 0.0, 16),
    (16, 17, 0.0524, 0.1923, 0.0, 16),
    (15, 18, 0.1073, 0.2185, 0.0, 16),
    (18, 19, 0.0639, 0.1292, 0.0, 16),
    (19, 20, 0.0340, 0.0680, 0.0, 32),
    (10, 20, 0.0936, 0.2090, 0.0, 32),
    (10, 17, 0.0324, 0.0845, 0.0, 32),
    (10, 21, 0.0348, 0.0749, 0.0, 32),
    (10, 22, 0.0727, 0.1499, 0.0, 32),
    (21, 22, 0.0116, 0.0236, 0.0, 32),
    (15, 23, 0.1000, 0.2020, 0.0, 16),
    (22, 24, 0.1150, 0.1790, 0.0, 16),
    (23, 24, 0.1320, 0.2700, 0.0, 16),
    (24, 25, 0.1885, 0.3292, 0.0, 16),
    (25, 26, 0.2544, 0.3800, 0.0, 16),
    (25, 27, 0.1093, 0.2087, 0.0, 16),
    (28, 27, 0.0, 0.3960, 0.0, 65),
    (27, 29, 0.2198, 0.4153, 0.0, 16),
    (27, 30, 0.3202, 0.6027, 0.0, 16),
    (29, 30, 0.2399, 0.4533, 0.0, 16),
    (8, 28, 0.0636, 0.2000, 0.0214, 32),
    (6, 28, 0.0169, 0.0599, 0.0130, 32),
]

# bus_i: (Pd, Qd) MW / MVAr
LOAD30 = {
    1: (0.0, 0.0), 2: (21.7, 12.7), 3: (2.4, 1.2), 4: (7.6, 1.6),
    5: (94.2, 19.0), 6: (0.0, 0.0), 7: (22.8, 10.9), 8: (30.0, 30.0),
    9: (0.0, 0.0), 10: (5.8, 2.0), 11: (0.0, 0.0), 12: (11.2, 7.5),
    13: (0.0, 0.0), 14: (6.2, 1.6), 15: (8.2, 2.5), 16: (3.5, 1.8),
    17: (9.0, 5.8), 18: (3.2, 0.9), 19: (9.5, 3.4), 20: (2.2, 0.7),
    21: (17.5, 11.2), 22: (0.0, 0.0), 23: (3.2, 1.6), 24: (8.7, 6.7),
    25: (0.0, 0.0), 26: (3.5, 2.3), 27: (0.0, 0.0), 28: (0.0, 0.0),
    29: (2.4, 0.9), 30: (10.6, 1.9),
}
SHUNT30 = {10: 19.0, 24: 4.3}  # Bs in MVAr at V = 1
GEN_BUSES30 = {1, 2, 5, 8, 11, 13}

# id, bus, Pmax, Pmin, Qmin, Qmax, X_g, H, mc, nl, su, min_up, min_dn, ramp, pfr
# no-load costs are kept small (folded into marginals) so the continuous
# relaxation stays close to the integer optimum
FLEET30 = [
    ("G1", 1, 200, 30, -40, 150, 0.20, 6.0, 38, 60, 2000, 6, 6, 120, 45),
    ("G2", 2, 120, 18, -30, 100, 0.25, 5.5, 43, 45, 1200, 4, 4, 80, 25),
    ("G3", 5, 80, 12, -25, 70, 0.28, 5.0, 48, 35, 900, 4, 4, 60, 18),
    ("G4", 8, 60, 9, -20, 60, 0.30, 4.5, 58, 25, 600, 3, 3, 45, 10),
    ("G5", 11, 50, 8, -15, 50, 0.32, 4.0, 68, 20, 450, 2, 2, 40, 8),
    ("G6", 13, 55, 8, -15, 50, 0.32, 4.0, 53, 25, 500, 2, 2, 40, 9),
]


def sg(gid, bus, pmax, pmin, qmin, qmax, xg, h, mc, nl, su, up, dn, ramp, pfr):
    return {
        "id": gid, "bus": bus, "Pmax": pmax, "Pmin": pmin,
        "Qmax": qmax, "Qmin": qmin,
        "cost": {"startup": su, "no_load": nl, "marginal": mc},
        "ext": {"kind": "SG", "X_g": xg, "S_max": None, "H_g": h,
                "min_up": up, "min_down": dn, "ramp_up": ramp, "ramp_down": ramp,
                "pfr_max": pfr, "gamma_si": 0.1, "si_h_max": 0.0},
    }


def wind(gid, bus, pmax, kind, xg=0.25, si_h=6.0, gamma=0.1):
    g = {
        "id": gid, "bus": bus, "Pmax": pmax, "Pmin": 0.0,
        "Qmax": pmax, "Qmin": -pmax,
        "cost": {"startup": 0.0, "no_load": 0.0, "marginal": 0.0},
        "ext": {"kind": kind, "X_g": xg,
                "S_max": pmax if kind == "IBG" else None, "H_g": 0.0,
                "min_up": 1, "min_down": 1, "ramp_up": None, "ramp_down": None,
                "pfr_max": 0.0, "gamma_si": gamma, "si_h_max": si_h},
    }
    return g


# thermal ratings are uprated from the classic tables so the studied wind
# capacities at buses 23/24 are actually evacuable: x4 network-wide and x8
# on the wind-pocket corridor
RATE_SCALE = 4.0
POCKET = {(15, 23), (22, 24), (23, 24), (24, 25), (10, 22), (21, 22),
          (10, 21), (25, 27), (12, 15), (15, 18)}


def rate30(f, t, rate):
    scale = 8.0 if (f, t) in POCKET or (t, f) in POCKET else RATE_SCALE
    return rate * scale


def build_case30():
    buses = []
    for i in range(1, 31):
        pd, qd = LOAD30[i]
        buses.append({"bus_i": i,
                      "type": 3 if i == 1 else (2 if i in GEN_BUSES30 else 1),
                      "Pd": pd, "Qd": qd, "Gs": 0.0, "Bs": SHUNT30.get(i, 0.0),
                      "Vmax": 1.06, "Vmin": 0.94})
    branch = [{"fbus": f, "tbus": t, "r": r, "x": x, "b": b, "rateA": rate30(f, t, rate)}
              for f, t, r, x, b, rate in BRANCH30]
    gens = [sg(*row) for row in FLEET30]
    gens.append(wind("W1", 1, 50, "VSG"))
    gens.append(wind("W23", 23, 100, "IBG"))
    gens.append(wind("W24", 24, 100, "IBG"))
    return {"name": "case30", "baseMVA": 100.0,
            "bus": buses, "branch": branch, "gen": gens}


BRANCH6 = [
    (1, 2, 0.010, 0.050, 1.5),
    (1, 3, 0.012, 0.060, 1.5),
    (2, 3, 0.010, 0.050, 1.0),
    (2, 4, 0.020, 0.100, 1.0),
    (3, 4, 0.020, 0.100, 1.0),
    (4, 5, 0.050, 0.250, 0.8),
    (4, 6, 0.060, 0.300, 0.8),
    (5, 6, 0.040, 0.200, 0.6),
]
LOAD6 = {1: (0, 0), 2: (50, 15), 3: (40, 12), 4: (30, 10), 5: (35, 10), 6: (25, 8)}

FLEET6 = [
    ("A1", 1, 120, 18, -50, 90, 0.25, 5.0, 42, 25, 300, 3, 3, 60, 35),
    ("A2", 2, 80, 12, -40, 60, 0.30, 4.0, 52, 18, 200, 2, 2, 50, 20),
    ("A3", 3, 60, 9, -30, 50, 0.30, 4.0, 62, 12, 130, 2, 2, 50, 14),
]


def build_case6():
    buses = [{"bus_i": i, "type": 3 if i == 1 else (2 if i <= 3 else 1),
              "Pd": LOAD6[i][0], "Qd": LOAD6[i][1], "Gs": 0.0, "Bs": 0.0,
              "Vmax": 1.06, "Vmin": 0.94} for i in range(1, 7)]
    branch = [{"fbus": f, "tbus": t, "r": r, "x": x, "b": 0.0, "rateA": rate * 100}
              for f, t, r, x, rate in BRANCH6]
    gens = [sg(*row) for row in FLEET6]
    gens.append(wind("V1", 1, 40, "VSG", xg=0.30))
    gens.append(wind("C5", 5, 50, "IBG"))
    gens.append(wind("C6", 6, 50, "IBG"))
    return {"name": "case6", "baseMVA": 100.0,
            "bus": buses, "branch": branch, "gen": gens}


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    for name, case in [("case30", build_case30()), ("case6", build_case6())]:
        path = DATA / f"{name}.json"
        path.write_text(json.dumps(case, indent=1))
        print(f"wrote {path}")
