import numpy as np
import pytest

from vsuc.caseio import load_builtin
from vsuc.netmodel import Bus, CostTerms, GenUnit, Line, NetworkModel

np.seterr(all="warn")


@pytest.fixture(scope="session")
def case6():
    return load_builtin("case6")


@pytest.fixture(scope="session")
def case30():
    return load_builtin("case30")


@pytest.fixture(scope="session")
def two_bus():
    """Slack SG feeding a load over one lossy line; no shunts."""
    buses = [Bus(id=1, kind="slack", v_min=0.9, v_max=1.1),
             Bus(id=2, kind="load", v_min=0.9, v_max=1.1,
                 p_demand=0.6, q_demand=0.2)]
    lines = [Line.from_impedance(1, 2, r=0.02, x=0.10)]
    gens = [GenUnit(id="S1", kind="SG", bus=1, capacity=2.0, x_g=0.2,
                    p_min=0.0, q_min=-1.5, q_max=1.5, inertia=5.0,
                    cost=CostTerms(startup=100.0, no_load=10.0, marginal=40.0),
                    pfr_max=0.3)]
    return NetworkModel(buses, lines, gens, name="twobus")


@pytest.fixture(scope="session")
def three_bus_ibg():
    """1 SG + 2 IBGs on a triangle; used for reduction identities."""
    buses = [Bus(id=1, kind="slack"), Bus(id=2, kind="load", p_demand=0.3),
             Bus(id=3, kind="load", p_demand=0.2)]
    lines = [Line.from_impedance(1, 2, r=0.0, x=0.2),
             Line.from_impedance(1, 3, r=0.0, x=0.25),
             Line.from_impedance(2, 3, r=0.0, x=0.4)]
    gens = [GenUnit(id="S1", kind="SG", bus=1, capacity=1.5, x_g=0.25,
                    q_min=-1.0, q_max=1.0, inertia=4.0),
            GenUnit(id="C2", kind="IBG", bus=2, capacity=0.8, s_max=0.8),
            GenUnit(id="C3", kind="IBG", bus=3, capacity=0.6, s_max=0.6)]
    return NetworkModel(buses, lines, gens, name="tri")
