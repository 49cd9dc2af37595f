import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsuc.netmodel import (Bus, CommitmentState, GenUnit, Line, NetworkModel,
                           SingularStateError, TopologyError)


def brute_force_ybus(net, neglect_resistance=False):
    """Independent textbook assembly: element loop over a dense matrix."""
    n = net.n_bus
    y = np.zeros((n, n), dtype=complex)
    for ln in net.lines:
        i, j = net.bus_index[ln.from_bus], net.bus_index[ln.to_bus]
        if neglect_resistance:
            z = 1j * ln.x_series
        else:
            z = complex(ln.r_series, ln.x_series)
        ys = 1.0 / z
        ysh = 1j * ln.b_charging / 2.0
        y[i, i] += ys + ysh
        y[j, j] += ys + ysh
        y[i, j] -= ys
        y[j, i] -= ys
    for b in net.buses:
        k = net.bus_index[b.id]
        y[k, k] += b.shunt_g + 1j * b.shunt_b
    return y


class TestBuildY0:
    def test_single_line_identity(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        lines = [Line(1, 2, g=0.0, b=-10.0)]
        net = NetworkModel(buses, lines, [GenUnit(id="g", kind="SG", bus=1,
                                                  capacity=1.0, x_g=0.3)])
        y0 = net.build_y0()
        expected = np.array([[-10j, 10j], [10j, -10j]])
        assert np.allclose(y0, expected, atol=0)

    def test_case30_matches_brute_force(self, case30):
        y0 = case30.build_y0()
        assert np.abs(y0 - brute_force_ybus(case30)).max() < 1e-12

    def test_case30_lossless_matches_brute_force(self, case30):
        y0 = case30.build_y0(neglect_resistance=True)
        ref = brute_force_ybus(case30, neglect_resistance=True)
        assert np.abs(y0 - ref).max() < 1e-12

    def test_symmetry_exact(self, case30, case6):
        for net in (case30, case6):
            y0 = net.build_y0()
            assert np.array_equal(y0, y0.T)

    def test_empty_line_set_is_topology_error(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        net = NetworkModel(buses, [], [GenUnit(id="g", kind="SG", bus=1,
                                               capacity=1.0, x_g=0.3)])
        with pytest.raises(TopologyError):
            net.build_y0()

    def test_disconnected_is_topology_error(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2), Bus(id=3), Bus(id=4)]
        lines = [Line.from_impedance(1, 2, 0.0, 0.1),
                 Line.from_impedance(3, 4, 0.0, 0.1)]
        net = NetworkModel(buses, lines, [GenUnit(id="g", kind="SG", bus=1,
                                                  capacity=1.0, x_g=0.3)])
        with pytest.raises(TopologyError):
            net.build_y0()


class TestBuildYg:
    def test_all_off_is_zero(self, case6):
        yg = case6.build_yg(case6.all_off())
        assert np.count_nonzero(yg) == 0

    def test_single_sg_entry(self):
        buses = [Bus(id=i, kind="slack" if i == 1 else "load") for i in (1, 2, 3, 4)]
        lines = [Line.from_impedance(i, i + 1, 0.0, 0.1) for i in (1, 2, 3)]
        gens = [GenUnit(id="g", kind="SG", bus=4, capacity=1.0, x_g=0.25)]
        net = NetworkModel(buses, lines, gens)
        yg = net.build_yg(net.state(x=[1.0]))
        assert yg[3, 3] == pytest.approx(-4j)
        assert np.count_nonzero(yg) == 1

    def test_vsg_fraction(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        lines = [Line.from_impedance(1, 2, 0.0, 0.1)]
        gens = [GenUnit(id="v", kind="VSG", bus=2, capacity=1.0, x_g=0.2)]
        net = NetworkModel(buses, lines, gens)
        yg = net.build_yg(net.state(alpha=[0.5]))
        assert yg[1, 1] == pytest.approx(-2.5j)

    @settings(max_examples=30, deadline=None)
    @given(lam=st.floats(0.0, 1.0),
           a1=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=1),
           a2=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=1))
    def test_linear_in_alpha(self, case6, lam, a1, a2):
        x = np.ones(len(case6.sgs))
        mix = lam * np.array(a1) + (1 - lam) * np.array(a2)
        yg_mix = case6.build_yg(CommitmentState(x, mix))
        yg1 = case6.build_yg(CommitmentState(x, np.array(a1)))
        yg2 = case6.build_yg(CommitmentState(x, np.array(a2)))
        assert np.allclose(yg_mix, lam * yg1 + (1 - lam) * yg2, atol=1e-14)

    def test_dimension_mismatch(self, case6):
        with pytest.raises(ValueError):
            case6.build_yg(CommitmentState(np.array([1.0]), np.array([])))


class TestImpedanceView:
    def test_two_bus_hand_inverse(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        lines = [Line.from_impedance(1, 2, 0.0, 0.1)]
        gens = [GenUnit(id="g", kind="SG", bus=1, capacity=1.0, x_g=0.2),
                GenUnit(id="c", kind="IBG", bus=2, capacity=0.5, s_max=0.5)]
        net = NetworkModel(buses, lines, gens)
        view = net.impedance_view(net.state(x=[1.0]))
        y = np.array([[-10j - 5j, 10j], [10j, -10j]])
        z_hand = np.linalg.inv(y)  # 2x2 closed form via adjugate checked below
        det = y[0, 0] * y[1, 1] - y[0, 1] * y[1, 0]
        adj = np.array([[y[1, 1], -y[0, 1]], [-y[1, 0], y[0, 0]]]) / det
        assert np.abs(adj - z_hand).max() < 1e-14
        assert np.abs(view.z - adj).max() < 1e-10

    def test_all_sources_off_no_shunts_singular(self, case6):
        with pytest.raises(SingularStateError) as err:
            case6.impedance_view(case6.all_off())
        assert err.value.state is not None

    def test_case30_residual(self, case30):
        view = case30.impedance_view(case30.all_on())
        y = view.y0 + view.yg
        assert np.abs(view.z @ y - np.eye(case30.n_bus)).max() < 1e-8

    def test_ratio_self_is_one(self, case30):
        view = case30.impedance_view(case30.all_on())
        for c in case30.ibg_ids:
            assert view.zmag_ratio(c, c) == pytest.approx(1.0)

    def test_cross_ratios_below_one(self, case30, case6):
        for net in (case30, case6):
            view = net.impedance_view(net.all_on())
            for c in net.ibg_ids:
                for c2 in net.ibg_ids:
                    if c != c2:
                        assert view.zmag_ratio(c, c2) < 1.0

    def test_strength_monotone_in_commitment(self, case6):
        """Committing one more SG never weakens any IBG bus (enumerated)."""
        n = len(case6.sgs)
        alpha = np.ones(len(case6.vsgs))
        for bits in itertools.product((0, 1), repeat=n):
            for k in range(n):
                if bits[k] == 1:
                    continue
                more = list(bits)
                more[k] = 1
                try:
                    v1 = case6.impedance_view(CommitmentState(np.array(bits, float), alpha))
                    v2 = case6.impedance_view(CommitmentState(np.array(more, float), alpha))
                except SingularStateError:
                    continue
                for c in case6.ibg_ids:
                    assert v2.gamma_denom(c) >= v1.gamma_denom(c) - 1e-9


class TestScr:
    def test_direct_substitution(self):
        # |Z_cc| = 0.5 built from a single line to a strong source
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        lines = [Line.from_impedance(1, 2, 0.0, 0.4)]
        gens = [GenUnit(id="g", kind="SG", bus=1, capacity=5.0, x_g=0.1),
                GenUnit(id="c", kind="IBG", bus=2, capacity=1.0, s_max=1.0)]
        net = NetworkModel(buses, lines, gens)
        view = net.impedance_view(net.state(x=[1.0]))
        zcc = abs(view.z_cc("c"))
        assert zcc == pytest.approx(0.5)
        assert net.scr(net.state(x=[1.0]), "c") == pytest.approx(2.0)

    def test_capacity_scaling(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        lines = [Line.from_impedance(1, 2, 0.0, 0.15)]
        gens = [GenUnit(id="g", kind="SG", bus=1, capacity=5.0, x_g=0.1),
                GenUnit(id="c", kind="IBG", bus=2, capacity=2.0, s_max=2.0)]
        net = NetworkModel(buses, lines, gens)
        assert net.scr(net.state(x=[1.0]), "c") == pytest.approx(2.0)

    def test_case30_matches_fresh_inversion(self, case30):
        state = case30.all_on()
        view = case30.impedance_view(state)
        y = case30.build_y0(neglect_resistance=True) + case30.build_yg(state)
        z = np.linalg.inv(y)
        k = case30.bus_index[case30.unit["W24"].bus]
        expected = 1.0 / (abs(z[k, k]) * case30.unit["W24"].capacity)
        assert case30.scr(state, "W24") == pytest.approx(expected, rel=1e-10)

    def test_zero_capacity_rejected(self, case30):
        with pytest.raises(ValueError):
            GenUnit(id="bad", kind="IBG", bus=1, capacity=0.0, s_max=0.0)


class TestCommitmentState:
    def test_nonbinary_x_rejected(self):
        with pytest.raises(ValueError):
            CommitmentState(np.array([0.5]), np.array([]))

    def test_alpha_range_enforced(self):
        with pytest.raises(ValueError):
            CommitmentState(np.array([1.0]), np.array([1.2]))
