import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsuc import vstab
from vsuc.netmodel import Bus, GenUnit, Line, NetworkModel


@pytest.fixture(scope="module")
def tri_view(three_bus_ibg):
    return three_bus_ibg.impedance_view(three_bus_ibg.all_on())


class TestReduceTwoBus:
    def test_reconstruction_matches_full_product(self, three_bus_ibg, tri_view):
        rng = np.random.default_rng(11)
        currents = rng.normal(size=3) + 1j * rng.normal(size=3)
        v_full = tri_view.z @ currents
        for c in three_bus_ibg.ibg_ids:
            eq = vstab.reduce_two_bus(tri_view, currents, c)
            k = tri_view.ibg_bus[c]
            assert abs(eq.v_ibg - v_full[k]) < 1e-10

    def test_single_ibg_no_interaction(self):
        buses = [Bus(id=1, kind="slack"), Bus(id=2)]
        lines = [Line.from_impedance(1, 2, 0.0, 0.3)]
        gens = [GenUnit(id="s", kind="SG", bus=1, capacity=1.0, x_g=0.2),
                GenUnit(id="c", kind="IBG", bus=2, capacity=0.5, s_max=0.5)]
        net = NetworkModel(buses, lines, gens)
        view = net.impedance_view(net.state(x=[1.0]))
        currents = np.array([0.4 - 0.1j, 0.2 + 0.05j])
        eq = vstab.reduce_two_bus(view, currents, "c")
        assert eq.i_equiv == pytest.approx(currents[1])

    def test_zero_ibg_current_gives_grid_voltage(self, three_bus_ibg, tri_view):
        currents = np.array([0.5 + 0.1j, 0.0, 0.0])
        for c in three_bus_ibg.ibg_ids:
            eq = vstab.reduce_two_bus(tri_view, currents, c)
            assert eq.i_equiv == 0
            assert eq.v_ibg == pytest.approx(eq.v_grid)

    def test_wrong_dimension_rejected(self, tri_view):
        with pytest.raises(ValueError):
            vstab.reduce_two_bus(tri_view, np.zeros(5, dtype=complex), "C2")


class TestEquivalentInjection:
    def test_others_at_zero(self, tri_view):
        inj = vstab.equivalent_injection({"C2": 0.5, "C3": 0.0},
                                         {"C2": 0.1, "C3": 0.0}, tri_view, "C2")
        assert inj.p_hat == pytest.approx(0.5)
        assert inj.q_hat == pytest.approx(0.1)

    def test_direct_substitution(self, tri_view):
        r = tri_view.zmag_ratio("C2", "C3")
        inj = vstab.equivalent_injection({"C2": 1.0, "C3": 0.8},
                                         {"C2": 0.0, "C3": 0.0}, tri_view, "C2")
        assert inj.p_hat == pytest.approx(1.0 + 0.8 * r)

    def test_ratio_half_example(self):
        """|Z12|/|Z11| = 0.5, P = (1.0, 0.8) -> p_hat = 1.4."""
        p_hat = 1.0 + 0.5 * 0.8
        assert p_hat == pytest.approx(1.4)

    def test_gamma_from_zcc(self, tri_view):
        inj = vstab.equivalent_injection({"C2": 0.0, "C3": 0.0},
                                         {"C2": 0.0, "C3": 0.0}, tri_view, "C2")
        assert inj.gamma == pytest.approx(0.5 / abs(tri_view.z_cc("C2")))

    def test_gamma_quarter_impedance(self):
        # |Z_cc| = 0.25 -> gamma = 2
        assert 0.5 / 0.25 == pytest.approx(2.0)


class TestCheckStability:
    def test_boundary_point_not_violated(self):
        inj = vstab.EquivalentInjection("c", p_hat=1.5, q_hat=0.0, gamma=1.5)
        a = vstab.check_stability(inj, margin=0.0)
        assert not a.violated
        assert a.lhs == pytest.approx(a.rhs)

    def test_just_outside_violated(self):
        inj = vstab.EquivalentInjection("c", p_hat=1.01 * 1.5, q_hat=0.0, gamma=1.5)
        assert vstab.check_stability(inj, margin=0.0).violated

    def test_degenerate_reported_violated(self):
        inj = vstab.EquivalentInjection("c", p_hat=0.1, q_hat=-2.0, gamma=0.5)
        a = vstab.check_stability(inj)
        assert a.violated and a.degenerate

    def test_margin_bounds(self):
        inj = vstab.EquivalentInjection("c", p_hat=0.1, q_hat=0.0, gamma=1.0)
        with pytest.raises(ValueError):
            vstab.check_stability(inj, margin=1.0)

    @settings(max_examples=100, deadline=None)
    @given(gamma=st.floats(0.1, 5.0), q=st.floats(-0.4, 3.0),
           frac=st.floats(0.0, 1.0), m1=st.floats(0.0, 0.5),
           dm=st.floats(0.0, 0.4))
    def test_margin_monotonicity(self, gamma, q, frac, m1, dm):
        """A point violated at a small margin stays violated at a larger one."""
        cap = max(q + gamma, 0.0)
        p = frac * 1.5 * (cap + 0.1)
        inj = vstab.EquivalentInjection("c", p_hat=p, q_hat=q, gamma=gamma)
        a1 = vstab.check_stability(inj, margin=m1)
        a2 = vstab.check_stability(inj, margin=min(m1 + dm, 0.99))
        if a1.violated:
            assert a2.violated

    @settings(max_examples=60, deadline=None)
    @given(gamma=st.floats(0.2, 4.0),
           pts=st.lists(st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 2.0)),
                        min_size=2, max_size=2),
           lam=st.floats(0.0, 1.0))
    def test_feasible_region_convex(self, gamma, pts, lam):
        """Convex combinations of feasible (p,q) points stay feasible."""
        feas = []
        for fp, q in pts:
            pmax = vstab.boundary_p_max(gamma, q)
            feas.append((fp * pmax, q))
        (p1, q1), (p2, q2) = feas
        pm = lam * p1 + (1 - lam) * p2
        qm = lam * q1 + (1 - lam) * q2
        mix = vstab.EquivalentInjection("c", p_hat=pm, q_hat=qm, gamma=gamma)
        a = vstab.check_stability(mix, margin=0.0)
        assert a.lhs <= a.rhs + 1e-9  # boundary mixes may graze the cone


class TestBoundaryCurve:
    def test_zero_q_cap_is_half_scr(self):
        for scr in (1.5, 2.0, 3.0, 5.0):
            pts = vstab.boundary_curve(scr, q_range=(0.0, 2.0), n_points=5)
            q0, p0 = pts[0]
            assert q0 == pytest.approx(0.0)
            assert p0 == pytest.approx(scr / 2.0, abs=1e-12)

    def test_equality_on_curve(self):
        for scr in (1.5, 2.0, 3.0, 5.0):
            gamma = scr / 2.0
            for q, p in vstab.boundary_curve(scr, (0.0, 2.0), 41):
                assert p * p + q * q == pytest.approx((q + gamma) ** 2, abs=1e-10)

    def test_strictly_increasing_in_q(self):
        for scr in (1.5, 2.0, 3.0, 5.0):
            pts = vstab.boundary_curve(scr, (0.0, 2.0), 61)
            ps = [p for _, p in pts]
            assert all(b > a for a, b in zip(ps, ps[1:]))

    def test_finite_difference_slope_positive(self):
        h = 1e-6
        for scr in (1.5, 3.0):
            gamma = scr / 2.0
            for q in np.linspace(0.0, 2.0, 9):
                d = (vstab.boundary_p_max(gamma, q + h)
                     - vstab.boundary_p_max(gamma, q - h)) / (2 * h)
                assert d > 0

    def test_asymptote(self):
        # for large q the boundary behaves like sqrt(2 gamma q): the cap
        # keeps growing with reactive support but sublinearly
        gamma = 1.0
        q = 1e6
        assert vstab.boundary_p_max(gamma, q) == pytest.approx(
            math.sqrt(2 * gamma * q), rel=1e-5)

    def test_scr2_fig_sanity(self):
        """SCR = 2 with q_hat = 0: cap sits at 1.0 p.u. of capacity."""
        pts = dict(vstab.boundary_curve(2.0, (0.0, 0.0), 1))
        assert pts[0.0] == pytest.approx(1.0)

    def test_bad_scr(self):
        with pytest.raises(ValueError):
            vstab.boundary_curve(0.0)


class TestJacobianOracle:
    def test_boundary_points_singular(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            gamma = rng.uniform(0.3, 3.0)
            q = rng.uniform(0.0, 2.0)
            p = vstab.boundary_p_max(gamma, q)
            u, th = vstab.solve_equivalent_voltage(p, q, gamma)
            z = 1.0 / (2.0 * gamma)
            det = vstab.jacobian_singularity_oracle(u, 1.0, th, z)
            assert abs(det) < 1e-6

    def test_interior_point_regular(self):
        gamma = 1.0
        q = 0.5
        p = 0.5 * vstab.boundary_p_max(gamma, q)
        u, th = vstab.solve_equivalent_voltage(p, q, gamma)
        z = 0.5
        # reconstruction consistency of the numeric inversion
        p_back = -u * math.sin(th) / z
        q_back = (u * u - u * math.cos(th)) / z
        assert p_back == pytest.approx(p, abs=1e-8)
        assert q_back == pytest.approx(q, abs=1e-8)
        det = vstab.jacobian_singularity_oracle(u, 1.0, th, z)
        assert abs(det) > 1e-3

    def test_flat_point_determinant(self):
        # theta = 0, |V| = |V_G| = 1, |Z| = 0.5: det = g^3/Z^2 by Eq. algebra
        det = vstab.jacobian_singularity_oracle(1.0, 1.0, 0.0, 0.5)
        assert det == pytest.approx(1.0 / 0.25)

    def test_infeasible_target_rejected(self):
        gamma = 1.0
        with pytest.raises(ValueError):
            vstab.solve_equivalent_voltage(10.0, 0.0, gamma)

    def test_zmag_positive_required(self):
        with pytest.raises(ValueError):
            vstab.jacobian_singularity_oracle(1.0, 1.0, 0.0, 0.0)


class TestInteractionFactor:
    def test_single_ibg_zero(self):
        xi, excl = vstab.interaction_factor({"c": 1.0}, {"c": 1.0})
        assert xi == 0.0 and not excl

    def test_symmetric_pair(self):
        xi, _ = vstab.interaction_factor({"a": 1.0, "b": 1.0},
                                         {"a": 1.5, "b": 1.5})
        assert xi == pytest.approx(0.5)

    def test_zero_power_excluded(self):
        xi, excl = vstab.interaction_factor({"a": 1.0, "b": 0.0},
                                            {"a": 1.2, "b": 0.3})
        assert excl == ["b"]
        assert xi == pytest.approx(0.2)

    def test_case30_matches_reported_range(self, case30):
        """All SGs on, equal IBG output: the paper's configuration."""
        view = case30.impedance_view(case30.all_on())
        p = {c: 1.0 for c in case30.ibg_ids}
        q = {c: 0.0 for c in case30.ibg_ids}
        p_hat = {c: vstab.equivalent_injection(p, q, view, c).p_hat
                 for c in case30.ibg_ids}
        xi, _ = vstab.interaction_factor(p, p_hat)
        assert xi == pytest.approx(0.63, abs=0.15)


class TestCriterionOracleEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(gamma=st.floats(0.3, 3.0), q=st.floats(0.0, 2.0))
    def test_equality_locus_has_singular_jacobian(self, gamma, q):
        p = vstab.boundary_p_max(gamma, q)
        u, th = vstab.solve_equivalent_voltage(p, q, gamma)
        det = vstab.jacobian_singularity_oracle(u, 1.0, th, 1.0 / (2 * gamma))
        assert abs(det) < 1e-6
