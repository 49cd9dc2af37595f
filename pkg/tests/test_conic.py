import itertools
import json
import math

import numpy as np
import pytest

from vsuc import conic
from vsuc.conic import Affine, BnBConfig, ConicProgram


def norm_program():
    p = ConicProgram("norm")
    t = p.add_var("t", lb=0.0)
    p.add_soc(Affine.of(t), [Affine.const_of(3.0), Affine.const_of(4.0)], "soc")
    p.set_objective({t: 1.0})
    return p, t


def random_misocp(seed: int, n_bin: int = 8, n_cont: int = 3) -> ConicProgram:
    """Feasible bounded instance: knapsack rows plus one SOC tie."""
    rng = np.random.default_rng(seed)
    p = ConicProgram(f"rand{seed}")
    zs = [p.add_var(f"z{i}", binary=True) for i in range(n_bin)]
    ys = [p.add_var(f"y{i}", lb=-4.0, ub=4.0) for i in range(n_cont)]
    for _ in range(2):
        terms = {z: float(rng.integers(1, 6)) for z in zs}
        terms[ys[0]] = float(rng.uniform(0.5, 1.5))
        p.add_le(terms, float(rng.uniform(6, 14)), "knap")
    t = p.add_var("t", lb=0.0, ub=12.0)
    u = [Affine({ys[i]: 1.0, zs[i]: float(rng.uniform(-1, 1))})
         for i in range(n_cont)]
    p.add_soc(Affine.of(t), u, "tie")
    obj = {z: float(rng.uniform(-5, -1)) for z in zs}
    obj.update({y: float(rng.uniform(-1, 1)) for y in ys})
    obj[t] = float(rng.uniform(0.1, 1.0))
    p.set_objective(obj)
    return p


def enumerate_optimum(p: ConicProgram) -> float:
    zs = p.binary_indices
    best = math.inf
    comp = conic._Compiled(p)
    for bits in itertools.product((0.0, 1.0), repeat=len(zs)):
        r = comp.solve({z: (b, b) for z, b in zip(zs, bits)})
        if r.status == conic.OPTIMAL and r.objective < best:
            best = r.objective
    return best


class TestRelaxation:
    def test_norm_closed_form(self):
        p, _ = norm_program()
        r = conic.solve_relaxation(p)
        assert r.status == conic.OPTIMAL
        assert r.objective == pytest.approx(5.0, abs=1e-6)

    def test_rotated_cone_equality_at_optimum(self):
        p = ConicProgram("rsoc")
        w = p.add_var("w", lb=0.0)
        p.add_rsoc(Affine.const_of(1.0), Affine.of(w), [Affine.const_of(2.0)], "r")
        p.set_objective({w: 1.0})
        r = conic.solve_relaxation(p)
        assert r.objective == pytest.approx(2.0, abs=1e-6)

    def test_infeasible_pair(self):
        p = ConicProgram("inf")
        x = p.add_var("x")
        p.add_ge({x: 1.0}, 1.0)
        p.add_le({x: 1.0}, 0.0)
        p.set_objective({x: 1.0})
        assert conic.solve_relaxation(p).status == conic.INFEASIBLE

    def test_unbounded(self):
        p = ConicProgram("unb")
        x = p.add_var("x", ub=0.0)
        p.set_objective({x: 1.0})
        assert conic.solve_relaxation(p).status == conic.UNBOUNDED


class TestValidate:
    def test_feasible_point(self):
        p, t = norm_program()
        rep = p.validate(np.array([5.0]))
        assert rep.max_violation <= 1e-9

    def test_boundary_cone_zero(self):
        p, t = norm_program()
        rep = p.validate(np.array([5.0]))
        (name, v), = rep.cones
        assert name == "soc"
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_perturbed_residual_arithmetic(self):
        p = ConicProgram("arith")
        x = p.add_var("x", lb=0.0, ub=2.0)
        y = p.add_var("y", lb=0.0, ub=2.0)
        p.add_eq({x: 2.0, y: -1.0}, 0.5, "eq")
        p.add_le({x: 1.0, y: 1.0}, 1.0, "le")
        p.add_soc(Affine.of(y), [Affine.of(x)], "cone")
        p.set_objective({x: 1.0})
        pt = np.array([0.8, 0.7])
        rep = p.validate(pt)
        rows = dict(rep.rows)
        assert rows["eq"] == pytest.approx(abs(2 * 0.8 - 0.7 - 0.5))
        assert rows["le"] == pytest.approx(0.8 + 0.7 - 1.0)
        cones = dict(rep.cones)
        assert cones["cone"] == pytest.approx(0.8 - 0.7)

    def test_dimension_check(self):
        p, _ = norm_program()
        with pytest.raises(ValueError):
            p.validate(np.zeros(3))


class TestBranchAndBound:
    def test_matches_enumeration_five_instances(self):
        for seed in range(5):
            p = random_misocp(seed)
            res = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6))
            ref = enumerate_optimum(p)
            assert res.status == conic.OPTIMAL
            assert res.objective == pytest.approx(ref, rel=1e-6, abs=1e-6)

    def test_integral_relaxation_short_circuits(self):
        p = ConicProgram("easy")
        z = p.add_var("z", binary=True)
        y = p.add_var("y", lb=0.0, ub=1.0)
        p.add_ge({z: 1.0}, 1.0)  # forces z = 1 already in the relaxation
        p.add_le({y: 1.0, z: -0.5}, 0.0)
        p.set_objective({z: 2.0, y: -1.0})
        res = conic.solve_misocp(p)
        assert res.status == conic.OPTIMAL
        assert res.node_count == 1
        assert res.objective == pytest.approx(1.5, abs=1e-6)

    def test_fixed_binaries_equal_relaxation(self):
        p = random_misocp(11, n_bin=4)
        for i in p.binary_indices:
            v = p.variables[i]
            v.lb = v.ub = 1.0 if i % 2 else 0.0
        res = conic.solve_misocp(p)
        rel = conic.solve_relaxation(p)
        assert res.objective == pytest.approx(rel.objective, abs=1e-6)

    def test_no_binaries_falls_through(self):
        p, _ = norm_program()
        res = conic.solve_misocp(p)
        assert res.objective == pytest.approx(5.0, abs=1e-6)
        assert res.node_count == 0

    def test_infeasible_misocp(self):
        p = ConicProgram("infm")
        z = p.add_var("z", binary=True)
        p.add_ge({z: 1.0}, 2.0)
        p.set_objective({z: 1.0})
        assert conic.solve_misocp(p).status == conic.INFEASIBLE

    def test_determinism(self):
        p = random_misocp(3)
        r1 = conic.solve_misocp(p, BnBConfig())
        r2 = conic.solve_misocp(p, BnBConfig())
        assert r1.objective == r2.objective
        assert r1.node_count == r2.node_count
        assert np.array_equal(r1.x, r2.x)

    def test_pseudo_cost_branching_agrees(self):
        p = random_misocp(4)
        r1 = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6))
        r2 = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6, branching="pseudo_cost"))
        assert r1.objective == pytest.approx(r2.objective, rel=1e-6)

    def test_incumbent_hint_seeds_solution(self):
        p = random_misocp(6)
        free = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6))
        hint = {p.variables[i].name: round(free.x[i]) for i in p.binary_indices}
        seeded = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6), incumbent_hint=hint)
        assert seeded.objective == pytest.approx(free.objective, rel=1e-6)

    def test_node_limit_returns_honest_status(self):
        p = random_misocp(8, n_bin=10)
        res = conic.solve_misocp(p, BnBConfig(node_limit=3, rel_gap=1e-9,
                                              root_rounding_probe=False,
                                              dive_probe=False))
        assert res.status in (conic.NODE_LIMIT, conic.OPTIMAL, conic.INFEASIBLE)
        if res.status == conic.NODE_LIMIT and res.objective is not None:
            assert res.best_bound <= res.objective + 1e-9


class TestBoundInvariants:
    def test_bound_sandwich_and_monotone(self):
        p = random_misocp(2)
        res = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6))
        bounds = [b for _, b, _ in res.node_log]
        incs = [inc for _, _, inc in res.node_log]
        for b, inc in zip(bounds, incs):
            assert b <= inc + 1e-9
        for b1, b2 in zip(bounds, bounds[1:]):
            assert b2 >= b1 - 1e-9

    def test_refixing_incumbent_reproduces_objective(self):
        p = random_misocp(7)
        res = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6))
        ov = {i: (round(res.x[i]), round(res.x[i])) for i in p.binary_indices}
        again = conic.solve_relaxation(p, ov)
        assert again.objective == pytest.approx(res.objective, abs=1e-6)


class TestSerialization:
    def test_round_trip_preserves_solution(self, tmp_path):
        p = random_misocp(9)
        path = tmp_path / "prog.json"
        p.dump_json(path)
        q = ConicProgram.load_json(path)
        r1 = conic.solve_misocp(p, BnBConfig(rel_gap=1e-6))
        r2 = conic.solve_misocp(q, BnBConfig(rel_gap=1e-6))
        assert r1.objective == pytest.approx(r2.objective, rel=1e-9)

    def test_schema_fields(self, tmp_path):
        p, _ = norm_program()
        d = p.to_dict()
        assert set(d) == {"name", "variables", "objective", "rows", "cones"}
        assert d["cones"][0]["type"] == "soc"
        json.dumps(d)  # serializable

    def test_duplicate_variable_rejected(self):
        p = ConicProgram()
        p.add_var("x")
        with pytest.raises(ValueError):
            p.add_var("x")

    def test_unknown_index_rejected(self):
        p = ConicProgram()
        p.add_var("x")
        with pytest.raises(ValueError):
            p.add_le({5: 1.0}, 0.0)


class TestBnBConfig:
    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            BnBConfig(rel_gap=0.0)

    def test_bad_branching(self):
        with pytest.raises(ValueError):
            BnBConfig(branching="strong")
