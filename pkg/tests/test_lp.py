import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from kiidmatch import catalog
from kiidmatch.lp import (
    BIG_EDGE_CAP,
    EDGE_CAP,
    PAIR_CAP,
    Variant,
    assemble_ratio_bound,
    build_lp,
    ratio_vertices,
    solve_lp,
    solve_ratio_program,
)
from kiidmatch.model import Instance, target_constants, validate_polytope
from kiidmatch.simplex import Infeasible, Unbounded, simplex
from kiidmatch.verify import random_instance

E = math.e


def star(deg):
    return Instance.build(["i"], [f"j{k}" for k in range(deg)], [("i", f"j{k}") for k in range(deg)])


def k22():
    return Instance.build(["i1", "i2"], ["j1", "j2"], [(i, j) for i in ("i1", "i2") for j in ("j1", "j2")])


def _scipy_value(p):
    A, b = p.matrices()
    res = linprog(-np.asarray(p.objective), A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


class TestSimplex:
    @pytest.mark.parametrize("seed", range(25))
    def test_matches_highs(self, seed):
        rng = np.random.default_rng(seed)
        m, n = rng.integers(2, 7, size=2)
        A = rng.uniform(-1, 2, size=(m, n))
        b = rng.uniform(0, 3, size=m)
        c = rng.uniform(-1, 2, size=n)
        # a box keeps it bounded
        A = np.vstack([A, np.eye(n)])
        b = np.concatenate([b, np.full(n, 5.0)])
        ours = simplex(c, A, b)
        ref = linprog(-c, A_ub=A, b_ub=b, method="highs")
        assert ours.objective == pytest.approx(-ref.fun, abs=1e-9)
        assert np.all(A @ ours.x <= b + 1e-9)

    def test_equalities_and_negative_rhs(self):
        # max x + y  s.t.  x + y = 1, x >= 0.25 (as -x <= -0.25)
        res = simplex([1.0, 1.0], [[-1.0, 0.0]], [-0.25], [[1.0, 1.0]], [1.0])
        assert res.objective == pytest.approx(1.0)
        assert res.x[0] >= 0.25 - 1e-12

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            simplex([1.0], [[1.0]], [1.0], [[1.0]], [2.0])

    def test_unbounded(self):
        with pytest.raises(Unbounded):
            simplex([1.0, 0.0], [[0.0, 1.0]], [1.0])

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the textbook rule
        c = [0.75, -150, 0.02, -6]
        A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
        b = [0, 0, 1]
        assert simplex(c, A, b).objective == pytest.approx(0.05)


class TestBuild:
    def test_single_edge(self):
        p = build_lp(star(1))
        assert len(p.variables) == 1
        assert sorted(c.bound for c in p.constraints) == pytest.approx(sorted([1.0, 1.0, EDGE_CAP]))

    def test_pair_constraints(self):
        assert build_lp(star(3)).count("pair cap") == 3
        assert build_lp(star(3), "natural").count("pair cap") == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_constraint_count(self, seed):
        inst = random_instance(np.random.default_rng(seed))
        deg = [len(inst.online_neighbors(i)) for i in inst.offline_ids]
        want = len(inst.offline_ids) + len(inst.online_ids) + len(inst.edges) + sum(math.comb(d, 2) for d in deg)
        assert len(build_lp(inst).constraints) == want

    def test_rate_variant_subsets(self):
        p = build_lp(star(3), Variant.RATE)
        assert p.count("subset rate") == 7
        one = next(c for c in p.constraints if c.kind == "subset rate" and len(c.where) == 1)
        assert one.bound == pytest.approx(EDGE_CAP)


class TestSolve:
    def test_single_edge(self):
        x, v = solve_lp(build_lp(star(1)))
        assert v == pytest.approx(1 - 1 / E, abs=1e-12)
        assert x[("i", "j0")] == pytest.approx(1 - 1 / E, abs=1e-12)

    def test_k22_value(self):
        x, v = solve_lp(build_lp(k22()))
        assert v == pytest.approx(2 * (1 - E**-2), abs=1e-12)
        for i in ("i1", "i2"):
            assert x.node_mass(i) == pytest.approx(PAIR_CAP, abs=1e-12)

    def test_k22_against_vertex_enumeration(self):
        # brute force: every basis of the 4-variable benchmark polytope
        p = build_lp(k22())
        A, b = p.matrices()
        A = np.vstack([A, -np.eye(4)])
        b = np.concatenate([b, np.zeros(4)])
        best = -np.inf
        for rows in itertools.combinations(range(len(b)), 4):
            M = A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            v = np.linalg.solve(M, b[list(rows)])
            if np.all(A @ v <= b + 1e-9):
                best = max(best, float(np.dot(p.objective, v)))
        assert solve_lp(p)[1] == pytest.approx(best, abs=1e-12)
        assert best == pytest.approx(2 * (1 - E**-2), abs=1e-12)

    def test_k22_midpoint_is_optimal(self):
        from kiidmatch.model import FracVector

        inst = k22()
        y = FracVector({e: (1 - E**-2) / 2 for e in inst.edges})
        assert validate_polytope(y, inst) == []
        assert sum(y.values.values()) == pytest.approx(solve_lp(build_lp(inst))[1], abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("variant", ["benchmark", "natural"])
    def test_random_against_highs(self, seed, variant):
        rng = np.random.default_rng(100 + seed)
        inst = random_instance(rng)
        p = build_lp(inst, variant)
        x, v = solve_lp(p)
        assert v == pytest.approx(_scipy_value(p), abs=1e-9)
        assert validate_polytope(x, inst) == []

    @pytest.mark.parametrize("seed", range(10))
    def test_benchmark_below_natural(self, seed):
        inst = random_instance(np.random.default_rng(200 + seed))
        assert solve_lp(build_lp(inst))[1] <= solve_lp(build_lp(inst, "natural"))[1] + 1e-9

    def test_isolated_nodes(self):
        inst = Instance.build(["a", "b"], ["x"], [("a", "x")])
        x, v = solve_lp(build_lp(inst))
        assert x.node_mass("b") == 0
        assert solve_lp(build_lp(Instance.build(["a"], ["x"], [])))[1] == 0.0

    def test_hardness_vector_is_natural_optimum(self):
        e = catalog.fig4(K=3, N=5)
        unit = Instance.build(e.instance.offline_ids, e.instance.online_ids, e.instance.edges)
        _, v = solve_lp(build_lp(unit, "natural"))
        assert v == pytest.approx(sum(e.vector.values.values()), abs=1e-9)
        assert validate_polytope(e.vector, unit) == []


class TestRatioProgram:
    def test_target_constants(self):
        k = target_constants()
        r = solve_ratio_program(k)
        assert r.value == pytest.approx(k.kappa_star, abs=1e-9)
        assert r.p_b == pytest.approx(2 - 3 / E, abs=1e-9)
        assert r.p_a + r.p_b + r.p_c == pytest.approx(1.0, abs=1e-12)

    def test_argmin_mass(self):
        r = solve_ratio_program(target_constants())
        assert min(abs(r.offline_mass - 1), abs(r.offline_mass - (4 / 3 - 1 / E))) < 1e-6

    def test_constant_objective(self):
        r = solve_ratio_program(kappa_m=0.8, kappa_B=0.8, kappa_S=0.8)
        assert r.value == pytest.approx(0.8, abs=1e-12)

    @pytest.mark.parametrize("lam", [0.5, 1.3, 2.0])
    def test_linear_in_uniform_scaling(self, lam):
        k = target_constants()
        a = solve_ratio_program(k).value
        b = solve_ratio_program(kappa_m=lam * k.kappa_m, kappa_B=lam * k.kappa_B, kappa_S=lam * k.kappa_S).value
        assert b == pytest.approx(lam * a, abs=1e-9)

    def test_vertices(self):
        vs = ratio_vertices()
        assert len(vs) == 4
        assert all(abs(sum(v) - 1) < 1e-12 and v[1] <= BIG_EDGE_CAP + 1e-12 for v in vs)

    def test_assemble(self):
        k = target_constants().as_dict()
        assert assemble_ratio_bound(k) == pytest.approx(0.7341, abs=1e-4)
        assert assemble_ratio_bound({n: 1.0 for n in k}, 0.3) == pytest.approx(1.0)
        assert assemble_ratio_bound({**k, "kappa_B": 0.6692}) < 0.7341
