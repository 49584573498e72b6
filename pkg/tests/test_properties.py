import json
import math
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from kiidmatch import analytic as A
from kiidmatch import lp, model, policies, rounding, sim
from kiidmatch.model import FracVector, Instance, NodeClass, RoundedVector, classify_node

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def instances(draw, max_off=4, max_on=4):
    n_off = draw(st.integers(1, max_off))
    n_on = draw(st.integers(1, max_on))
    off = {f"i{k}": draw(st.floats(0.1, 5.0)) for k in range(n_off)}
    on = {f"j{k}": draw(st.floats(0.2, 2.0)) for k in range(n_on)}
    pairs = [(i, j) for i in off for j in on]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [p for p, m in zip(pairs, mask) if m] or pairs[:1]
    return Instance.build(off, on, edges)


@st.composite
def fractional_points(draw):
    """A point of the bipartite matching polytope as a convex mix of matchings."""
    inst = draw(instances())
    k = draw(st.integers(1, 4))
    w = np.array(draw(st.lists(st.integers(1, 20), min_size=k, max_size=k)), float)
    w /= w.sum()
    y = {}
    for c in w:
        used_i, used_j = set(), set()
        order = draw(st.permutations(list(inst.edges)))
        for i, j in order:
            if i not in used_i and j not in used_j and draw(st.booleans()):
                used_i.add(i); used_j.add(j)
                y[(i, j)] = y.get((i, j), 0.0) + c
    return inst, {e: min(v, 1.0) for e, v in y.items()}


@st.composite
def rounded_vectors(draw):
    n_on = draw(st.integers(1, 5))
    vals = {}
    for j in range(n_on):
        v = draw(st.sampled_from([Fraction(0), Fraction(1, 3), Fraction(2, 3)]))
        if v:
            vals[("i", f"j{j}")] = v
    return RoundedVector(vals)


@SETTINGS
@given(fractional_points(), st.integers(0, 2**31))
def test_rounding_preserves_degrees(point, seed):
    _, y = point
    Y = rounding.dependent_round(y, seed)
    assert set(Y.values()) <= {0, 1}
    for side in (0, 1):
        for node in {e[side] for e in y}:
            mass = math.fsum(v for e, v in y.items() if e[side] == node)
            deg = sum(Y[e] for e in Y if e[side] == node)
            assert math.floor(mass + 1e-9) <= deg <= math.ceil(mass - 1e-9)
    assert rounding.dependent_round(y, seed) == Y


@SETTINGS
@given(fractional_points(), st.integers(0, 2**31))
def test_dr_output_in_thirds_and_feasible(point, seed):
    inst, y = point
    r = rounding.dr_ell(y, 3, seed)
    assert all(v in (Fraction(1, 3), Fraction(2, 3), Fraction(1)) or v == 0 for v in r.values.values())
    assert model.validate_polytope(r, inst) == []
    assert rounding.dr_ell(y, 3, seed) == r


@SETTINGS
@given(rounded_vectors())
def test_classify_is_total_and_deterministic(r):
    mass = r.node_mass("i")
    if mass > 1:
        return
    c = classify_node(r, "i")
    assert c == classify_node(r, "i")
    assert isinstance(c, NodeClass)
    expect = {0: NodeClass.ZERO_MASS, Fraction(1, 3): NodeClass.SMALL, Fraction(2, 3): NodeClass.MEDIUM}
    if mass in expect:
        assert c is expect[mass]
    else:
        assert c in (NodeClass.ONE_BIG_ONE_SMALL, NodeClass.THREE_SMALL)


@SETTINGS
@given(fractional_points())
def test_node_masses_sum_to_total(point):
    inst, y = point
    x = FracVector(y)
    total = math.fsum(y.values())
    assert math.isclose(sum(x.node_mass(i) for i in inst.offline_ids), total, abs_tol=1e-12)
    assert math.isclose(sum(x.node_mass(j, "online") for j in inst.online_ids), total, abs_tol=1e-12)


weight_maps = st.dictionaries(st.sampled_from(["a", "b", "c", "d"]), st.floats(0.0, 1.0), min_size=1)


@SETTINGS
@given(weight_maps)
def test_list_law_is_a_distribution(w):
    if not any(v > 0 for v in w.values()):
        return
    law = policies.list_distribution(policies.pad_neighbors(w))
    assert math.isclose(sum(law.values()), 1.0, abs_tol=1e-12)
    assert all(not policies.is_dummy(lst[0]) for lst in law)


@SETTINGS
@given(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3))
def test_list_law_three_neighbours(raw):
    s = sum(raw)
    x = dict(zip("abc", (v / s for v in raw)))
    law = policies.list_distribution(x)
    for (a, b, c), p in law.items():
        assert math.isclose(p, x[a] * x[b] / (x[b] + x[c]), rel_tol=1e-12)


@SETTINGS
@given(weight_maps, st.dictionaries(st.sampled_from(["a", "b", "c", "d"]), st.floats(0.01, 1.0), min_size=1))
def test_table_from_weights_sums_to_one(w, xj):
    table = policies.ExplicitTable.from_weights(w, xj)
    for S, dist in table.table.items():
        assert math.isclose(math.fsum(dist.values()), 1.0, abs_tol=1e-12)
        assert set(dist) <= set(S)


@SETTINGS
@given(instances())
def test_lp_solutions_feasible_and_ordered(inst):
    xb, vb = lp.solve_lp(lp.build_lp(inst, "benchmark"))
    xn, vn = lp.solve_lp(lp.build_lp(inst, "natural"))
    assert vb <= vn + 1e-9
    for x in (xb, xn):
        assert model.validate_polytope(x, inst, 1e-9) == []


@SETTINGS
@given(st.floats(0.3, 1.0), st.floats(0.3, 1.0), st.floats(0.3, 1.0), st.floats(0.1, 10.0))
def test_ratio_program_scales_linearly(km, kB, kS, lam):
    base = lp.solve_ratio_program(kappa_m=km, kappa_B=kB, kappa_S=kS).value
    scaled = lp.solve_ratio_program(kappa_m=lam * km, kappa_B=lam * kB, kappa_S=lam * kS).value
    assert math.isclose(scaled, lam * base, rel_tol=1e-9, abs_tol=1e-12)


@SETTINGS
@given(st.integers(0, 10_000), st.integers(10, 400))
def test_report_json_round_trip(seed, trials):
    inst = Instance.build(["i", "k"], ["j"], [("i", "j"), ("k", "j")])
    x = FracVector({("i", "j"): 0.5, ("k", "j"): 0.5})
    r = sim.estimate_report(inst, x, trials=trials, seed=seed)
    assert sim.SimReport.from_json(json.loads(json.dumps(r.to_json()))) == r


@SETTINGS
@given(fractional_points(), st.sampled_from(["boost", "aug"]))
def test_chain_is_stochastic(point, policy):
    inst, y = point
    x = FracVector(y)
    c = A.build_chain(inst, x, None, policy)
    Q = c.dense()
    assert np.allclose(Q.sum(axis=1), 0.0, atol=1e-12)
    tr = A.transient_solve(c, [0.0, 0.5, 1.0])
    assert np.allclose(tr.P.sum(axis=1), 1.0, atol=1e-9)
    assert (tr.P > -1e-12).all()
