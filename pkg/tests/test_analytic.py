import math

import numpy as np
import pytest

from kiidmatch import analytic as A
from kiidmatch import catalog as C
from kiidmatch.model import Instance, RoundedVector, target_constants
from kiidmatch.simplex import NumericalFailure

from . import oracles

E = math.e

# Match probabilities at t = 1 from the brute-force mpmath oracle (tests/oracles.py).
ORACLE_MATCH = {
    "fig1b": {"i1": 0.7293294335267746, "i2": 0.7293294335267746},
    "fig2a": {"hi": 0.42732245743281694, "i": 0.6691804187549467, "bi": 0.35986513285364696, "ti": 0.35986513285364696},
    "fig3a": {"i0": 0.7293294335267746, "i1": 0.7293294335267746},
    "fig3b": {"i0": 0.7759581923446122, "i1": 0.7759581923446122, "i2": 0.7759581923446122},
    "fig3c": {"i0": 0.7314349732267921, "i1": 0.792553881800567, "i2": 0.7314349732267922},
    "wsg-case1": {"i": 0.3868675980475961, "ti": 0.5094940784380768},
    "wsg-case2": {"i": 0.32555435785235576, "hi": 0.32555435785235576, "ti": 0.32555435785235576},
    "wsg-case3": {"i": 0.5451230757880519, "h1": 0.34578178754496613, "t1": 0.34578178754496613},
    "fig7-before": {"i1": 0.7293294335267746, "i2": 0.7293294335267746},
    "fig7-after": {"i1": 0.6954956127176215, "i2": 0.4915462611865887, "ti2": 0.4915462611865887},
    "fig8-before": {"i0": 0.7799103524618972, "i1": 0.9248111480706092, "i2": 0.8337773986891984},
    "fig8-after": {"i0": 0.7293294335267746, "i1": 0.8646647167633872, "i2": 0.7293294335267746},
}
# MPMs under the aggressive modification (i, hi, bi, ti)
ORACLE_FIG5_MPM = {"i": 0.8646647167633874, "hi": 1.1987292026811842, "bi": 0.7927233529713462, "ti": 0.7927233529713462}
# MPM of bi under the list policy, js weights (1-2z, z, z)
ORACLE_AUX_MPM = {0.0: 0.5168137720927642, 0.1: 0.6333089284637216, 1 / 3: 0.9766630735570672, 0.45: 1.2166207999575303}
# thresholds solved with brentq on the oracle chains
ORACLE_ROOTS = {"fig9": 0.566176933078286, "fig10_upper": 0.6509636244473084, "fig10_lower": 0.5607299442133806}


def matched_at_1(e, policy="boost"):
    tr = A.transient_solve(A.build_chain(e.instance, e.vector, e.rules, policy), [1.0])
    return {i: float(tr.matched(i)[0]) for i in e.instance.offline_ids}


@pytest.mark.parametrize("name", sorted(ORACLE_MATCH))
def test_frozen_oracle_match(name):
    got = matched_at_1(C.get(name))
    for i, v in ORACLE_MATCH[name].items():
        assert got[i] == pytest.approx(v, abs=1e-10)


def test_frozen_fig5():
    e = C.fig5()
    got = matched_at_1(e)
    for i, v in ORACLE_FIG5_MPM.items():
        assert got[i] / e.mass(i) == pytest.approx(v, abs=1e-10)


@pytest.mark.parametrize("z", sorted(ORACLE_AUX_MPM))
def test_frozen_aux(z):
    e = C.fig2b(0.0, z)
    assert matched_at_1(e, "aux")["bi"] / e.mass("bi") == pytest.approx(ORACLE_AUX_MPM[z], abs=1e-10)
    assert float(A.aux_mpm(z)) == pytest.approx(ORACLE_AUX_MPM[z], abs=1e-12)


def test_frozen_roots():
    assert A.fig9_lower_root() == pytest.approx(ORACLE_ROOTS["fig9"], abs=1e-9)
    assert A.fig10_upper_root() == pytest.approx(ORACLE_ROOTS["fig10_upper"], abs=1e-9)
    assert A.fig10_lower_root() == pytest.approx(ORACLE_ROOTS["fig10_lower"], abs=1e-9)


def test_oracle_still_agrees():
    # rerun the oracle on one structure so a drift in it would surface
    e = C.get("fig3c")
    off = e.instance.offline_ids
    x = {k: float(v) for k, v in e.vector.values.items()}
    law = oracles.boost_law_at(off, e.instance.rates, x)
    assert oracles.matched(off, law, "i1") == pytest.approx(ORACLE_MATCH["fig3c"]["i1"], abs=1e-14)


class TestPrintedValues:
    def test_table_one(self):
        assert matched_at_1(C.fig3a())["i0"] == pytest.approx(0.7293, abs=1e-4)
        assert matched_at_1(C.fig3b())["i0"] == pytest.approx(0.7760, abs=1e-4)
        m = matched_at_1(C.fig3c())
        assert m["i0"] == pytest.approx(0.7314, abs=1e-4)
        assert m["i1"] == pytest.approx(0.7925, abs=1e-4)

    def test_fig3c_closed_forms(self):
        m = matched_at_1(C.fig3c())
        assert m["i1"] == pytest.approx(1 - 25 / (6 * E**3), abs=1e-10)
        assert m["i0"] == pytest.approx((11 - 10 * E + 3 * E**3) / (3 * E**3), abs=1e-10)

    def test_fig5_hi(self):
        assert matched_at_1(C.fig5())["hi"] == pytest.approx(0.3996, abs=1e-4)

    def test_case_values(self):
        assert float(A.aux_mpm(0.0)) == pytest.approx(3 * (1 - 9 / (4 * E)), abs=1e-12)
        assert 3 - 5 / E == pytest.approx(1.1606, abs=1e-4)
        assert 1.5 - 2 / E == pytest.approx(0.7642, abs=1e-4)
        e = C.wsg_case2()
        assert matched_at_1(e)["i"] / e.mass("i") == pytest.approx(3 - 11 / (2 * E), abs=1e-9)
        e = C.wsg_case3()
        assert matched_at_1(e)["i"] / e.mass("i") == pytest.approx(0.8177, abs=1e-4)


class TestChain:
    def test_cycle_joint(self):
        e = C.fig3a()
        t = np.array([0.25, 0.5, 1.0])
        tr = A.transient_solve(A.build_chain(e.instance, e.vector), t)
        assert np.allclose(tr.joint_safe("i0", "i1"), np.exp(-2 * t), atol=1e-10)

    def test_fig5_reachable(self):
        e = C.fig5()
        c = A.build_chain(e.instance, e.vector, e.rules)
        tr = A.transient_solve(c, [1.0])
        lumped = A.lump(tr, C.lump_key("fig5"), [(1, 2), (0, 2), (0, 1), (0, 0), (1, 1), (1, 0)])
        assert lumped[0, 4:] == pytest.approx([0, 0], abs=1e-15)
        hand = A.transient_solve(C.fig5_table_chain(), [1.0]).P[0]
        assert lumped[0, :4] == pytest.approx(hand, abs=1e-10)

    def test_empty(self):
        inst = Instance.build(["a"], ["x"], [])
        c = A.build_chain(inst, RoundedVector({}))
        assert c.n == 1
        assert A.transient_solve(c, [0.0, 1.0]).P[:, 0] == pytest.approx([1.0, 1.0])

    def test_zero_rates(self):
        c = A.Ctmc.from_table(["a", "b"], [[0, 0], [0, 0]], start=1)
        assert A.transient_solve(c, [0.5, 1.0]).P == pytest.approx(np.array([[0, 1], [0, 1]]))

    def test_non_stochastic(self):
        with pytest.raises(A.NonStochastic):
            A.Ctmc(["a", "b"], np.array([[-1.0, 0.5], [0.0, 0.0]]), np.array([1.0, 0.0]))
        with pytest.raises(A.NonStochastic):
            A.Ctmc(["a", "b"], np.array([[1.0, -1.0], [0.0, 0.0]]), np.array([1.0, 0.0]))

    def test_state_cap(self):
        e = C.fig1a(10)
        with pytest.raises(A.StateSpaceTooLarge):
            A.build_chain(e.instance, e.vector, None, "aux", max_states=100)

    def test_bad_grid(self):
        c = C.fig5_table_chain()
        with pytest.raises(ValueError):
            A.transient_solve(c, [1.0, 0.5])

    def test_rk4_vs_uniformization(self):
        for name in ("fig2a", "fig3c", "wsg-case3", "fig11"):
            e = C.get(name)
            c = A.build_chain(e.instance, e.vector, e.rules)
            grid = np.linspace(0, 1, 11)
            a = A.transient_solve(c, grid, cross_check=False).P
            assert np.max(np.abs(a - A.uniformization(c, grid))) < 1e-9
            assert np.allclose(a.sum(axis=1), 1, atol=1e-9)

    def test_cross_check_fires(self):
        c = C.fig5_table_chain()
        with pytest.raises(NumericalFailure):
            A.transient_solve(c, [1.0], step=0.5, tol=1e-12)

    def test_conditional_rate(self):
        e = C.wsg_case1()
        tr = A.transient_solve(A.build_chain(e.instance, e.vector), [0.0, 0.5, 1.0])
        t = tr.t
        assert tr.conditional_rate("i") == pytest.approx(1 - 2 / 3 / (1 + 2 * t / 3), abs=1e-9)


class TestHandChains:
    def test_aux_table_matches_built(self):
        for z in (0.0, 0.2, 0.4):
            tr = A.transient_solve(A.build_chain(*_fig2b(z), "aux"), [1.0])
            keys = [(1, 2), (1, 1), (0, 2), (1, 0), (0, 1), (0, 0)]
            built = A.lump(tr, C.lump_key("aux"), keys)[0]
            hand = A.transient_solve(C.aux_table_chain(z), [1.0]).P[0]
            assert built == pytest.approx(hand, abs=1e-10)

    def test_fig10_table(self):
        z = 0.6
        e = C.fig10(z)
        tr = A.transient_solve(A.build_chain(e.instance, e.vector, e.rules), [1.0])
        keys = [(1, 3), (0, 3), (1, 2), (1, 1), (0, 2), (1, 0), (0, 1), (0, 0)]
        built = A.lump(tr, C.lump_key("fig10"), keys)[0]
        assert built == pytest.approx(A.transient_solve(C.fig10_table_chain(z), [1.0]).P[0], abs=1e-10)


def _fig2b(z):
    e = C.fig2b(0.0, z)
    return e.instance, e.vector, e.rules


class TestDiscrete:
    def test_fig2a(self):
        lim = A.discrete_chain_limit(C.fig2a_H)
        assert lim.pi[-1] == pytest.approx(1 - 22 / (9 * E**2), abs=1e-6)
        assert lim.pi[-1] == pytest.approx(0.6692, abs=1e-4)

    def test_case3(self):
        lim = A.discrete_chain_limit(C.case3_H)
        e2 = E**-2
        want = [e2, 4 * e2 / 3, e2 / 3, 4 * e2 / 9, 2 * e2 / 9, e2 / 36, 1 - 121 * e2 / 36]
        assert lim.pi == pytest.approx(want, abs=1e-6)

    def test_identity(self):
        lim = A.discrete_chain_limit(lambda T: np.eye(3), p0=np.array([0.2, 0.3, 0.5]))
        assert lim.pi == pytest.approx([0.2, 0.3, 0.5])

    def test_first_order_convergence(self):
        lim = A.discrete_chain_limit(C.fig3c_H)
        errs = [np.max(np.abs(lim.raw[T] - lim.pi)) for T in (100, 1000, 10000)]
        assert all(T * err < 1.0 for T, err in zip((100, 1000, 10000), errs))
        assert errs[0] > errs[1] > errs[2]

    def test_rejects_bad_rows(self):
        with pytest.raises(A.NonStochastic):
            A.discrete_chain_limit(lambda T: np.array([[0.5, 0.4], [0, 1]]))

    def test_richardson_exact_on_polynomials(self):
        Ts = [10, 100, 1000]
        vals = [np.array(2.0 + 3 / T - 5 / T**2) for T in Ts]
        assert float(A.richardson(vals, Ts)) == pytest.approx(2.0, abs=1e-10)


class TestClosedForms:
    @pytest.mark.parametrize("form", A.closed_form_catalog(), ids=lambda f: f.name)
    def test_against_chain(self, form):
        t = np.array([0.25, 0.5, 0.75, 1.0]) if form.time_dependent else np.array([1.0])
        a = np.asarray(form(t), dtype=float)
        b = np.asarray(form.probe(t, **dict(form.defaults)), dtype=float)
        assert np.max(np.abs(a - b)) < 1e-7
        if form.reference is not None:
            assert float(np.asarray(form(1.0))) == pytest.approx(form.reference, abs=1e-12)

    def test_case2_corrected_form(self):
        # the form carries the factor t: it vanishes at t = 0
        (f,) = [f for f in A.closed_form_catalog() if f.name == "case2.tau1_half"]
        assert float(f(0.0)) == 0.0


class TestThresholds:
    def test_printed(self):
        assert A.fig9_lower_root() == pytest.approx(0.5663, abs=1e-3)
        assert A.fig10_upper_root() == pytest.approx(4.5 ** (1 / 3) - 1, abs=1e-9)
        assert A.fig10_lower_root() == pytest.approx(0.5607, abs=1e-4)
        assert A.fig12_balanced_root() == pytest.approx(1 - E / 3, abs=1e-9)

    def test_no_sign_change(self):
        with pytest.raises(A.NoSignChange):
            A.find_z_threshold(lambda z: z, 5.0)

    def test_not_monotone(self):
        with pytest.raises(A.NotMonotone):
            A.find_z_threshold(lambda z: (z - 0.5) ** 2, 0.1)

    def test_kappa_m_at_root(self):
        z = A.fig9_lower_root()
        assert float(A.fig9_ti_mpm(z)) == pytest.approx(target_constants().kappa_m, abs=1e-9)


class TestStructural:
    def test_folding(self):
        b = C.fig8_before()
        cmp = A.verify_folding(b.instance, b.vector, "i0", *C.FIG8_FOLD)
        assert cmp.holds()
        assert len(cmp.t) == 101

    def test_fold_rejects_same_edge(self):
        b = C.fig8_before()
        e1 = C.FIG8_FOLD[0]
        with pytest.raises(A.TypeMismatch):
            A.fold(b.instance, b.vector, "i0", e1, e1)

    def test_fold_rejects_wrong_types(self):
        b = C.fig8_before()
        e1, e2 = C.FIG8_FOLD
        with pytest.raises(A.TypeMismatch):
            A.fold(b.instance, b.vector, "i0", e2, e1)

    def test_fold_onto_existing_edge(self):
        from fractions import Fraction

        S = Fraction(1, 3)
        inst = Instance.build(["t", "a", "b"], ["j", "k2"], [("t", "j"), ("a", "j"), ("b", "j"), ("b", "k2")])
        X = RoundedVector({("t", "j"): S, ("a", "j"): S, ("b", "j"): S, ("b", "k2"): S})
        _, X2 = A.fold(inst, X, "t", ("a", "j"), ("b", "k2"))
        assert X2[("b", "j")] == Fraction(2, 3)
        assert ("a", "j") not in X2.values

    def test_decomposition(self):
        b, a = C.fig7_before(), C.fig7_after()
        assert A.compare_safe_curves((b.instance, b.vector), (a.instance, a.vector), "i1").holds()

    def test_symmetry_monotonicity(self):
        e = C.fig2a()
        cmp = A.verify_symmetry_monotonicity(e.instance, e.vector, "i", "bi")
        assert cmp.holds()
        assert cmp.min_slack >= 0
        zero = A.verify_symmetry_monotonicity(e.instance, e.vector, "i", "bi", rate=0)
        assert np.array_equal(zero.before, zero.after)
