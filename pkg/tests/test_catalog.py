import json
import math

import pytest

from kiidmatch import catalog as C
from kiidmatch.model import validate_polytope
from kiidmatch.policies import UnknownStructure
from kiidmatch.verify import catalog_checks, evaluate_quantity

E = math.e


@pytest.mark.parametrize("name", C.names())
def test_entry_is_feasible(name):
    e = C.get(name)
    assert validate_polytope(e.vector, e.instance) == []


@pytest.mark.parametrize("name", C.names())
def test_json_round_trip(name):
    e = C.get(name)
    doc = json.loads(json.dumps(e.to_json()))
    back = C.entry_from_json(doc)
    assert back.instance == e.instance
    assert back.vector.values == e.vector.values
    assert back.rules == e.rules
    assert back.expected == e.expected
    assert back.to_json() == e.to_json()


@pytest.mark.parametrize("name", C.names())
def test_expected_values_carry_a_source(name):
    for x in C.get(name).expected:
        assert x.source and x.formula


def test_every_expected_value_reproduced():
    rows = catalog_checks()
    assert rows
    bad = [r.row() for r in rows if not r.passed]
    assert not bad, bad


def test_lookups():
    assert C.get("fig3a").expected[0].value == pytest.approx(1 - 2 * E**-2)
    e = C.get("fig3c")
    assert evaluate_quantity(e, "match:i0") == pytest.approx(0.7314, abs=1e-4)
    assert evaluate_quantity(e, "match:i1") == pytest.approx(0.7925, abs=1e-4)
    assert evaluate_quantity(C.get("wsg-case3"), "mpm:i") == pytest.approx(0.8177, abs=1e-4)


def test_parameterised_names():
    assert C.parse_name("fig10(z=0.6)") == ("fig10", {"z": 0.6})
    assert C.parse_name("fig1a(K=4)") == ("fig1a", {"K": 4})
    assert C.get("fig10(z=0.6)").params["z"] == 0.6
    assert C.get("fig9", z2=0.7).params["z2"] == 0.7
    with pytest.raises(UnknownStructure):
        C.get("fig99")


def test_ws_mass_one():
    ents = C.enumerate_ws_mass_one()
    assert len(ents) == 3
    one_big = {e.name: evaluate_quantity(e, f"match:{e.target}") for e in ents if e.name in ("fig3a", "fig3c")}
    assert one_big["fig3a"] < evaluate_quantity(C.fig3c(), "match:i0")
    three_small = {"fig3b": evaluate_quantity(C.fig3b(), "match:i0"), "fig3c": evaluate_quantity(C.fig3c(), "match:i1")}
    assert min(three_small, key=three_small.get) == "fig3b"


def test_fig8_fold_moves_mass():
    after = C.fig8_after()
    (e1, e2) = C.FIG8_FOLD
    assert e1 not in after.vector.values and e2 not in after.vector.values
    assert after.vector[(e2[0], e1[1])] == C.fig8_before().vector[e1]


def test_embedded_matches_builders():
    docs = C.load_embedded()
    assert [d["name"] for d in docs] == C.names()


def test_hardness_entry():
    e = C.fig4(K=3, N=10)
    assert not e.analyzable
    assert e.vector.node_mass("i") == pytest.approx(1 - math.exp(-3))
    assert all(v > 0 for v in e.vector.values.values())
