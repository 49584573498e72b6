"""Canned structures with exact reference values.

Node names: ``i`` is the target offline node; ``hi``, ``bi``, ``ti`` its offline
neighbours; ``jb``/``js`` the online neighbours holding the target's big/small
edge.  Rounded masses are exact thirds.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .model import FracVector, Instance, RoundedVector
from .policies import UnknownStructure, modification_rule_for

E = math.e
S, B = Fraction(1, 3), Fraction(2, 3)


@dataclass(frozen=True)
class Expected:
    """Reference value for one quantity.

    ``quantity`` is ``match:<node>``, ``mpm:<node>``, ``safe:<node>`` or
    ``joint:<a>,<b>`` (at ``t = 1``); ``relation`` is ``"eq"`` or ``"ge"``.
    """

    quantity: str
    value: float
    formula: str
    source: str
    tol: float = 1e-6
    relation: str = "eq"
    policy: str = "boost"

    def check(self, computed: float) -> bool:
        if self.relation == "ge":
            return computed >= self.value - self.tol
        return abs(computed - self.value) <= self.tol


@dataclass
class CatalogEntry:
    name: str
    instance: Instance
    vector: RoundedVector | FracVector
    rules: dict = field(default_factory=dict)
    expected: list[Expected] = field(default_factory=list)
    target: str | None = None
    description: str = ""
    params: dict = field(default_factory=dict)
    tag: str = ""
    # exact chain is small enough to build
    analyzable: bool = True

    def mass(self, node: str) -> float:
        return float(self.vector.node_mass(node))

    def to_json(self) -> dict:
        from .policies import rules_to_json

        return {
            "name": self.name,
            "params": self.params,
            "description": self.description,
            "target": self.target,
            "tag": self.tag,
            "instance": self.instance.to_json(),
            "vector": self.vector.to_json(),
            "rules": rules_to_json(self.rules),
            "expected": [dict(e.__dict__) for e in self.expected],
            "analyzable": self.analyzable,
        }


def vector_from_json(doc: Mapping) -> RoundedVector | FracVector:
    """Rounded vectors carry a ``scale``; anything else is fractional."""
    return RoundedVector.from_json(doc) if "scale" in doc else FracVector.from_json(doc)


def entry_from_json(doc: Mapping) -> CatalogEntry:
    from .policies import rules_from_json

    return CatalogEntry(
        name=doc["name"],
        instance=Instance.from_json(doc["instance"]),
        vector=vector_from_json(doc["vector"]),
        rules=rules_from_json(doc.get("rules") or []),
        expected=[Expected(**e) for e in doc.get("expected", [])],
        target=doc.get("target"),
        description=doc.get("description", ""),
        params=dict(doc.get("params", {})),
        tag=doc.get("tag", ""),
        analyzable=doc.get("analyzable", True),
    )


def _entry(name, offline, online_edges, vals, **kw) -> CatalogEntry:
    online = sorted({j for _, j in online_edges}, key=_natural)
    inst = Instance.build(offline, online, online_edges)
    vec = RoundedVector(dict(zip(online_edges, vals)))
    return CatalogEntry(name, inst, vec, **kw)


def _natural(s: str):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", s)]


def _closed(q, v, f, tol=1e-6, **kw):
    return Expected(q, v, f, "closed form", tol, **kw)


# ---------------------------------------------------------------------------
# builders


def fig1a(K: int = 10) -> CatalogEntry:
    eps = (1 - math.exp(-K)) / K
    online = [f"j{k}" for k in range(1, K + 1)]
    edges = [(i, j) for i in ("i1", "i2") for j in online]
    inst = Instance.build(["i1", "i2"], online, edges)
    vec = FracVector({e: eps for e in edges})
    exp = [
        _closed("joint:i1,i2", math.exp(-K), "exp(-K)"),
        _closed("safe:i1", math.exp(-K) * (1 + K / 2), "exp(-K)(1+K/2)"),
        _closed("safe:i2", math.exp(-K) * (1 + K / 2), "exp(-K)(1+K/2)"),
    ]
    return CatalogEntry("fig1a", inst, vec, {}, exp, "i1", "two offline nodes fully joined to K online types",
                        {"K": K}, "positive correlation")


def fig1b() -> CatalogEntry:
    edges = [("i1", "j1"), ("i1", "j2"), ("i2", "j1"), ("i2", "j2")]
    e = _entry("fig1b", ["i1", "i2"], edges, [B, S, S, B], target="i1",
               description="4-cycle with one big and one small edge per node", tag="positive correlation")
    e.expected = [
        _closed("joint:i1,i2", E**-2, "e^-2"),
        _closed("safe:i1", 2 * E**-2, "2e^-2"),
        _closed("safe:i2", 2 * E**-2, "2e^-2"),
    ]
    return e


def _fig2_edges():
    return [("hi", "jb"), ("i", "jb"), ("i", "js"), ("bi", "js"), ("ti", "js")]


def fig2a() -> CatalogEntry:
    e = _entry("fig2a", ["hi", "i", "bi", "ti"], _fig2_edges(), [S, B, S, S, S], target="i",
               description="1B1S node whose big-edge partner is a small leaf and whose small edge shares a "
                           "three-small online node; unmodified")
    e.expected = [_closed("match:i", 1 - 22 / (9 * E**2), "1-22/(9e^2)")]
    return e


def fig2b(z1: float = 0.0, z2: float = 0.0) -> CatalogEntry:
    e = _entry("fig2b", ["hi", "i", "bi", "ti"], _fig2_edges(), [S, B, S, S, S], target="i",
               description="fig2a with modified sampling on jb (z1) and js (z2)")
    e.rules = modification_rule_for("fig2b", z1=z1, z2=z2)
    e.params = {"z1": z1, "z2": z2}
    from .analytic import aux_mpm

    e.expected = [Expected("mpm:bi", float(aux_mpm(z2)), "aux list-policy MPM(z2)", "closed form", policy="aux")]
    if z1 == 0 and z2 == 0:
        e.expected += _fig5_expected()
    return e


def _fig5_expected():
    return [
        _closed("match:i", 1 - E**-2, "1-e^-2"),
        _closed("match:hi", 1 - 2 / E + E**-2, "1-2/e+e^-2"),
        _closed("mpm:bi", 3 * (1 - 2 / E), "3(1-2/e)"),
        _closed("mpm:ti", 3 * (1 - 2 / E), "3(1-2/e)"),
    ]


def fig5() -> CatalogEntry:
    e = fig2b(0.0, 0.0)
    e.name = "fig5"
    e.params = {}
    e.description = "fig2a with the aggressive modification: jb and js always take i while it is safe"
    return e


def fig3a() -> CatalogEntry:
    edges = [("i0", "j0"), ("i0", "j1"), ("i1", "j0"), ("i1", "j1")]
    e = _entry("fig3a", ["i0", "i1"], edges, [B, S, S, B], target="i0",
               description="1B1S cycle", tag="1B1S cycle")
    v = 1 - 2 * E**-2
    e.expected = [_closed("match:i0", v, "1-2e^-2"), _closed("match:i1", v, "1-2e^-2")]
    return e


def fig3b() -> CatalogEntry:
    off = ["i0", "i1", "i2"]
    edges = [(i, j) for i in off for j in ("j0", "j1", "j2")]
    e = _entry("fig3b", off, edges, [S] * 9, target="i0", description="complete 3x3 graph of small edges",
               tag="3x3 complete small")
    v = 1 - 4.5 * E**-3
    e.expected = [_closed(f"match:{i}", v, "1-(9/2)e^-3") for i in off]
    return e


def fig3c() -> CatalogEntry:
    edges = [("i0", "j0"), ("i0", "j1"), ("i1", "j0"), ("i1", "j1"), ("i1", "j2"), ("i2", "j1"), ("i2", "j2")]
    e = _entry("fig3c", ["i0", "i1", "i2"], edges, [B, S, S, S, S, S, B], target="i1",
               description="3S node whose side neighbours each hold a big edge", tag="mixed big-small triangle")
    side = (11 - 10 * E + 3 * E**3) / (3 * E**3)
    e.expected = [
        _closed("match:i0", side, "(11-10e+3e^3)/(3e^3)"),
        _closed("match:i2", side, "(11-10e+3e^3)/(3e^3)"),
        _closed("match:i1", 1 - 25 / (6 * E**3), "1-25/(6e^3)"),
    ]
    return e


def hardness_deltas(K: int) -> list[float]:
    return [math.exp(-(k - 1)) - math.exp(-k) for k in range(1, K + 1)]


def fig4(K: int = 6, N: int = 500) -> CatalogEntry:
    """Target ``i`` of weight one joined to ``j_1..j_K``; each ``j_k`` also has
    ``N`` private light leaves.  The vector is the fractional one, not rounded."""
    deltas = hardness_deltas(K)
    leaf_w = 1e-3 / (K * N)
    offline = {"i": 1.0}
    edges, vals = [], {}
    for k, d in enumerate(deltas, 1):
        jk = f"j{k}"
        edges.append(("i", jk))
        vals[("i", jk)] = d
        eps = (1 - d) / N
        for n in range(1, N + 1):
            leaf = f"l{k}_{n}"
            offline[leaf] = leaf_w
            edges.append((leaf, jk))
            vals[(leaf, jk)] = eps
    inst = Instance.build(offline, [f"j{k}" for k in range(1, K + 1)], edges)
    limit = (1 - math.exp(-(1 - math.exp(-K)))) / (1 - math.exp(-K))
    exp = [Expected("ratio:i", limit, "(1-exp(-(1-e^-K)))/(1-e^-K)", "large-N limit", 0.02)]
    return CatalogEntry("fig4", inst, FracVector(vals), {}, exp, "i",
                        "hardness instance for boosting on the natural LP", {"K": K, "N": N},
                        analyzable=False)


def fig7_before() -> CatalogEntry:
    edges = [("i1", "j1"), ("i1", "j2"), ("i2", "j1"), ("i2", "j2")]
    return _entry("fig7-before", ["i1", "i2"], edges, [S] * 4, target="i1",
                  description="target shares both online neighbours with one offline neighbour")


def fig7_after() -> CatalogEntry:
    edges = [("i1", "j1"), ("i1", "j2"), ("i2", "j2"), ("ti2", "j1")]
    return _entry("fig7-after", ["i1", "i2", "ti2"], edges, [S] * 4, target="i1",
                  description="the shared edge (i2, j1) moved to a fresh offline node")


FIG8_FOLD = (("i1", "jb"), ("i2", "u3"))


def fig8_before() -> CatalogEntry:
    edges = [("i0", "jb"), ("i0", "js"), ("i1", "jb"), ("i1", "u1"), ("i1", "u2"), ("i2", "js"), ("i2", "u3")]
    return _entry("fig8-before", ["i0", "i1", "i2"], edges, [B, S, S, S, S, B, S], target="i0",
                  description="1B1S target whose two offline neighbours carry extra private edges",
                  params={"e1": list(FIG8_FOLD[0]), "e2": list(FIG8_FOLD[1])})


def fig8_after() -> CatalogEntry:
    from .analytic import fold

    b = fig8_before()
    inst, vec = fold(b.instance, b.vector, "i0", *FIG8_FOLD)
    v = 1 - 2 * E**-2
    return CatalogEntry("fig8-after", inst, vec, {}, [_closed("match:i0", v, "1-2e^-2")], "i0",
                        "fig8-before after folding (i1, jb) with (i2, u3)")


def fig9(z1: float = 0.0, z2: float = 1.0) -> CatalogEntry:
    edges = [("hi", "jb"), ("i", "jb"), ("i", "j"), ("ti", "j")]
    e = _entry("fig9", ["hi", "i", "ti"], edges, [S, B, S, B], target="i",
               description="1B1S node: big edge shared with a small leaf, small edge shared with a big leaf",
               params={"z1": z1, "z2": z2})
    e.rules = modification_rule_for("fig9", z1=z1, z2=z2)
    if z1 == 0:
        from .analytic import fig9_hi_safe, fig9_i_safe, fig9_ti_safe

        z = z2
        e.expected = [
            _closed("safe:ti", float(fig9_ti_safe(1.0, z)), "e^-2(2e-1-z(e-1))"),
            _closed("safe:i", float(fig9_i_safe(1.0, z)), "e^-2(1+z)"),
            _closed("safe:hi", float(fig9_hi_safe(1.0, z)), "e^-2(2e-1+z(e-2))"),
        ]
    return e


def fig10(z: float | None = None) -> CatalogEntry:
    rules = modification_rule_for("fig10", **({} if z is None else {"z": z}))
    zz = 1 - rules["j1"].list_weights_["i"]
    edges = []
    vals = []
    for k in (1, 2, 3):
        edges += [("i", f"j{k}"), (f"t{k}", f"j{k}")]
        vals += [S, B]
    e = _entry("fig10", ["i", "t1", "t2", "t3"], edges, vals, target="i",
               description="3S node whose three online neighbours each hold a big leaf", params={"z": zz})
    e.rules = rules
    from .analytic import eta1, eta_two_thirds

    e.expected = [_closed("mpm:i", eta1(zz), "1-e^-3(1+z)^3")] + [
        _closed(f"mpm:t{k}", eta_two_thirds(zz), "q-system value") for k in (1, 2, 3)
    ]
    return e


def fig11(z: float = 0.0) -> CatalogEntry:
    edges, off = [], ["i"]
    for k in (1, 2, 3):
        edges += [("i", f"j{k}"), (f"b{k}", f"j{k}"), (f"t{k}", f"j{k}")]
        off += [f"b{k}", f"t{k}"]
    e = _entry("fig11", off, edges, [S] * 9, target="i",
               description="3S node whose three online neighbours each hold two small leaves", params={"z": z})
    e.rules = modification_rule_for("fig11", z=z)
    if z == 0:
        e.expected = [_closed("match:i", 1 - E**-3, "1-e^-3")] + [
            Expected(f"mpm:{n}{k}", 3 * (1 - 2 / E), "3(1-2/e)", "dominance", 1e-9, "ge")
            for k in (1, 2, 3) for n in "bt"
        ]
    return e


def _case1_structure(name):
    return _entry(name, ["i", "ti"], [("i", "j"), ("ti", "j")], [S, B], target="i",
                  description="one online node with a small leaf i and a big leaf ti")


def fig12(z: float | None = None) -> CatalogEntry:
    from .analytic import kappa_i, kappa_ti

    zz = 1 - E / 3 if z is None else z
    e = _case1_structure("fig12")
    e.rules = modification_rule_for("fig12", z=zz)
    e.params = {"z": zz}
    e.expected = [
        _closed("mpm:i", kappa_i(zz), "(z/e+1-2/e)/(1/3)"),
        _closed("mpm:ti", kappa_ti(zz), "((1-z)/e+1-2/e)/(2/3)"),
    ]
    return e


def wsg_case1() -> CatalogEntry:
    e = _case1_structure("wsg-case1")
    e.expected = [
        _closed("mpm:i", 3 - 5 / E, "3-5/e"),
        _closed("mpm:ti", 1.5 - 2 / E, "3/2-2/e"),
    ]
    return e


def wsg_case2() -> CatalogEntry:
    e = _entry("wsg-case2", ["i", "hi", "ti"], [("i", "j"), ("hi", "j"), ("ti", "j")], [S] * 3, target="i",
               description="one online node with three small leaves")
    e.expected = [_closed(f"mpm:{n}", 3 - 11 / (2 * E), "3-11/(2e)") for n in ("i", "hi", "ti")]
    return e


def wsg_case3() -> CatalogEntry:
    edges = [("i", "j1"), ("h1", "j1"), ("t1", "j1"), ("i", "j2"), ("h2", "j2"), ("t2", "j2")]
    e = _entry("wsg-case3", ["i", "h1", "t1", "h2", "t2"], edges, [S] * 6, target="i",
               description="mass-2/3 node with two online neighbours, each holding two small leaves")
    e.expected = [_closed("mpm:i", (1 - 121 / (36 * E**2)) / (2 / 3), "(1-121/(36e^2))/(2/3)")] + [
        Expected(f"mpm:{n}", 3 - 11 / (2 * E), "3-11/(2e)", "dominance", 1e-9, "ge") for n in ("h1", "t1", "h2", "t2")
    ]
    return e


BUILDERS: dict[str, Callable[..., CatalogEntry]] = {
    "fig1a": fig1a,
    "fig1b": fig1b,
    "fig2a": fig2a,
    "fig2b": fig2b,
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig3c": fig3c,
    "fig4": fig4,
    "fig5": fig5,
    "fig7-before": fig7_before,
    "fig7-after": fig7_after,
    "fig8-before": fig8_before,
    "fig8-after": fig8_after,
    "fig9": fig9,
    "fig10": fig10,
    "fig11": fig11,
    "fig12": fig12,
    "wsg-case1": wsg_case1,
    "wsg-case2": wsg_case2,
    "wsg-case3": wsg_case3,
}


def names() -> list[str]:
    return list(BUILDERS)


def parse_name(spec: str) -> tuple[str, dict]:
    """``"fig10(z=0.6)"`` -> ``("fig10", {"z": 0.6})``."""
    m = re.fullmatch(r"\s*([\w-]+)\s*(?:\((.*)\))?\s*", spec)
    if not m:
        raise UnknownStructure(spec)
    params = {}
    if m.group(2):
        for part in m.group(2).split(","):
            k, v = part.split("=")
            v = v.strip()
            params[k.strip()] = int(v) if re.fullmatch(r"-?\d+", v) else float(v)
    return m.group(1), params


def get(name: str, **params) -> CatalogEntry:
    base, parsed = parse_name(name)
    parsed.update(params)
    if base not in BUILDERS:
        raise UnknownStructure(name)
    return BUILDERS[base](**parsed)


def all_entries() -> list[CatalogEntry]:
    return [get(n) for n in names()]


def enumerate_ws_mass_one() -> list[CatalogEntry]:
    """The three candidate worst-case neighbourhoods of a mass-one node."""
    return [fig3a(), fig3b(), fig3c()]


def load_embedded() -> list[dict]:
    """The catalog as JSON documents (what ``catalog dump`` prints)."""
    return [json.loads(json.dumps(e.to_json())) for e in all_entries()]


# ---------------------------------------------------------------------------
# hand-built chains, stored verbatim


def fig5_table_chain():
    from .analytic import Ctmc

    states = [(1, 2), (0, 2), (0, 1), (0, 0)]
    R = [[0, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [0, 0, 0, 0]]
    return Ctmc.from_table(states, R)


def aux_table_chain(z: float):
    from .analytic import Ctmc

    states = [(1, 2), (1, 1), (0, 2), (1, 0), (0, 1), (0, 0)]
    R = np.zeros((6, 6))
    R[0, 1], R[0, 2] = 2 * z, 1 - 2 * z
    R[1, 3], R[1, 4] = z / (1 - z), (1 - 2 * z) / (1 - z)
    R[2, 4] = 1
    R[3, 5] = 1
    R[4, 5] = 1
    return Ctmc.from_table(states, R)


def fig10_table_chain(z: float):
    from .analytic import Ctmc

    states = [(1, 3), (0, 3), (1, 2), (1, 1), (0, 2), (1, 0), (0, 1), (0, 0)]
    R = np.zeros((8, 8))
    R[0, 1], R[0, 2] = 3 * (1 - z), 3 * z
    R[1, 4] = 3
    R[2, 3], R[2, 4] = 2 * z, 3 - 2 * z
    R[3, 5], R[3, 6] = z, 3 - z
    R[4, 6] = 2
    R[5, 7] = 3
    R[6, 7] = 1
    return Ctmc.from_table(states, R)


FIG2A_STATES = [(1, 1, 2), (0, 1, 2), (1, 1, 1), (0, 1, 1), (1, 1, 0), (0, 1, 0), ("*", 0, "*")]


def fig2a_H(T: int) -> np.ndarray:
    t = 1 / T
    return np.array([
        [1 - 2 * t, t / 3, 2 * t / 3, 0, 0, 0, t],
        [0, 1 - 2 * t, 0, 2 * t / 3, 0, 0, 4 * t / 3],
        [0, 0, 1 - 2 * t, t / 3, t / 2, 0, 7 * t / 6],
        [0, 0, 0, 1 - 2 * t, 0, t / 2, 3 * t / 2],
        [0, 0, 0, 0, 1 - 2 * t, t / 3, 5 * t / 3],
        [0, 0, 0, 0, 0, 1 - 2 * t, 2 * t],
        [0, 0, 0, 0, 0, 0, 1],
    ])


CASE3_STATES = [(1, 4), (1, 3), (1, "2N"), (1, "2S"), (1, 1), (1, 0), (0, "*")]


def case3_H(T: int) -> np.ndarray:
    t = 1 / T
    return np.array([
        [1 - 2 * t, 4 * t / 3, 0, 0, 0, 0, 2 * t / 3],
        [0, 1 - 2 * t, t / 2, 2 * t / 3, 0, 0, 5 * t / 6],
        [0, 0, 1 - 2 * t, 0, 2 * t / 3, 0, 4 * t / 3],
        [0, 0, 0, 1 - 2 * t, t, 0, t],
        [0, 0, 0, 0, 1 - 2 * t, t / 2, 3 * t / 2],
        [0, 0, 0, 0, 0, 1 - 2 * t, 2 * t],
        [0, 0, 0, 0, 0, 0, 1],
    ])


FIG3C_STATES = [(2, 1), (1, 1), (2, 0), (0, 1), (1, 0), (0, 0)]


def fig3c_H(T: int) -> np.ndarray:
    t = 1 / T
    return np.array([
        [1 - 3 * t, 2 * t, t, 0, 0, 0],
        [0, 1 - 3 * t, 0, 7 * t / 6, 11 * t / 6, 0],
        [0, 0, 1 - 3 * t, 0, 3 * t, 0],
        [0, 0, 0, 1 - 3 * t, 0, 3 * t],
        [0, 0, 0, 0, 1 - 2 * t, 2 * t],
        [0, 0, 0, 0, 0, 1],
    ])


def _safe_set(chain, s):
    return {lab[5:] for lab, arr in chain.labels.items() if arr[s]}


def lump_key(name: str) -> Callable:
    """Map a state of the automatically built chain to the hand-built state."""

    def fig5_key(s, tr):
        S_ = _safe_set(tr.chain, s)
        return (int("i" in S_), len(S_ & {"bi", "ti"}))

    def fig2a_key(s, tr):
        S_ = _safe_set(tr.chain, s)
        if "i" not in S_:
            return ("*", 0, "*")
        return (int("hi" in S_), 1, len(S_ & {"bi", "ti"}))

    def fig3c_key(s, tr):
        S_ = _safe_set(tr.chain, s)
        return (len(S_ & {"i0", "i2"}), int("i1" in S_))

    def fig10_key(s, tr):
        S_ = _safe_set(tr.chain, s)
        return (int("i" in S_), len(S_ & {"t1", "t2", "t3"}))

    def case3_key(s, tr):
        S_ = _safe_set(tr.chain, s)
        if "i" not in S_:
            return (0, "*")
        a, b = len(S_ & {"h1", "t1"}), len(S_ & {"h2", "t2"})
        q = a + b
        if q == 2:
            return (1, "2N" if 2 in (a, b) else "2S")
        return (1, q)

    def aux_key(s, tr):
        # only the history of js matters; positions follow the online order
        chain = tr.chain
        hist = chain.states[s][_aux_pos(chain)]
        return (int("i" not in hist), len({"bi", "ti"} - hist))

    return {
        "fig5": fig5_key,
        "fig2a": fig2a_key,
        "fig3c": fig3c_key,
        "fig10": fig10_key,
        "wsg-case3": case3_key,
        "aux": aux_key,
    }[name]


def _aux_pos(chain) -> int:
    # online types with nonzero neighbours in fig2b are (jb, js), in that order
    return 1


# ---------------------------------------------------------------------------
# probes: recompute a closed form from an automatically built chain


def _transient(name, t, policy="boost", **params):
    from .analytic import build_chain, transient_solve

    e = get(name, **params)
    grid = np.atleast_1d(np.asarray(t, dtype=float))
    return e, transient_solve(build_chain(e.instance, e.vector, e.rules, policy), grid)


def _zmap(name, kw):
    if "z" in kw and name in ("fig9", "fig2b"):
        kw = dict(kw)
        kw["z2"] = kw.pop("z")
    return kw


def probe_safe(name, node):
    return lambda t, **kw: _transient(name, t, **_zmap(name, kw))[1].safe(node)


def probe_matched(name, node):
    return lambda t, **kw: _transient(name, t, **_zmap(name, kw))[1].matched(node)


def probe_mpm(name, node):
    def f(t, **kw):
        e, tr = _transient(name, t, **_zmap(name, kw))
        return tr.matched(node) / e.mass(node)

    return f


def probe_joint(name, nodes):
    return lambda t, **kw: _transient(name, t, **_zmap(name, kw))[1].joint_safe(*nodes)


def probe_conditional(name, nodes, given):
    nodes = (nodes,) if isinstance(nodes, str) else tuple(nodes)

    def f(t, **kw):
        _, tr = _transient(name, t, **_zmap(name, kw))
        return tr.joint_safe(given, *nodes) / tr.safe(given)

    return f


def probe_rate(name, node):
    return lambda t, **kw: _transient(name, t, **_zmap(name, kw))[1].conditional_rate(node)


def probe_case2_tau1_half(t, **kw):
    _, tr = _transient("wsg-case2", t)
    mask = tr.chain.labels["safe:i"] & tr.chain.labels["safe:ti"] & ~tr.chain.labels["safe:hi"]
    return tr.prob(mask) / tr.safe("i")


def probe_fig3c_beta(t, **kw):
    _, tr = _transient("fig3c", t)
    L = tr.chain.labels
    return tr.prob(L["safe:i1"] & (L["safe:i0"] ^ L["safe:i2"]))


def probe_fig5_q(k):
    keys = [(1, 2), (0, 2), (0, 1), (0, 0)]

    def f(t, **kw):
        from .analytic import lump

        _, tr = _transient("fig5", t)
        return lump(tr, lump_key("fig5"), keys + [(1, 1), (1, 0)])[:, k]

    return f


def probe_aux_bi_mpm(t, z=0.0, **kw):
    e, tr = _transient("fig2b", t, policy="aux", z1=0.0, z2=z)
    return tr.matched("bi") / e.mass("bi")


def probe_fig1a(joint: bool):
    def f(t, K=10, **kw):
        _, tr = _transient("fig1a", t, K=K)
        return tr.joint_safe("i1", "i2") if joint else tr.safe("i1")

    return f
