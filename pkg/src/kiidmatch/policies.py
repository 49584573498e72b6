"""Online matching policies: BOOST, AUX, AUG and structure-specific sampling rules.

Every rule answers one question: given the safe neighbours ``S`` of an arriving
online node, with what probability is each of them matched?  The same rule also
supplies the weights used to draw AUX/AUG preference lists, so AUG reproduces the
rule's BOOST behaviour exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

DUMMY_PREFIX = "__dummy"
DIST_TOL = 1e-12


class MalformedRule(ValueError):
    pass


class UnknownStructure(KeyError):
    pass


def is_dummy(node: str) -> bool:
    return node.startswith(DUMMY_PREFIX)


def _fallback_weights(S: Sequence[str], weights: Mapping[str, float], xj: Mapping[str, float]) -> dict[str, float]:
    """Normalised weights over ``S`` with fallbacks for an all-zero restriction.

    Order of preference: the rule's weights, then the fractional values ``xj``,
    then uniform.
    """
    for w in (weights, xj):
        tot = math.fsum(w.get(i, 0.0) for i in S)
        if tot > 0:
            return {i: w.get(i, 0.0) / tot for i in S if w.get(i, 0.0) > 0}
    return {i: 1.0 / len(S) for i in S}


@dataclass(frozen=True)
class Proportional:
    """Real-time boosting: sample a safe neighbour proportionally to ``x``."""

    kind = "proportional"

    def distribution(self, S: Sequence[str], xj: Mapping[str, float]) -> dict[str, float]:
        tot = math.fsum(xj.get(i, 0.0) for i in S)
        if not S or tot <= 0:
            return {}
        return {i: xj[i] / tot for i in S if xj.get(i, 0.0) > 0}

    def list_weights(self, xj: Mapping[str, float]) -> dict[str, float]:
        return dict(xj)

    def to_json(self) -> dict:
        return {"type": "proportional"}


@dataclass(frozen=True)
class ExplicitTable:
    """A distribution for every nonempty safe subset of the neighbours.

    ``list_weights`` is optional; when set, AUX/AUG lists are drawn from it.
    """

    table: Mapping[frozenset, Mapping[str, float]]
    list_weights_: Mapping[str, float] | None = None
    kind = "table"

    def __post_init__(self):
        for S, dist in self.table.items():
            if not dist:
                raise MalformedRule(f"empty distribution for safe set {sorted(S)}")
            if any(i not in S for i in dist):
                raise MalformedRule(f"distribution for {sorted(S)} puts mass outside the safe set")
            if any(p < 0 for p in dist.values()):
                raise MalformedRule(f"negative probability for {sorted(S)}")
            if abs(math.fsum(dist.values()) - 1) > DIST_TOL:
                raise MalformedRule(f"distribution for {sorted(S)} sums to {math.fsum(dist.values())}")

    @classmethod
    def from_weights(cls, weights: Mapping[str, float], xj: Mapping[str, float]) -> "ExplicitTable":
        """Table induced by sampling proportionally to a modified vector."""
        nodes = sorted(i for i, v in xj.items() if v > 0)
        table = {}
        for k in range(1, len(nodes) + 1):
            for S in itertools.combinations(nodes, k):
                table[frozenset(S)] = _fallback_weights(S, weights, xj)
        return cls(table, dict(weights))

    def distribution(self, S: Sequence[str], xj: Mapping[str, float]) -> dict[str, float]:
        if not S:
            return {}
        key = frozenset(S)
        if key not in self.table:
            raise MalformedRule(f"no distribution for safe set {sorted(S)}")
        return {i: p for i, p in self.table[key].items() if p > 0}

    def list_weights(self, xj: Mapping[str, float]) -> dict[str, float]:
        return dict(self.list_weights_) if self.list_weights_ is not None else dict(xj)

    def to_json(self) -> dict:
        return {
            "type": "table",
            "entries": [
                {"safe": sorted(S), "dist": dict(sorted(d.items()))}
                for S, d in sorted(self.table.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
            ],
            "list_weights": self.list_weights_,
        }


@dataclass(frozen=True)
class PriorityPair:
    """Both safe: ``first`` w.p. ``z``, ``second`` otherwise.  One safe: that one."""

    first: str
    second: str
    z: float
    kind = "priority_pair"

    def __post_init__(self):
        if not 0 <= self.z <= 1:
            raise MalformedRule(f"z = {self.z} outside [0, 1]")

    def distribution(self, S: Sequence[str], xj: Mapping[str, float]) -> dict[str, float]:
        a, b = self.first in S, self.second in S
        if a and b:
            return {k: v for k, v in ((self.first, self.z), (self.second, 1 - self.z)) if v > 0}
        if a:
            return {self.first: 1.0}
        if b:
            return {self.second: 1.0}
        return Proportional().distribution(S, xj)

    def list_weights(self, xj: Mapping[str, float]) -> dict[str, float]:
        w = {i: 0.0 for i in xj}
        w[self.first] = self.z
        w[self.second] = 1 - self.z
        return w

    def to_json(self) -> dict:
        return {"type": "priority_pair", "first": self.first, "second": self.second, "z": self.z}


SamplingRule = Proportional | ExplicitTable | PriorityPair
PROPORTIONAL = Proportional()


def rule_from_json(doc: Mapping) -> SamplingRule:
    kind = doc.get("type")
    if kind == "proportional":
        return PROPORTIONAL
    if kind == "priority_pair":
        return PriorityPair(str(doc["first"]), str(doc["second"]), float(doc["z"]))
    if kind == "table":
        table = {frozenset(e["safe"]): {str(k): float(v) for k, v in e["dist"].items()} for e in doc["entries"]}
        lw = doc.get("list_weights")
        return ExplicitTable(table, None if lw is None else {str(k): float(v) for k, v in lw.items()})
    raise MalformedRule(f"unknown rule type {kind!r}")


def rules_to_json(rules: Mapping[str, SamplingRule]) -> list[dict]:
    return [{"node": j, "rule": r.to_json()} for j, r in sorted(rules.items())]


def rules_from_json(doc) -> dict[str, SamplingRule]:
    items = doc if isinstance(doc, list) else [doc]
    return {str(d["node"]): rule_from_json(d["rule"]) for d in items}


# ---------------------------------------------------------------------------
# state and single steps


@dataclass
class MatchState:
    safe: set[str]
    matched_by: dict[str, str] = field(default_factory=dict)
    aux_history: dict[str, set[str]] = field(default_factory=dict)
    clock: float = 0.0

    @classmethod
    def initial(cls, offline_ids) -> "MatchState":
        return cls(safe=set(offline_ids))

    def mark(self, i: str, j: str) -> None:
        self.safe.discard(i)
        self.matched_by[i] = j


def neighbor_values(x, j: str) -> dict[str, float]:
    """Nonzero ``x_{ij}`` for online node ``j`` as floats, keyed by offline id."""
    return {i: float(v) for (i, jj), v in sorted(x.values.items()) if jj == j and v > 0}


def _draw(dist: Mapping[str, float], rng) -> str:
    keys = list(dist)
    u = rng.random()
    acc = 0.0
    for k in keys:
        acc += dist[k]
        if u < acc:
            return k
    return keys[-1]


def boost_step(state: MatchState, j: str, x, rule: SamplingRule = PROPORTIONAL, rng=None) -> str | None:
    """One arrival of ``j`` under (modified) BOOST.  Returns the matched node or None."""
    xj = neighbor_values(x, j)
    S = [i for i in xj if i in state.safe]
    dist = rule.distribution(S, xj)
    if not dist:
        return None
    i = _draw(dist, rng)
    state.mark(i, j)
    return i


def pad_neighbors(weights: Mapping[str, float]) -> dict[str, float]:
    """Pad to at least two entries with zero-mass sentinels."""
    out = dict(weights)
    k = 0
    while 0 < len(out) < 2:
        out[f"{DUMMY_PREFIX}{k}"] = 0.0
        k += 1
    return out


def list_distribution(weights: Mapping[str, float], xj: Mapping[str, float] | None = None) -> dict[tuple, float]:
    """Exact law of the preference list: sequential draws without replacement.

    For three neighbours summing to one this is
    ``Pr[(i1, i2, i3)] = x1 * x2 / (x2 + x3)``.  Zero-weight entries go last
    (drawn by ``xj``, then uniformly).
    """
    xj = dict(weights) if xj is None else xj
    out: dict[tuple, float] = {}

    def rec(prefix, remaining, p):
        if not remaining:
            out[tuple(prefix)] = out.get(tuple(prefix), 0.0) + p
            return
        dist = _fallback_weights(remaining, weights, xj)
        for i, q in dist.items():
            if q > 0:
                rec(prefix + [i], [r for r in remaining if r != i], p * q)

    rec([], sorted(weights), 1.0)
    return out


def sample_list(j: str, x, rng, weights: Mapping[str, float] | None = None) -> list[str]:
    """Draw the preference list of ``j`` (padded with sentinels to length >= 2)."""
    xj = neighbor_values(x, j)
    w = pad_neighbors(xj if weights is None else {i: weights.get(i, 0.0) for i in xj})
    base = pad_neighbors(xj)
    remaining = sorted(w)
    out = []
    while remaining:
        dist = _fallback_weights(remaining, w, base)
        i = _draw(dist, rng)
        out.append(i)
        remaining.remove(i)
    return out


def aux_step(state: MatchState, j: str, lst: Sequence[str]) -> str | None:
    """Pick the first list entry not yet matched by ``j`` itself.

    The pick may already be matched by some other online node, in which case the
    arrival is wasted but still recorded in ``j``'s history.
    """
    hist = state.aux_history.setdefault(j, set())
    for i in lst:
        if is_dummy(i) or i in hist:
            continue
        hist.add(i)
        if i in state.safe:
            state.mark(i, j)
        return i
    return None


def aug_step(state: MatchState, j: str, lst: Sequence[str]) -> str | None:
    """Match the first globally safe entry of the list."""
    for i in lst:
        if not is_dummy(i) and i in state.safe:
            state.mark(i, j)
            return i
    return None


# ---------------------------------------------------------------------------
# exact per-state laws, shared by the chain builder and the simulators


def boost_law(S: Sequence[str], xj: Mapping[str, float], rule: SamplingRule) -> dict[str, float]:
    return rule.distribution([i for i in xj if i in S], xj)


def aug_law(S, xj: Mapping[str, float], rule: SamplingRule) -> dict[str, float]:
    out: dict[str, float] = {}
    for lst, p in list_distribution(pad_neighbors(rule_weights(rule, xj)), pad_neighbors(xj)).items():
        for i in lst:
            if not is_dummy(i) and i in S:
                out[i] = out.get(i, 0.0) + p
                break
    return out


def aux_law(history, xj: Mapping[str, float], rule: SamplingRule) -> dict[str, float]:
    """Law of the entry ``j`` picks given the set it already matched."""
    out: dict[str, float] = {}
    for lst, p in list_distribution(pad_neighbors(rule_weights(rule, xj)), pad_neighbors(xj)).items():
        for i in lst:
            if not is_dummy(i) and i not in history:
                out[i] = out.get(i, 0.0) + p
                break
    return out


def rule_weights(rule: SamplingRule, xj: Mapping[str, float]) -> dict[str, float]:
    lw = rule.list_weights(xj)
    return {i: float(lw.get(i, 0.0)) for i in xj}


# ---------------------------------------------------------------------------
# structure-specific modifications

FIG9_Z_RANGE = (0.5663, 1.0)


def fig10_z_bounds() -> tuple[float, float]:
    from .analytic import fig10_lower_root

    return fig10_lower_root(), 4.5 ** (1 / 3) - 1


def fig12_default_z() -> float:
    return 1 - math.e / 3


def _table(weights, xj):
    return ExplicitTable.from_weights(weights, xj)


def modification_rule_for(structure_id: str, **params) -> dict[str, SamplingRule]:
    """Per online node sampling rules for a catalog structure.

    Unlisted online nodes keep proportional boosting.
    """
    s = structure_id.split("(")[0]
    third, two = 1 / 3, 2 / 3
    if s in ("fig5", "fig2b"):
        z1 = params.get("z1", 0.0)
        z2 = params.get("z2", 0.0)
        if not (0 <= z1 <= 1 and 0 <= z2 <= 0.5):
            raise MalformedRule("need z1 in [0, 1] and z2 in [0, 1/2]")
        return {
            "jb": _table({"hi": z1, "i": 1 - z1}, {"hi": third, "i": two}),
            "js": _table({"i": 1 - 2 * z2, "bi": z2, "ti": z2}, {"i": third, "bi": third, "ti": third}),
        }
    if s == "fig9":
        z1 = params.get("z1", 0.0)
        z2 = params.get("z2", 1.0)
        if not (0 <= z1 <= 1 and 0 <= z2 <= 1):
            raise MalformedRule("need z1, z2 in [0, 1]")
        return {
            "jb": _table({"hi": z1, "i": 1 - z1}, {"hi": third, "i": two}),
            "j": _table({"i": 1 - z2, "ti": z2}, {"i": third, "ti": two}),
        }
    if s == "fig10":
        z = params.get("z")
        if z is None:
            lo, hi = fig10_z_bounds()
            z = (lo + hi) / 2
        return {f"j{k}": _table({"i": 1 - z, f"t{k}": z}, {"i": third, f"t{k}": two}) for k in (1, 2, 3)}
    if s == "fig11":
        z = params.get("z", 0.0)
        if not 0 <= z <= 0.5:
            raise MalformedRule("need z in [0, 1/2]")
        return {
            f"j{k}": _table({"i": 1 - 2 * z, f"b{k}": z, f"t{k}": z}, {"i": third, f"b{k}": third, f"t{k}": third})
            for k in (1, 2, 3)
        }
    if s == "fig12":
        z = params.get("z", fig12_default_z())
        return {"j": PriorityPair("i", "ti", z)}
    raise UnknownStructure(structure_id)
