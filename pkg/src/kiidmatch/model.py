"""Domain types shared by every stage of the pipeline.

An :class:`Instance` is a vertex-weighted bipartite graph with unit-capacity
offline nodes and Poisson-rate online types.  Fractional solutions live in
:class:`FracVector`; rounded solutions in :class:`RoundedVector`, whose edge
masses are exact multiples of ``1/scale``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

FEAS_TOL = 1e-9

Edge = tuple[str, str]


class ModelError(ValueError):
    pass


class MalformedVector(ModelError):
    pass


class InvalidMass(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class InvalidInstance(ModelError):
    pass


@dataclass(frozen=True)
class Instance:
    """Bipartite graph ``G = (I, J, E)`` with offline weights and online rates.

    Node ids are opaque strings.  ``offline_index`` and ``online_index`` give
    the dense integer position used internally.
    """

    offline: tuple[tuple[str, float], ...]
    online: tuple[tuple[str, float], ...]
    edges: tuple[Edge, ...]
    horizon: int = 10000
    integral_rates: bool = False
    offline_index: Mapping[str, int] = field(init=False, repr=False, compare=False)
    online_index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        off_ids = [i for i, _ in self.offline]
        on_ids = [j for j, _ in self.online]
        if len(set(off_ids)) != len(off_ids) or len(set(on_ids)) != len(on_ids):
            raise InvalidInstance("duplicate node id")
        for i, w in self.offline:
            if not w > 0:
                raise InvalidInstance(f"offline node {i!r} has non-positive weight {w}")
        for j, r in self.online:
            if not r > 0:
                raise InvalidInstance(f"online type {j!r} has non-positive rate {r}")
            if self.integral_rates and r != 1:
                raise InvalidInstance(f"online type {j!r} must have unit rate")
        if self.horizon < 1:
            raise InvalidInstance("horizon must be a positive integer")
        off = {i: k for k, i in enumerate(off_ids)}
        on = {j: k for k, j in enumerate(on_ids)}
        seen = set()
        for e in self.edges:
            i, j = e
            if i not in off or j not in on:
                raise InvalidInstance(f"edge {e} references an unknown node")
            if e in seen:
                raise InvalidInstance(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "offline_index", off)
        object.__setattr__(self, "online_index", on)

    @classmethod
    def build(cls, offline, online, edges, horizon=10000, integral_rates=False):
        """Convenience constructor.

        ``offline`` / ``online`` may be mappings ``id -> weight/rate`` or plain
        iterables of ids (weight and rate default to 1).
        """
        return cls(
            offline=_pairs(offline),
            online=_pairs(online),
            edges=tuple((str(i), str(j)) for i, j in edges),
            horizon=int(horizon),
            integral_rates=integral_rates,
        )

    @property
    def offline_ids(self) -> list[str]:
        return [i for i, _ in self.offline]

    @property
    def online_ids(self) -> list[str]:
        return [j for j, _ in self.online]

    @property
    def weights(self) -> dict[str, float]:
        return dict(self.offline)

    @property
    def rates(self) -> dict[str, float]:
        return dict(self.online)

    def offline_neighbors(self, j: str) -> list[str]:
        return [i for i, jj in self.edges if jj == j]

    def online_neighbors(self, i: str) -> list[str]:
        return [j for ii, j in self.edges if ii == i]

    def to_json(self) -> dict:
        return {
            "offline": [{"id": i, "weight": w} for i, w in self.offline],
            "online": [{"id": j, "rate": r} for j, r in self.online],
            "edges": [[i, j] for i, j in self.edges],
            "T": self.horizon,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "Instance":
        try:
            return cls(
                offline=tuple((str(d["id"]), float(d["weight"])) for d in doc["offline"]),
                online=tuple((str(d["id"]), float(d.get("rate", 1.0))) for d in doc["online"]),
                edges=tuple((str(i), str(j)) for i, j in doc["edges"]),
                horizon=int(doc.get("T", 10000)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInstance(f"malformed instance document: {exc}") from exc


def _pairs(nodes) -> tuple[tuple[str, float], ...]:
    if isinstance(nodes, Mapping):
        return tuple((str(k), float(v)) for k, v in nodes.items())
    out = []
    for n in nodes:
        if isinstance(n, (tuple, list)):
            out.append((str(n[0]), float(n[1])))
        else:
            out.append((str(n), 1.0))
    return tuple(out)


@dataclass(frozen=True)
class FracVector:
    """Fractional edge values ``x_e`` in ``[0, 1]``."""

    values: Mapping[Edge, float]

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))

    def __getitem__(self, e: Edge) -> float:
        return self.values.get(e, 0.0)

    def node_mass(self, node: str, side: str = "offline") -> float:
        k = 0 if side == "offline" else 1
        return math.fsum(v for e, v in self.values.items() if e[k] == node)

    def support(self) -> list[Edge]:
        return [e for e, v in self.values.items() if v > 0]

    def to_json(self) -> dict:
        return {"edge values": [[i, j, float(v)] for (i, j), v in self.values.items()]}

    @classmethod
    def from_json(cls, doc: Mapping) -> "FracVector":
        return cls({(str(i), str(j)): float(v) for i, j, v in doc["edge values"]})


class NodeClass(enum.Enum):
    ZERO_MASS = "zero"
    SMALL = "1/3"
    MEDIUM = "2/3"
    ONE_BIG_ONE_SMALL = "1B1S"
    THREE_SMALL = "3S"


THIRDS = (Fraction(0), Fraction(1, 3), Fraction(2, 3))


@dataclass(frozen=True)
class RoundedVector:
    """Rounded edge masses stored as exact rationals ``Y_e / scale``."""

    values: Mapping[Edge, Fraction]
    scale: int = 3

    def __post_init__(self):
        vals = {}
        for e, v in dict(self.values).items():
            f = Fraction(v)
            if f * self.scale != int(f * self.scale) or not 0 <= f <= 1:
                raise MalformedVector(f"edge {e} value {v} is not a multiple of 1/{self.scale}")
            vals[e] = f
        object.__setattr__(self, "values", vals)

    def __getitem__(self, e: Edge) -> Fraction:
        return self.values.get(e, Fraction(0))

    def node_mass(self, node: str, side: str = "offline") -> Fraction:
        k = 0 if side == "offline" else 1
        return sum((v for e, v in self.values.items() if e[k] == node), Fraction(0))

    def support(self) -> list[Edge]:
        return [e for e, v in self.values.items() if v > 0]

    def as_floats(self) -> FracVector:
        return FracVector({e: float(v) for e, v in self.values.items()})

    def to_json(self) -> dict:
        return {
            "scale": self.scale,
            "edge values": [[i, j, float(v)] for (i, j), v in self.values.items()],
            "numerators": [[i, j, int(v * self.scale)] for (i, j), v in self.values.items()],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "RoundedVector":
        scale = int(doc.get("scale", 3))
        if "numerators" in doc:
            vals = {(str(i), str(j)): Fraction(int(n), scale) for i, j, n in doc["numerators"]}
        else:
            vals = {
                (str(i), str(j)): Fraction(float(v)).limit_denominator(scale)
                for i, j, v in doc["edge values"]
            }
        return cls(vals, scale)


def classify_node(rounded: RoundedVector, offline_id: str) -> NodeClass:
    """Structural class of an offline node in the rounded graph."""
    incident = [v for (i, _), v in rounded.values.items() if i == offline_id and v != 0]
    for v in incident:
        if v not in THIRDS:
            raise MalformedVector(f"edge value {v} of node {offline_id!r} not in {{0, 1/3, 2/3}}")
    mass = sum(incident, Fraction(0))
    if mass == 0:
        return NodeClass.ZERO_MASS
    if mass == Fraction(1, 3):
        return NodeClass.SMALL
    if mass == Fraction(2, 3):
        return NodeClass.MEDIUM
    if mass == 1:
        if sorted(incident) == [Fraction(1, 3), Fraction(2, 3)]:
            return NodeClass.ONE_BIG_ONE_SMALL
        return NodeClass.THREE_SMALL
    raise InvalidMass(f"node {offline_id!r} has mass {mass}")


@dataclass(frozen=True)
class TargetConstants:
    kappa_star: float
    kappa_s: float
    kappa_m: float
    kappa_B: float
    kappa_S: float

    def as_dict(self) -> dict[str, float]:
        return {
            "kappa_star": self.kappa_star,
            "kappa_s": self.kappa_s,
            "kappa_m": self.kappa_m,
            "kappa_B": self.kappa_B,
            "kappa_S": self.kappa_S,
        }


def target_constants() -> TargetConstants:
    """Target MPMs for the four node scenarios and the overall ratio."""
    e = math.e
    kappa_star = (2 * e**4 - 8 * e**2 + 21 * e - 27) / (2 * e**4)
    return TargetConstants(
        kappa_star=kappa_star,
        kappa_s=kappa_star,
        kappa_m=1 + 27 / 4 * e**-4 - 12 * e**-3 + 2 * e**-2,
        kappa_B=1 - 2 * e**-2,
        kappa_S=1 - 4.5 * e**-3,
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    value: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.value

    def __str__(self):
        return f"{self.kind} {self.where}: {self.value:.12g} > {self.bound:.12g}"


def validate_polytope(x: FracVector | RoundedVector, inst: Instance, tol: float = FEAS_TOL) -> list[Violation]:
    """List every matching-polytope constraint that ``x`` violates.

    An empty list means ``x`` is feasible at tolerance ``tol``.
    """
    edge_set = set(inst.edges)
    unknown = [e for e in x.values if e not in edge_set]
    if unknown:
        raise DimensionMismatch(f"vector has values on unknown edges {unknown[:3]}")
    out = []
    off = {i: 0.0 for i in inst.offline_ids}
    on = {j: 0.0 for j in inst.online_ids}
    for (i, j), v in x.values.items():
        v = float(v)
        if v < -tol:
            out.append(Violation("edge bound", f"({i},{j})", -v, 0.0))
        if v > 1 + tol:
            out.append(Violation("edge bound", f"({i},{j})", v, 1.0))
        off[i] += v
        on[j] += v
    for i, m in off.items():
        if m > 1 + tol:
            out.append(Violation("offline node mass", i, m, 1.0))
    for j, m in on.items():
        if m > 1 + tol:
            out.append(Violation("online node mass", j, m, 1.0))
    return out


def vector_from_pairs(pairs: Iterable[tuple[str, str, object]]) -> RoundedVector:
    return RoundedVector({(i, j): Fraction(v) for i, j, v in pairs})


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
