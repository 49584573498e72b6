"""Benchmark and natural LPs, and the fractional program behind the ratio bound."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import FracVector, Instance, TargetConstants
from .simplex import NumericalFailure, simplex  # noqa: F401  (re-exported)

EDGE_CAP = 1 - 1 / math.e
PAIR_CAP = 1 - math.e**-2
BIG_EDGE_CAP = 2 - 3 / math.e
DENOM_FLOOR = 2 / 3 * 1e-9


class Variant(enum.Enum):
    BENCHMARK = "benchmark"
    NATURAL = "natural"
    # every subset S of an offline node's neighbours: sum_{j in S} y_ij <= 1 - exp(-r(S))
    RATE = "rate"


@dataclass
class Constraint:
    kind: str
    where: tuple
    coeffs: dict[int, float]
    bound: float


@dataclass
class LpProblem:
    variables: list[tuple[str, str]]
    objective: list[float]
    constraints: list[Constraint]
    variant: Variant
    upper_bounds: list[float] = field(default_factory=list)

    def count(self, kind: str) -> int:
        return sum(1 for c in self.constraints if c.kind == kind)

    def matrices(self):
        n = len(self.variables)
        A = np.zeros((len(self.constraints), n))
        b = np.zeros(len(self.constraints))
        for r, con in enumerate(self.constraints):
            for k, v in con.coeffs.items():
                A[r, k] = v
            b[r] = con.bound
        return A, b


def build_lp(inst: Instance, variant: Variant | str = Variant.BENCHMARK) -> LpProblem:
    """Encode the LP over one variable per edge.

    Benchmark: offline mass <= 1, online mass <= r_j (= 1 for unit rates), each
    edge <= 1 - 1/e, and each pair of edges at an offline node <= 1 - 1/e^2.
    Natural: only the two mass constraints (edges stay in [0, 1]).
    Rate: for every offline node and every subset S of its neighbours,
    ``sum_S y <= 1 - exp(-sum_S r_j)``; exponential in the degree.
    """
    variant = Variant(variant)
    edges = list(inst.edges)
    col = {e: k for k, e in enumerate(edges)}
    w = inst.weights
    rates = inst.rates
    cons: list[Constraint] = []
    for i in inst.offline_ids:
        ks = [col[e] for e in edges if e[0] == i]
        cons.append(Constraint("offline mass", (i,), {k: 1.0 for k in ks}, 1.0))
    for j in inst.online_ids:
        ks = [col[e] for e in edges if e[1] == j]
        cons.append(Constraint("online mass", (j,), {k: 1.0 for k in ks}, min(1.0, rates[j])))
    upper = [1.0] * len(edges)
    if variant is Variant.BENCHMARK:
        for e in edges:
            cons.append(Constraint("edge cap", e, {col[e]: 1.0}, EDGE_CAP))
        for i in inst.offline_ids:
            inc = [e for e in edges if e[0] == i]
            for e1, e2 in itertools.combinations(inc, 2):
                cons.append(Constraint("pair cap", (e1, e2), {col[e1]: 1.0, col[e2]: 1.0}, PAIR_CAP))
    elif variant is Variant.NATURAL:
        for e in edges:
            cons.append(Constraint("edge bound", e, {col[e]: 1.0}, 1.0))
    else:
        for i in inst.offline_ids:
            inc = [e for e in edges if e[0] == i]
            for size in range(1, len(inc) + 1):
                for sub in itertools.combinations(inc, size):
                    r = sum(rates[e[1]] for e in sub)
                    cons.append(
                        Constraint("subset rate", tuple(sub), {col[e]: 1.0 for e in sub}, 1 - math.exp(-r))
                    )
    objective = [w[e[0]] for e in edges]
    return LpProblem(edges, objective, cons, variant, upper)


def solve_lp(p: LpProblem) -> tuple[FracVector, float]:
    """Solve ``p`` with the bundled simplex; return the vertex and its value.

    Isolated nodes and edgeless instances yield the all-zero vector.
    """
    if not p.variables:
        return FracVector({}), 0.0
    A, b = p.matrices()
    res = simplex(np.asarray(p.objective), A, b)
    x = np.clip(res.x, 0.0, None)
    # simplex noise: values within 1e-12 of zero are zero
    x[x < 1e-12] = 0.0
    vec = FracVector({e: float(v) for e, v in zip(p.variables, x)})
    return vec, float(np.dot(p.objective, x))


@dataclass(frozen=True)
class RatioSolution:
    value: float
    p_a: float
    p_b: float
    p_c: float

    @property
    def offline_mass(self) -> float:
        return self.p_a * 2 / 3 + self.p_b + self.p_c


def _ratio(pa, pb, pc, km, kB, kS):
    return (pa * 2 / 3 * km + pb * kB + pc * kS) / (pa * 2 / 3 + pb + pc)


def ratio_vertices(cap: float = BIG_EDGE_CAP) -> list[tuple[float, float, float]]:
    """Vertices of ``{p_a + p_b + p_c = 1, 0 <= p, p_b <= cap}``."""
    cap = min(max(cap, 0.0), 1.0)
    pts = {(1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (1 - cap, cap, 0.0), (0.0, cap, 1 - cap)}
    return sorted(pts)


def solve_ratio_program(
    constants: TargetConstants | None = None,
    *,
    kappa_m: float | None = None,
    kappa_B: float | None = None,
    kappa_S: float | None = None,
    cap: float = BIG_EDGE_CAP,
) -> RatioSolution:
    """Minimise the per-mass matching ratio of a node whose LP mass is >= 2/3.

    The linear-fractional objective is linearised with the Charnes-Cooper
    substitution ``u = s p``, ``s = 1 / denominator`` and solved as an LP.  The
    result is cross-checked against the polytope's vertices.
    """
    if constants is not None:
        kappa_m = constants.kappa_m if kappa_m is None else kappa_m
        kappa_B = constants.kappa_B if kappa_B is None else kappa_B
        kappa_S = constants.kappa_S if kappa_S is None else kappa_S
    km, kB, kS = float(kappa_m), float(kappa_B), float(kappa_S)
    # variables (u_a, u_b, u_c, s); maximise the negated numerator
    c = -np.array([2 / 3 * km, kB, kS, 0.0])
    A_eq = np.array([[2 / 3, 1.0, 1.0, 0.0], [1.0, 1.0, 1.0, -1.0]])
    b_eq = np.array([1.0, 0.0])
    A_ub = np.array([[0.0, 1.0, 0.0, -cap], [0.0, 0.0, 0.0, -1.0], [1.0, 0.0, 0.0, -1.0],
                     [0.0, 1.0, 0.0, -1.0], [0.0, 0.0, 1.0, -1.0]])
    # s >= 1 guards the division (the denominator never exceeds 1)
    b_ub = np.array([0.0, -1.0, 0.0, 0.0, 0.0])
    res = simplex(c, A_ub, b_ub, A_eq, b_eq)
    ua, ub, uc, s = res.x
    s = max(s, DENOM_FLOOR)
    p = (ua / s, ub / s, uc / s)
    lp_value = -res.objective
    best = min(ratio_vertices(cap), key=lambda v: _ratio(*v, km, kB, kS))
    vert_value = _ratio(*best, km, kB, kS)
    if abs(lp_value - vert_value) > 1e-9 * max(1.0, abs(vert_value)):
        raise NumericalFailure(
            f"Charnes-Cooper value {lp_value!r} disagrees with vertex minimum {vert_value!r}"
        )
    return RatioSolution(value=float(lp_value), p_a=float(p[0]), p_b=float(p[1]), p_c=float(p[2]))


def assemble_ratio_bound(mpm_table: dict[str, float], big_edge_prob_cap: float = BIG_EDGE_CAP) -> float:
    """Guaranteed competitive ratio from per-scenario MPM lower bounds.

    Nodes with LP mass <= 2/3 round to mass 0, 1/3 or 2/3, so their ratio is at
    least ``min(kappa_s, kappa_m)``; heavier nodes are covered by
    :func:`solve_ratio_program`.
    """
    case1 = min(mpm_table["kappa_s"], mpm_table["kappa_m"])
    case2 = solve_ratio_program(
        kappa_m=mpm_table["kappa_m"],
        kappa_B=mpm_table["kappa_B"],
        kappa_S=mpm_table["kappa_S"],
        cap=big_edge_prob_cap,
    ).value
    return min(case1, case2)
