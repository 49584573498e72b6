"""Bipartite dependent rounding (pipage on cycles and maximal paths) and DR[l].

All bookkeeping is done in integers: the scaled input ``l * y`` is put on a
common denominator ``D`` so that every pipage step is exact and degree
preservation holds without tolerance games.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy.stats import binomtest

from .model import Edge, FracVector, Instance, ModelError, RoundedVector

# floats are quantised to this grid before rounding
FLOAT_DENOM = 1 << 40
SNAP_TOL = 1e-9


class ScaleOverflow(ModelError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for every seeded run in the package."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def _to_ints(z: Mapping[Edge, object]) -> tuple[dict[Edge, int], int]:
    if all(isinstance(v, (int, Fraction)) for v in z.values()):
        D = 1
        for v in z.values():
            D = math.lcm(D, Fraction(v).denominator)
        return {e: int(Fraction(v) * D) for e, v in z.items()}, D
    D = FLOAT_DENOM
    out = {}
    snap = int(SNAP_TOL * D)
    for e, v in z.items():
        q = round(float(v) * D)
        k = round(q / D)
        if abs(q - k * D) <= snap:
            q = k * D
        out[e] = max(q, 0)
    _trim_excess(out, D, snap)
    return out, D


def _trim_excess(vals: dict[Edge, int], D: int, snap: int) -> None:
    # LP noise can push a node sum a hair over an integer; pull it back so the
    # ceiling of the node sum does not jump by one.
    for side in (0, 1):
        sums: dict[str, int] = {}
        for e, v in vals.items():
            sums[e[side]] = sums.get(e[side], 0) + v
        for node, s in sums.items():
            over = s - (s // D) * D
            if 0 < over <= snap * 8:
                for e in sorted((e for e in vals if e[side] == node), key=lambda e: -(vals[e] % D)):
                    take = min(over, vals[e] % D)
                    vals[e] -= take
                    over -= take
                    if over == 0:
                        break


def _find_structure(frac: set[Edge]) -> list[Edge]:
    """Cycle or maximal path through the lexicographically first fractional edge.

    Returned edges are in walk order, so consecutive edges share a node.
    """
    adj: dict[tuple[int, str], list[Edge]] = {}
    for e in sorted(frac):
        adj.setdefault((0, e[0]), []).append(e)
        adj.setdefault((1, e[1]), []).append(e)

    def other(v, e):
        return (1, e[1]) if v[0] == 0 else (0, e[0])

    e0 = min(frac)
    verts = [(0, e0[0]), (1, e0[1])]
    edges = [e0]
    used = {e0}
    # forward extension
    while True:
        v = verts[-1]
        nxt = next((e for e in adj[v] if e not in used), None)
        if nxt is None:
            break
        u = other(v, nxt)
        if u in verts:
            k = verts.index(u)
            return edges[k:] + [nxt]
        verts.append(u)
        edges.append(nxt)
        used.add(nxt)
    # backward extension
    while True:
        v = verts[0]
        nxt = next((e for e in adj[v] if e not in used), None)
        if nxt is None:
            return edges
        u = other(v, nxt)
        if u in verts:
            k = verts.index(u)
            return [nxt] + edges[:k]
        verts.insert(0, u)
        edges.insert(0, nxt)
        used.add(nxt)


def _pipage(vals: dict[Edge, int], D: int, rng: np.random.Generator) -> dict[Edge, int]:
    frac = {e for e, v in vals.items() if v % D}
    while frac:
        path = _find_structure(frac)
        plus, minus = path[0::2], path[1::2]
        up = lambda e: D - vals[e] % D  # noqa: E731
        down = lambda e: vals[e] % D  # noqa: E731
        alpha = min([up(e) for e in plus] + [down(e) for e in minus])
        beta = min([down(e) for e in plus] + [up(e) for e in minus])
        step = alpha if rng.random() * (alpha + beta) < beta else -beta
        for e in plus:
            vals[e] += step
        for e in minus:
            vals[e] -= step
        for e in path:
            if vals[e] % D == 0:
                frac.discard(e)
    return {e: v // D for e, v in vals.items()}


def dependent_round(z: Mapping[Edge, object], seed=None, *, rng=None) -> dict[Edge, int]:
    """Round a nonnegative edge vector to integers on a bipartite graph.

    Each output ``Y_e`` is ``floor(z_e)`` or ``ceil(z_e)`` with ``E[Y_e] = z_e``,
    and every node sum lands on the floor or ceiling of its fractional sum.

    Parameters
    ----------
    z : mapping
        Edge ``(i, j)`` to value. Fractions are handled exactly; floats are
        quantised to ``2**-40`` and snapped to integers within 1e-9.
    seed : int, optional
        Seed for a fresh Philox generator. Ignored when ``rng`` is given.
    """
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    vals, D = _to_ints(z)
    return _pipage(vals, D, rng)


@dataclass
class RoundingRun:
    y: FracVector
    ell: int
    seed: int | None
    Y: dict[Edge, int]
    X: RoundedVector


def dr_ell(y: FracVector | Mapping[Edge, float], ell: int = 3, seed=None, *, rng=None) -> RoundedVector:
    """Scale by ``ell``, dependent-round, divide by ``ell``."""
    return dr_ell_run(y, ell, seed, rng=rng).X


def dr_ell_run(y, ell: int = 3, seed=None, *, rng=None) -> RoundingRun:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    vals = y.values if isinstance(y, FracVector) else dict(y)
    scaled = {}
    for e, v in vals.items():
        if isinstance(v, (int, Fraction)):
            s = Fraction(v) * ell
        else:
            s = float(v) * ell
        if s > ell + SNAP_TOL * ell:
            raise ScaleOverflow(f"edge {e}: {ell} * {float(v)} exceeds {ell}")
        scaled[e] = s
    Y = dependent_round(scaled, seed, rng=rng)
    X = RoundedVector({e: Fraction(k, ell) for e, k in Y.items()}, scale=ell)
    yv = y if isinstance(y, FracVector) else FracVector({e: float(v) for e, v in vals.items()})
    return RoundingRun(yv, ell, seed, Y, X)


@dataclass(frozen=True)
class BigEdgeEstimate:
    node: str
    hits: int
    trials: int
    low: float
    high: float

    @property
    def estimate(self) -> float:
        return self.hits / self.trials


def wilson_interval(hits: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    ci = binomtest(hits, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_big_edge_prob(
    inst: Instance, trials: int = 10_000, seed: int = 0, y: FracVector | None = None
) -> dict[str, BigEdgeEstimate]:
    """Per offline node, how often DR[3] leaves it with an edge of mass 2/3.

    ``y`` defaults to the benchmark LP optimum of ``inst``.
    """
    if y is None:
        from .lp import build_lp, solve_lp

        y, _ = solve_lp(build_lp(inst))
    rng = make_rng(seed)
    hits = {i: 0 for i in inst.offline_ids}
    for _ in range(trials):
        Y = dependent_round({e: 3 * v for e, v in y.values.items()}, rng=rng)
        big = {e[0] for e, k in Y.items() if k >= 2}
        for i in big:
            hits[i] += 1
    out = {}
    for i, h in hits.items():
        lo, hi = wilson_interval(h, trials)
        out[i] = BigEdgeEstimate(i, h, trials, lo, hi)
    return out
