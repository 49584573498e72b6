"""Independent reference computations used to freeze expected values.

Nothing here imports the package's chain builder or solvers: states are
enumerated by brute force and the transient law is a 30-digit ``mpmath.expm``.
(``scipy.linalg.expm`` 1.15 returns a non-stochastic matrix for some of these
lower-triangular generators, so it is not used.)
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np


def _pl_lists(weights):
    """Plackett-Luce law over orderings of ``weights``; zero weights go last uniformly."""
    pos = [k for k, w in weights.items() if w > 0]
    zero = [k for k, w in weights.items() if w <= 0]
    out = {}
    for perm in itertools.permutations(pos):
        p, left = 1.0, sum(weights[k] for k in pos)
        for k in perm:
            p *= weights[k] / left
            left -= weights[k]
        for tail in itertools.permutations(zero):
            out[perm + tail] = p / math.factorial(len(zero))
    return out


def boost_generator(offline, online, x, pick=None):
    """Dense generator over safe bitmasks.

    ``online`` maps type -> rate, ``x`` maps (i, j) -> value.  ``pick(j, safe)``
    may override the proportional choice and must return {i: prob}.
    """
    n = len(offline)
    Q = np.zeros((1 << n, 1 << n))
    for mask in range(1 << n):
        safe = [offline[k] for k in range(n) if mask >> k & 1]
        for j, r in online.items():
            nb = {i: x[(i, jj)] for (i, jj) in x if jj == j and i in safe and x[(i, jj)] > 0}
            if not nb:
                continue
            law = pick(j, nb) if pick else {i: v / sum(nb.values()) for i, v in nb.items()}
            for i, p in law.items():
                if p > 0:
                    Q[mask, mask & ~(1 << offline.index(i))] += r * p
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def _transient(Q, start, t):
    with mpmath.workdps(30):
        P = mpmath.expm(mpmath.matrix(Q.tolist()) * t)
        return np.array([float(P[start, k]) for k in range(Q.shape[0])])


def boost_law_at(offline, online, x, t=1.0, pick=None):
    Q = boost_generator(offline, online, x, pick)
    return _transient(Q, Q.shape[0] - 1, t)


def matched(offline, law, node):
    k = offline.index(node)
    return float(sum(p for m, p in enumerate(law) if not m >> k & 1))


def aux_matched(offline, online, x, node, t=1.0, weights=None):
    """AUX: each type walks its own list; a pick of an already matched node is wasted.

    States are tuples of per-type histories; ``weights`` overrides the list weights
    per type.
    """
    types = list(online)
    nbrs = {j: {i: x[(i, jj)] for (i, jj) in x if jj == j and x[(i, jj)] > 0} for j in types}
    lists = {}
    for j in types:
        w = dict((weights or {}).get(j, nbrs[j]))
        while len(w) < 2:
            w[f"_pad{len(w)}"] = 0.0
        lists[j] = _pl_lists(w)
    start = tuple(frozenset() for _ in types)
    index, order, edges = {start: 0}, [start], []
    k = 0
    while k < len(order):
        s = order[k]
        for a, j in enumerate(types):
            law = {}
            for lst, p in lists[j].items():
                for i in lst:
                    if not i.startswith("_pad") and i not in s[a]:
                        law[i] = law.get(i, 0.0) + p
                        break
            for i, p in law.items():
                new = list(s)
                new[a] = s[a] | {i}
                new = tuple(new)
                if new not in index:
                    index[new] = len(order)
                    order.append(new)
                edges.append((k, index[new], online[j] * p))
        k += 1
    Q = np.zeros((len(order), len(order)))
    for a, b, r in edges:
        Q[a, b] += r
    np.fill_diagonal(Q, -Q.sum(axis=1))
    law = _transient(Q, 0, t)
    return float(sum(p for s, p in zip(order, law) if any(node in h for h in s)))
