"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
Intended for the small LPs of this package (a few hundred rows at most).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ITER = 10**6
PIVOT_TOL = 1e-12


class NumericalFailure(RuntimeError):
    pass


class Infeasible(RuntimeError):
    pass


class Unbounded(RuntimeError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(T, row, col):
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run(T, basis, n_cols, max_iter, it0=0):
    """Maximise the objective stored in the last row of ``T`` (as -c)."""
    m = T.shape[0] - 1
    it = it0
    while True:
        obj = T[-1, :n_cols]
        entering = np.flatnonzero(obj < -1e-11)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:m, col]
        pos = column > PIVOT_TOL
        if not pos.any():
            raise Unbounded("objective is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise NumericalFailure(f"simplex exceeded {max_iter} iterations")


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=MAX_ITER) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)

    rows = []  # (coeffs, rhs, kind) with rhs >= 0; kind in {"le", "ge", "eq"}
    for a, b in zip(A_ub, b_ub):
        rows.append((a, b, "le") if b >= 0 else (-a, -b, "ge"))
    for a, b in zip(A_eq, b_eq):
        rows.append((a, b, "eq") if b >= 0 else (-a, -b, "eq"))
    m = len(rows)
    n_slack = sum(1 for _, _, k in rows if k != "eq")
    n_art = sum(1 for _, _, k in rows if k != "le")
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    basis = [0] * m
    s = n
    a_col = n + n_slack
    art_cols = []
    for r, (a, b, kind) in enumerate(rows):
        T[r, :n] = a
        T[r, -1] = b
        if kind == "le":
            T[r, s] = 1.0
            basis[r] = s
            s += 1
        else:
            if kind == "ge":
                T[r, s] = -1.0
                s += 1
            T[r, a_col] = 1.0
            basis[r] = a_col
            art_cols.append(a_col)
            a_col += 1

    it = 0
    if art_cols:
        # phase 1: maximise -sum(artificials)
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for r in range(m):
            if basis[r] in art_cols:
                T[-1] -= T[r]
        it = _run(T, basis, width, max_iter)
        if T[-1, -1] < -1e-9:
            raise Infeasible("LP is infeasible")
        # drive remaining artificials out of the basis
        art_set = set(art_cols)
        for r in range(m):
            if basis[r] in art_set:
                cand = np.flatnonzero(np.abs(T[r, : n + n_slack]) > 1e-9)
                if cand.size:
                    _pivot(T, r, int(cand[0]))
                    basis[r] = int(cand[0])
        keep = [r for r in range(m) if basis[r] not in art_set]
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        T = np.delete(T, art_cols, axis=1)
        m = len(keep)
    width = n + n_slack
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for r in range(m):
        if T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    it = _run(T, basis, width, max_iter, it)
    x = np.zeros(width)
    for r in range(m):
        x[basis[r]] = T[r, -1]
    x = x[:n]
    return SimplexResult(x=x, objective=float(c @ x), iterations=it)
