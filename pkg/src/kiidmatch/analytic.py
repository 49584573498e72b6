"""Exact safe/match probabilities of small structures via Markov chains.

Chains are built automatically from an instance, a rounded vector and a policy:
a BOOST/AUG state is the set of safe offline nodes, an AUX state records which
offline nodes each online type has already picked.  Transient laws come from a
fixed-step RK4 integration of the forward equations, cross-checked against
uniformization.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize, sparse
from scipy.stats import poisson

from .model import Edge, FracVector, Instance, ModelError, RoundedVector
from .policies import PROPORTIONAL, aug_law, aux_law, boost_law, neighbor_values
from .simplex import NumericalFailure

RK4_STEP = 1e-4
ROW_TOL = 1e-12
BOOST_STATE_CAP = 4096
AUX_STATE_CAP = 10**6


class StateSpaceTooLarge(RuntimeError):
    pass


class NonStochastic(ValueError):
    pass


class NoSignChange(ValueError):
    pass


class NotMonotone(ValueError):
    pass


class TypeMismatch(ModelError):
    pass


@dataclass
class Ctmc:
    """Finite continuous-time chain.  ``Q[s, s']`` is the rate from ``s`` to ``s'``."""

    states: list
    Q: np.ndarray | sparse.spmatrix
    p0: np.ndarray
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    # per-state total rate of losing each node (for conditional rates)
    node_rates: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        Q = self.Q
        rows = np.asarray(Q.sum(axis=1)).ravel()
        if rows.size and np.max(np.abs(rows)) > ROW_TOL * max(1.0, _qmax(Q)):
            raise NonStochastic(f"rate-matrix rows do not sum to zero (max {np.max(np.abs(rows)):.3g})")
        off = Q.copy()
        if sparse.issparse(off):
            off.setdiag(0)
            neg = off.min() if off.nnz else 0.0
        else:
            np.fill_diagonal(off, 0.0)
            neg = off.min() if off.size else 0.0
        if neg < -ROW_TOL:
            raise NonStochastic("negative off-diagonal rate")
        if abs(self.p0.sum() - 1) > 1e-12:
            raise NonStochastic("initial law does not sum to one")

    @property
    def n(self) -> int:
        return len(self.states)

    def dense(self) -> np.ndarray:
        return self.Q.toarray() if sparse.issparse(self.Q) else np.asarray(self.Q)

    @classmethod
    def from_table(cls, states, rates: Sequence[Sequence[float]], start=0) -> "Ctmc":
        """Chain from an off-diagonal rate table (diagonal is filled in)."""
        Q = np.array(rates, dtype=float)
        np.fill_diagonal(Q, 0.0)
        np.fill_diagonal(Q, -Q.sum(axis=1))
        p0 = np.zeros(len(states))
        p0[start] = 1.0
        return cls(list(states), Q, p0)


def _qmax(Q) -> float:
    if sparse.issparse(Q):
        return float(abs(Q).max()) if Q.nnz else 0.0
    return float(np.max(np.abs(Q))) if Q.size else 0.0


def _rule_for(rules, j):
    return (rules or {}).get(j, PROPORTIONAL)


def build_chain(
    inst: Instance,
    x: FracVector | RoundedVector,
    rules: Mapping | None = None,
    policy: str = "boost",
    max_states: int | None = None,
) -> Ctmc:
    """Enumerate the reachable states of ``policy`` on ``inst`` and their rates.

    Labels ``"safe:<id>"`` mark states in which an offline node is unmatched.
    """
    policy = policy.lower()
    off = inst.offline_ids
    bit = {i: 1 << k for k, i in enumerate(off)}
    rates = inst.rates
    online = [j for j in inst.online_ids if neighbor_values(x, j)]
    xjs = {j: neighbor_values(x, j) for j in online}
    if policy in ("boost", "aug"):
        cap = BOOST_STATE_CAP if max_states is None else max_states
        law_fn = boost_law if policy == "boost" else aug_law
        cache: dict = {}

        def succ(mask):
            out = []
            for j in online:
                xj = xjs[j]
                S = frozenset(i for i in xj if mask & bit[i])
                key = (j, S)
                if key not in cache:
                    cache[key] = law_fn(S, xj, _rule_for(rules, j))
                for i, p in cache[key].items():
                    if p > 0:
                        out.append((mask & ~bit[i], rates[j] * p, i))
            return out

        start = (1 << len(off)) - 1
        safe_of = lambda s: s  # noqa: E731
    elif policy == "aux":
        cap = AUX_STATE_CAP if max_states is None else max_states
        pos = {j: k for k, j in enumerate(online)}
        cache = {}

        def succ(state):
            out = []
            for j in online:
                hist = state[pos[j]]
                key = (j, hist)
                if key not in cache:
                    cache[key] = aux_law(hist, xjs[j], _rule_for(rules, j))
                for i, p in cache[key].items():
                    if p > 0:
                        new = list(state)
                        new[pos[j]] = hist | {i}
                        out.append((tuple(new), rates[j] * p, i))
            return out

        start = tuple(frozenset() for _ in online)
        full = (1 << len(off)) - 1

        def safe_of(state):
            m = full
            for h in state:
                for i in h:
                    m &= ~bit[i]
            return m
    else:
        raise ValueError(f"unknown policy {policy!r}")

    index = {start: 0}
    order = [start]
    trans: list[tuple[int, int, float]] = []
    queue = deque([start])
    while queue:
        s = queue.popleft()
        a = index[s]
        for t, r, _ in succ(s):
            if t not in index:
                if len(index) >= cap:
                    raise StateSpaceTooLarge(f"more than {cap} reachable states")
                index[t] = len(order)
                order.append(t)
                queue.append(t)
            if t != s:
                trans.append((a, index[t], r))
    n = len(order)
    if trans:
        rows, cols, vals = zip(*trans)
    else:
        rows, cols, vals = (), (), ()
    Q = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    Q = Q - sparse.diags(np.asarray(Q.sum(axis=1)).ravel())
    Q = Q.tocsr()
    if n <= 256:
        Q = Q.toarray()
    p0 = np.zeros(n)
    p0[0] = 1.0
    masks = [safe_of(s) for s in order]
    labels = {f"safe:{i}": np.array([bool(m & bit[i]) for m in masks]) for i in off}
    chain = Ctmc(order, Q, p0, labels)
    chain.node_rates = _node_loss_rates(chain, off)
    return chain


def _node_loss_rates(c: Ctmc, off) -> dict[str, np.ndarray]:
    Qd = c.dense() if c.n <= 2048 else None
    out = {}
    for i in off:
        lab = c.labels[f"safe:{i}"]
        if Qd is not None:
            out[i] = np.where(lab, Qd[:, ~lab].sum(axis=1), 0.0)
        else:
            Qs = sparse.csr_matrix(c.Q)
            out[i] = np.where(lab, np.asarray(Qs[:, np.flatnonzero(~lab)].sum(axis=1)).ravel(), 0.0)
    return out


@dataclass
class Transient:
    t: np.ndarray
    P: np.ndarray  # len(t) x n
    chain: Ctmc

    def prob(self, label: str | np.ndarray) -> np.ndarray:
        mask = self.chain.labels[label] if isinstance(label, str) else label
        return self.P[:, mask].sum(axis=1)

    def safe(self, node: str) -> np.ndarray:
        return self.prob(f"safe:{node}")

    def matched(self, node: str) -> np.ndarray:
        return 1.0 - self.safe(node)

    def joint_safe(self, *nodes: str) -> np.ndarray:
        mask = np.ones(self.chain.n, dtype=bool)
        for i in nodes:
            mask &= self.chain.labels[f"safe:{i}"]
        return self.P[:, mask].sum(axis=1)

    def conditional_rate(self, node: str) -> np.ndarray:
        """Matching rate of ``node`` given that it is safe."""
        num = self.P @ self.chain.node_rates[node]
        den = self.safe(node)
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _rk4(QT, p, t0, t1, step):
    n_steps = max(1, math.ceil((t1 - t0) / step - 1e-9))
    h = (t1 - t0) / n_steps
    for _ in range(n_steps):
        k1 = QT @ p
        k2 = QT @ (p + 0.5 * h * k1)
        k3 = QT @ (p + 0.5 * h * k2)
        k4 = QT @ (p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def uniformization(c: Ctmc, t_grid, tol: float = 1e-14) -> np.ndarray:
    """Transient law by uniformization, one row per grid time."""
    t_grid = np.asarray(t_grid, dtype=float)
    lam = float(max(-c.dense().diagonal().min(), 0.0)) if c.n else 0.0
    out = np.zeros((t_grid.size, c.n))
    if lam == 0.0:
        out[:] = c.p0
        return out
    P = np.eye(c.n) + c.dense() / lam
    for k, t in enumerate(t_grid):
        mu = lam * t
        kmax = int(poisson.ppf(1 - tol, mu)) + 10 if mu > 0 else 0
        w = poisson.pmf(np.arange(kmax + 1), mu)
        v = c.p0.copy()
        acc = w[0] * v
        for m in range(1, kmax + 1):
            v = v @ P
            acc += w[m] * v
        out[k] = acc
    return out


def transient_solve(c: Ctmc, t_grid, step: float = RK4_STEP, cross_check: bool = True, tol: float = 1e-9) -> Transient:
    """Solve ``p' = Q^T p`` on a grid in ``[0, 1]`` with fixed-step RK4.

    With ``cross_check`` the result is compared against uniformization and a
    :class:`NumericalFailure` is raised if they differ by more than ``tol``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0) or (t_grid.size and t_grid[0] < 0):
        raise ValueError("grid must be nondecreasing and start at >= 0")
    QT = c.Q.T.tocsr() if sparse.issparse(c.Q) else np.ascontiguousarray(c.Q.T)
    out = np.zeros((t_grid.size, c.n))
    p = c.p0.copy()
    t = 0.0
    for k, tk in enumerate(t_grid):
        if tk > t:
            p = _rk4(QT, p, t, tk, step)
            t = tk
        out[k] = p
    if np.any(np.abs(out.sum(axis=1) - 1) > 1e-9):
        raise NumericalFailure("transient law lost mass")
    if cross_check and c.n <= 2048:
        ref = uniformization(c, t_grid)
        gap = float(np.max(np.abs(ref - out))) if out.size else 0.0
        if gap > tol:
            raise NumericalFailure(f"RK4 and uniformization differ by {gap:.3g}")
    return Transient(t_grid, out, c)


# ---------------------------------------------------------------------------
# discrete-time chains


def check_stochastic(H: np.ndarray) -> None:
    if np.any(H < -1e-15):
        raise NonStochastic("negative transition probability")
    if np.any(np.abs(H.sum(axis=1) - 1) > 1e-12):
        raise NonStochastic("rows of H do not sum to one")


def richardson(values: Sequence[np.ndarray], Ts: Sequence[int]) -> np.ndarray:
    """Extrapolate ``f(T) = a + b/T + c/T^2 + ...`` to ``T = inf``."""
    h = 1.0 / np.asarray(Ts, dtype=float)
    V = np.vander(h, len(Ts), increasing=True)
    coef = np.linalg.solve(V, np.stack([np.asarray(v, dtype=float).ravel() for v in values]))
    return coef[0].reshape(np.shape(values[0]))


@dataclass
class DiscreteLimit:
    pi: np.ndarray
    raw: dict[int, np.ndarray]
    Q: np.ndarray
    ctmc: np.ndarray
    gap: float


def discrete_chain_limit(
    H_builder: Callable[[int], np.ndarray],
    p0=None,
    Ts: Sequence[int] = (100, 1000, 10000),
    check_tol: float = 1e-6,
) -> DiscreteLimit:
    """Limit of ``p0 H(T)^T`` as ``T -> inf``.

    ``H(T)`` rows are from-states.  The generator ``lim T (H - I)`` is solved as
    a chain at ``t = 1`` and must agree with the extrapolated limit.
    """
    raw = {}
    Qs = []
    for T in Ts:
        H = np.asarray(H_builder(T), dtype=float)
        check_stochastic(H)
        if p0 is None:
            p0 = np.zeros(H.shape[0])
            p0[0] = 1.0
        raw[T] = np.asarray(p0, dtype=float) @ np.linalg.matrix_power(H, T)
        Qs.append(T * (H - np.eye(H.shape[0])))
    pi = richardson([raw[T] for T in Ts], Ts)
    Q = richardson(Qs, Ts)
    c = Ctmc(list(range(Q.shape[0])), Q, p0)
    ct = transient_solve(c, [1.0]).P[0]
    gap = float(np.max(np.abs(ct - pi)))
    if gap > check_tol:
        raise NumericalFailure(f"discrete limit and chain solve differ by {gap:.3g}")
    return DiscreteLimit(pi, raw, Q, ct, gap)


def discrete_from_ctmc(c: Ctmc) -> Callable[[int], np.ndarray]:
    """One arrival per round: ``H(T) = I + Q / T``."""
    Q = c.dense()
    return lambda T: np.eye(c.n) + Q / T


def lump(tr: Transient, key: Callable[[object, Transient], object], keys: Sequence) -> np.ndarray:
    """Aggregate a transient law onto coarser states given by ``key(state)``."""
    pos = {k: n for n, k in enumerate(keys)}
    M = np.zeros((tr.chain.n, len(keys)))
    for s, state in enumerate(tr.chain.states):
        M[s, pos[key(s, tr)]] = 1.0
    return tr.P @ M


# ---------------------------------------------------------------------------
# closed forms

E = math.e


@dataclass(frozen=True)
class ClosedForm:
    """An expression in ``t`` (and optionally ``z``) with a reference value.

    ``probe`` recomputes the same quantity from an automatically built chain.
    Forms without ``t``-dependence are evaluated at ``t = 1``.
    """

    name: str
    fn: Callable
    structure: str
    params: tuple = ()
    defaults: Mapping = field(default_factory=dict)
    reference: float | None = None
    probe: Callable | None = None
    time_dependent: bool = True

    def __call__(self, t=1.0, **kw):
        kw = {**self.defaults, **kw}
        return self.fn(np.asarray(t, dtype=float), **kw)


def _t5(t):
    return 1 / (1 + 2 * t / 3)


def _tau2(t):
    return 1 / (1 + 2 * t / 3 + t**2 / 6)


def _tau1_half(t):
    return t / (3 + 2 * t + t**2 / 2)


def aux_mpm(z):
    """MPM of ``bi`` under the list policy when ``js`` weights ``(1-2z, z, z)``."""
    return 3 * (2 * z**2 - 13 * z + 4 * E * z - 4 * E + 9) / (4 * E * (z - 1))


def eta1(z):
    return 1 - E**-3 * (1 + z) ** 3


def eta_two_thirds(z):
    """MPM of each mass-2/3 leaf in the three-big-leaf structure."""
    return (2 + 4 * E**3 + 4 * z - z**2 - 5 * z**3 + E**2 * (-6 + z**2 + z**3)) / (4 * E**3) / (2 / 3)


def fig9_ti_safe(t, z):
    return np.exp(-2 * t) * (2 * np.exp(t) - 1 - z * (np.exp(t) - 1))


def fig9_i_safe(t, z):
    return np.exp(-2 * t) * (1 + t * z)


def fig9_hi_safe(t, z):
    return np.exp(-2 * t) * (2 * np.exp(t) - 1 + z * (np.exp(t) - t - 1))


def fig9_ti_mpm(z):
    return (1 - fig9_ti_safe(1.0, z)) / (2 / 3)


def kappa_i(z):
    return (z / E + 1 - 2 / E) / (1 / 3)


def kappa_ti(z):
    return ((1 - z) / E + 1 - 2 / E) / (2 / 3)


def _const(v):
    return lambda t, **kw: np.full(np.shape(t), float(v))


def closed_form_catalog() -> list[ClosedForm]:
    """Every closed form used by the verification suite, with chain probes."""
    from . import catalog as cat

    ex = np.exp
    forms = [
        ClosedForm("fig5.q1", lambda t: ex(-2 * t), "fig5", probe=cat.probe_fig5_q(0)),
        ClosedForm("fig5.q2", lambda t: 2 * ex(-2 * t) * (ex(t) - 1), "fig5", probe=cat.probe_fig5_q(1)),
        ClosedForm("fig5.q3", lambda t: 2 * ex(-2 * t) * (1 - ex(t) + t * ex(t)), "fig5", probe=cat.probe_fig5_q(2)),
        ClosedForm("fig5.q4", lambda t: ex(-2 * t) * (-1 + ex(2 * t) - 2 * t * ex(t)), "fig5", probe=cat.probe_fig5_q(3)),
        ClosedForm("fig5.i_safe", lambda t: ex(-2 * t), "fig5", probe=cat.probe_safe("fig5", "i")),
        ClosedForm("fig5.hi_safe", lambda t: 2 * ex(-t) - ex(-2 * t), "fig5",
                   reference=2 / E - E**-2, probe=cat.probe_safe("fig5", "hi")),
        ClosedForm("fig5.bi_mpm", _const(3 * (1 - 2 / E)), "fig5", reference=3 * (1 - 2 / E),
                   probe=cat.probe_mpm("fig5", "bi"), time_dependent=False),
        ClosedForm("aux.bi_mpm", lambda t, z: _const(aux_mpm(z))(t), "fig2b", ("z",), {"z": 0.0},
                   reference=3 * (1 - 9 / (4 * E)), probe=cat.probe_aux_bi_mpm, time_dependent=False),
        ClosedForm("fig2a.i_matched", _const(1 - 22 / (9 * E**2)), "fig2a", reference=1 - 22 / (9 * E**2),
                   probe=cat.probe_matched("fig2a", "i"), time_dependent=False),
        ClosedForm("fig3a.matched", _const(1 - 2 * E**-2), "fig3a", reference=1 - 2 * E**-2,
                   probe=cat.probe_matched("fig3a", "i0"), time_dependent=False),
        ClosedForm("fig3b.matched", _const(1 - 4.5 * E**-3), "fig3b", reference=1 - 4.5 * E**-3,
                   probe=cat.probe_matched("fig3b", "i0"), time_dependent=False),
        ClosedForm("fig3c.i1_safe", lambda t: ex(-3 * t) * (1 + 2 * t + 7 * t**2 / 6), "fig3c",
                   reference=25 / (6 * E**3), probe=cat.probe_safe("fig3c", "i1")),
        ClosedForm("fig3c.i1_one_neighbor_safe", lambda t: 2 * t * ex(-3 * t), "fig3c",
                   probe=cat.probe_fig3c_beta),
        ClosedForm("fig3c.all_safe", lambda t: ex(-3 * t), "fig3c", probe=cat.probe_joint("fig3c", ("i0", "i1", "i2"))),
        ClosedForm("fig3c.i0_matched", _const((11 - 10 * E + 3 * E**3) / (3 * E**3)), "fig3c",
                   reference=(11 - 10 * E + 3 * E**3) / (3 * E**3), probe=cat.probe_matched("fig3c", "i0"),
                   time_dependent=False),
        ClosedForm("fig9.ti_safe", fig9_ti_safe, "fig9", ("z",), {"z": 1.0}, probe=cat.probe_safe("fig9", "ti")),
        ClosedForm("fig9.i_safe", fig9_i_safe, "fig9", ("z",), {"z": 1.0}, probe=cat.probe_safe("fig9", "i")),
        ClosedForm("fig9.hi_safe", fig9_hi_safe, "fig9", ("z",), {"z": 1.0}, probe=cat.probe_safe("fig9", "hi")),
        ClosedForm("fig10.eta1", lambda t, z: _const(eta1(z))(t), "fig10", ("z",), {"z": 0.6},
                   probe=cat.probe_mpm("fig10", "i"), time_dependent=False),
        ClosedForm("fig10.eta_2_3", lambda t, z: _const(eta_two_thirds(z))(t), "fig10", ("z",), {"z": 0.6},
                   probe=cat.probe_mpm("fig10", "t1"), time_dependent=False),
        ClosedForm("case1.tau", lambda t: _t5(t), "wsg-case1", probe=cat.probe_conditional("wsg-case1", "ti", "i")),
        ClosedForm("case1.eta_a", lambda t: 1 - 2 / 3 * _t5(t), "wsg-case1", probe=cat.probe_rate("wsg-case1", "i")),
        ClosedForm("case1.psi_1_3", _const(1 - 5 / (3 * E)), "wsg-case1", reference=1 - 5 / (3 * E),
                   probe=cat.probe_matched("wsg-case1", "i"), time_dependent=False),
        ClosedForm("case1.psi_2_3", _const(1 - 4 / (3 * E)), "wsg-case1", reference=1 - 4 / (3 * E),
                   probe=cat.probe_matched("wsg-case1", "ti"), time_dependent=False),
        ClosedForm("case1.phi_1_3", _const(3 - 5 / E), "wsg-case1", reference=3 - 5 / E,
                   probe=cat.probe_mpm("wsg-case1", "i"), time_dependent=False),
        ClosedForm("case1.phi_2_3", _const(1.5 - 2 / E), "wsg-case1", reference=1.5 - 2 / E,
                   probe=cat.probe_mpm("wsg-case1", "ti"), time_dependent=False),
        ClosedForm("case2.tau2", lambda t: _tau2(t), "wsg-case2",
                   probe=cat.probe_conditional("wsg-case2", ("hi", "ti"), "i")),
        ClosedForm("case2.tau1_half", lambda t: _tau1_half(t), "wsg-case2", probe=cat.probe_case2_tau1_half),
        ClosedForm("case2.eta_b", lambda t: 1 - _tau1_half(t) - 2 / 3 * _tau2(t), "wsg-case2",
                   probe=cat.probe_rate("wsg-case2", "i")),
        ClosedForm("case2.phi_1_3", _const(3 - 11 / (2 * E)), "wsg-case2", reference=3 - 11 / (2 * E),
                   probe=cat.probe_mpm("wsg-case2", "i"), time_dependent=False),
        ClosedForm("case3.phi_2_3", _const((1 - 121 / (36 * E**2)) / (2 / 3)), "wsg-case3",
                   reference=(1 - 121 / (36 * E**2)) / (2 / 3), probe=cat.probe_mpm("wsg-case3", "i"),
                   time_dependent=False),
        ClosedForm("fig12.kappa_i", lambda t, z: _const(kappa_i(z))(t), "fig12", ("z",), {"z": 1 - E / 3},
                   reference=2 - 3 / E, probe=cat.probe_mpm("fig12", "i"), time_dependent=False),
        ClosedForm("fig12.kappa_ti", lambda t, z: _const(kappa_ti(z))(t), "fig12", ("z",), {"z": 1 - E / 3},
                   reference=2 - 3 / E, probe=cat.probe_mpm("fig12", "ti"), time_dependent=False),
        ClosedForm("fig1b.both_safe", lambda t: ex(-2 * t), "fig1b", probe=cat.probe_joint("fig1b", ("i1", "i2"))),
        ClosedForm("fig1b.single_safe", lambda t: ex(-2 * t) * (1 + t), "fig1b", probe=cat.probe_safe("fig1b", "i1")),
        ClosedForm("fig1a.both_safe", lambda t, K: ex(-K * t), "fig1a", ("K",), {"K": 10},
                   probe=cat.probe_fig1a(joint=True)),
        ClosedForm("fig1a.single_safe", lambda t, K: ex(-K * t) * (1 + K * t / 2), "fig1a", ("K",), {"K": 10},
                   probe=cat.probe_fig1a(joint=False)),
    ]
    return forms


# ---------------------------------------------------------------------------
# root finding


def find_z_threshold(
    form: Callable[[float], float],
    target: float,
    bracket: tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-10,
    scan: int = 64,
) -> float:
    """Solve ``form(z) = target`` by bisection on a monotone bracket."""
    a, b = bracket
    zs = np.linspace(a, b, scan)
    vals = np.array([float(form(z)) - target for z in zs])
    d = np.diff(vals)
    if np.any(d > 1e-14) and np.any(d < -1e-14):
        raise NotMonotone(f"form is not monotone on [{a}, {b}]")
    if vals[0] == 0:
        return a
    if vals[-1] == 0:
        return b
    if np.sign(vals[0]) == np.sign(vals[-1]):
        raise NoSignChange(f"no root of form - {target} on [{a}, {b}]")
    return float(optimize.bisect(lambda z: float(form(z)) - target, a, b, xtol=tol, rtol=4 * np.finfo(float).eps))


def fig9_lower_root() -> float:
    from .model import target_constants

    return find_z_threshold(fig9_ti_mpm, target_constants().kappa_m)


def fig10_upper_root() -> float:
    from .model import target_constants

    return find_z_threshold(eta1, target_constants().kappa_S)


def fig10_lower_root() -> float:
    from .model import target_constants

    return find_z_threshold(eta_two_thirds, target_constants().kappa_m)


def fig12_balanced_root() -> float:
    return find_z_threshold(lambda z: kappa_i(z) - kappa_ti(z), 0.0)


# ---------------------------------------------------------------------------
# folding and symmetry checks


def _as_rounded(x) -> RoundedVector:
    return x if isinstance(x, RoundedVector) else RoundedVector({e: v for e, v in x.values.items()})


def classify_edge(inst: Instance, x, target: str, e: Edge) -> str | None:
    """``"A"``: ``(i, j)`` with ``i`` not the target and ``j`` a target neighbour.
    ``"B"``: ``(bi, bj)`` with ``bi`` an offline neighbour of the target and
    ``bj`` not a target neighbour.  Otherwise None.
    """
    if e not in x.values or x.values[e] == 0:
        return None
    tn = {j for (i, j), v in x.values.items() if i == target and v > 0}
    nbrs = {i for (i, j), v in x.values.items() if j in tn and v > 0 and i != target}
    i, j = e
    if i != target and j in tn:
        return "A"
    if i in nbrs and j not in tn:
        return "B"
    return None


def fold(inst: Instance, x, target: str, e1: Edge, e2: Edge) -> tuple[Instance, RoundedVector]:
    """Remove a Type-A edge ``(i, j)`` and a Type-B edge ``(bi, bj)`` of equal
    mass and put that mass on ``(bi, j)``.
    """
    X = _as_rounded(x)
    if e1 == e2:
        raise TypeMismatch("folding needs two distinct edges")
    if classify_edge(inst, X, target, e1) != "A":
        raise TypeMismatch(f"{e1} is not a Type-A edge for {target!r}")
    if classify_edge(inst, X, target, e2) != "B":
        raise TypeMismatch(f"{e2} is not a Type-B edge for {target!r}")
    if e1[0] == e2[0]:
        raise TypeMismatch("the two edges must leave different offline nodes")
    if X[e1] != X[e2]:
        raise TypeMismatch(f"edge masses differ: {X[e1]} vs {X[e2]}")
    new = (e2[0], e1[1])
    vals = {e: v for e, v in X.values.items() if e not in (e1, e2)}
    vals[new] = vals.get(new, 0) + X[e1]
    edges = [e for e in inst.edges if e not in (e1, e2)]
    if new not in edges:
        edges.append(new)
    inst2 = Instance(inst.offline, inst.online, tuple(edges), inst.horizon, inst.integral_rates)
    return inst2, RoundedVector(vals, X.scale)


@dataclass
class CurveComparison:
    t: np.ndarray
    before: np.ndarray
    after: np.ndarray

    @property
    def diff(self) -> np.ndarray:
        return self.after - self.before

    @property
    def min_slack(self) -> float:
        return float(self.diff.min())

    def holds(self, tol: float = 1e-10) -> bool:
        return self.min_slack >= -tol


def safe_curve(inst, x, node, rules=None, policy="boost", grid=None) -> np.ndarray:
    grid = np.linspace(0, 1, 101) if grid is None else grid
    return transient_solve(build_chain(inst, x, rules, policy), grid).safe(node)


def compare_safe_curves(before, after, target, n_grid: int = 101, rules_before=None, rules_after=None):
    """Target safe probability before/after a structural change."""
    grid = np.linspace(0, 1, n_grid)
    a = safe_curve(*before, target, rules_before, grid=grid)
    b = safe_curve(*after, target, rules_after, grid=grid)
    return CurveComparison(grid, a, b)


def verify_folding(inst: Instance, x, target: str, e1: Edge, e2: Edge, n_grid: int = 101) -> CurveComparison:
    """Folded safe probability minus unfolded, on a uniform grid (should be >= 0)."""
    folded = fold(inst, x, target, e1, e2)
    return compare_safe_curves((inst, x), folded, target, n_grid)


def add_private_neighbor(inst: Instance, x, node: str, rate: float = 1.0, value=None, name: str = "extra"):
    """Give ``node`` one more online neighbour that has no other edges."""
    jid = name
    while jid in inst.online_index:
        jid += "_"
    inst2 = Instance(
        inst.offline, inst.online + ((jid, float(rate)),), inst.edges + ((node, jid),), inst.horizon, False
    )
    vals = dict(x.values)
    if isinstance(x, RoundedVector):
        from fractions import Fraction

        vals[(node, jid)] = Fraction(1, 3) if value is None else Fraction(value)
        return inst2, RoundedVector(vals, x.scale)
    vals[(node, jid)] = 1 / 3 if value is None else float(value)
    return inst2, FracVector(vals)


def verify_symmetry_monotonicity(
    inst: Instance, x, target: str, node: str, rate: float = 1.0, rules=None, n_grid: int = 101
) -> CurveComparison:
    """Baseline minus perturbed target safe probability (should be >= 0).

    The perturbation attaches a private online neighbour of the given rate to
    ``node``, an offline neighbour of the target.
    """
    grid = np.linspace(0, 1, n_grid)
    base = safe_curve(inst, x, target, rules, grid=grid)
    if rate == 0:
        return CurveComparison(grid, base.copy(), base)
    inst2, x2 = add_private_neighbor(inst, x, node, rate)
    pert = safe_curve(inst2, x2, target, rules, grid=grid)
    # "after" is the baseline so that a nonnegative diff means the claim holds
    return CurveComparison(grid, pert, base)
