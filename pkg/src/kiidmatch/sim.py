"""KIID arrivals, Monte Carlo policy evaluation and baselines.

Two code paths evaluate a policy.  :func:`run_policy` walks one arrival
stream with the step functions of :mod:`kiidmatch.policies`; it is the
reference.  :func:`estimate_report` runs blocks of trials in lockstep with
numpy: for each online type it tabulates the pick law against a bitmask of
its neighbours (safe set for BOOST/AUG, own history for AUX), so one step of
every trial costs a table lookup and a draw.
"""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import FracVector, Instance, ModelError, RoundedVector, classify_node
from .policies import (
    PROPORTIONAL,
    MatchState,
    Proportional,
    aug_law,
    aug_step,
    aux_law,
    aux_step,
    boost_law,
    boost_step,
    neighbor_values,
    rule_weights,
    sample_list,
)

BLOCK = 1 << 14
# largest neighbourhood tabulated per mask (BOOST) and per list law (AUG/AUX)
TABLE_DEG = 12
LIST_TABLE_DEG = 7
POLICIES = ("boost", "aug", "aux")


class SimError(ModelError):
    pass


# ---------------------------------------------------------------------------
# arrival model


@dataclass(frozen=True)
class Poisson:
    def __str__(self):
        return "poisson"


@dataclass(frozen=True)
class Discrete:
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise SimError("T must be positive")

    def __str__(self):
        return f"discrete:{self.T}"


Mode = Poisson | Discrete


def parse_mode(mode: str | Mode) -> Mode:
    if isinstance(mode, (Poisson, Discrete)):
        return mode
    m = re.fullmatch(r"\s*(poisson|discrete(?::(\d+))?)\s*", str(mode).lower())
    if not m:
        raise SimError(f"unknown arrival mode {mode!r}")
    if m.group(1) == "poisson":
        return Poisson()
    return Discrete(int(m.group(2) or 10_000))


@dataclass
class ArrivalStream:
    """``events`` are ``(time, type)``; in discrete mode time is the round index
    and idle rounds carry type ``None``."""

    mode: Mode
    events: list[tuple[float, str | None]]
    seed: int | None

    @property
    def arrivals(self) -> list[str]:
        return [j for _, j in self.events if j is not None]


def _seed_rng(seed, *extra) -> np.random.Generator:
    seq = np.random.SeedSequence([int(seed) & (2**63 - 1), *extra])
    return np.random.Generator(np.random.Philox(seq))


def _type_probs(inst: Instance) -> tuple[list[str], np.ndarray, float]:
    ids = inst.online_ids
    r = np.array([inst.rates[j] for j in ids], dtype=float)
    lam = float(r.sum())
    return ids, (r / lam if lam > 0 else r), lam


def generate_arrivals(inst: Instance, mode: str | Mode = "poisson", seed: int = 0, horizon: float = 1.0) -> ArrivalStream:
    """One realised arrival stream on ``[0, horizon]``.

    Poisson: a ``Pois(sum r)`` count with i.i.d. uniform times and types drawn
    in proportion to the rates.  Discrete(T): every round ``1..T`` produces type
    ``j`` with probability ``r_j / T`` and nothing otherwise.
    """
    mode = parse_mode(mode)
    rng = _seed_rng(seed)
    ids, p, lam = _type_probs(inst)
    if isinstance(mode, Poisson):
        if not ids:
            return ArrivalStream(mode, [], seed)
        n = rng.poisson(lam * horizon)
        times = np.sort(rng.uniform(0.0, horizon, n))
        types = rng.choice(len(ids), size=n, p=p)
        return ArrivalStream(mode, [(float(t), ids[k]) for t, k in zip(times, types)], seed)
    T = mode.T
    if lam > T * (1 + 1e-12):
        raise SimError(f"total rate {lam} exceeds T={T}")
    rounds = int(round(T * horizon))
    if not ids:
        return ArrivalStream(mode, [(k + 1, None) for k in range(rounds)], seed)
    probs = np.append(p * lam / T, max(0.0, 1 - lam / T))
    draws = rng.choice(len(ids) + 1, size=rounds, p=probs / probs.sum())
    return ArrivalStream(mode, [(k + 1, ids[d] if d < len(ids) else None) for k, d in enumerate(draws)], seed)


# ---------------------------------------------------------------------------
# reference path


@dataclass
class Realization:
    matched: dict[str, str]
    picks: list[tuple[str, str | None]]

    def indicator(self, offline_ids: Sequence[str]) -> dict[str, int]:
        return {i: int(i in self.matched) for i in offline_ids}


def _rule_for(rules, j):
    return (rules or {}).get(j, PROPORTIONAL)


def run_policy(inst: Instance, x, policy: str, rules=None, stream: ArrivalStream | None = None,
               rng=None, seed: int = 0) -> Realization:
    """Process ``stream`` in order with one policy step per arrival."""
    policy = _check_policy(policy)
    if stream is None:
        stream = generate_arrivals(inst, "poisson", seed)
    if rng is None:
        rng = _seed_rng(seed, 1)
    state = MatchState.initial(inst.offline_ids)
    picks = []
    for j in stream.arrivals:
        rule = _rule_for(rules, j)
        if policy == "boost":
            i = boost_step(state, j, x, rule, rng)
        else:
            lst = sample_list(j, x, rng, rule_weights(rule, neighbor_values(x, j)))
            i = aug_step(state, j, lst) if policy == "aug" else aux_step(state, j, lst)
        picks.append((j, i))
    return Realization(dict(state.matched_by), picks)


def _check_policy(policy: str) -> str:
    p = str(policy).lower()
    if p not in POLICIES:
        raise SimError(f"unknown policy {policy!r}")
    return p


# ---------------------------------------------------------------------------
# vectorised engine


@dataclass
class _TypePlan:
    nbrs: np.ndarray  # offline column indices
    table: np.ndarray | None  # (2**d, d) pick law by mask
    weights: np.ndarray  # proportional weights when untabulated
    by_history: bool


def _plan(inst: Instance, x, policy: str, rules) -> list[_TypePlan]:
    col = {i: k for k, i in enumerate(inst.offline_ids)}
    plans = []
    for j in inst.online_ids:
        xj = neighbor_values(x, j)
        names = list(xj)
        d = len(names)
        rule = _rule_for(rules, j)
        limit = TABLE_DEG if policy == "boost" else LIST_TABLE_DEG
        table = None
        if d <= limit and not (isinstance(rule, Proportional) and d > 6):
            table = np.zeros((1 << d, d))
            for mask in range(1 << d):
                S = {names[b] for b in range(d) if mask >> b & 1}
                if policy == "boost":
                    law = boost_law(S, xj, rule)
                elif policy == "aug":
                    law = aug_law(S, xj, rule)
                else:
                    law = aux_law(S, xj, rule)
                table[mask] = [law.get(n, 0.0) for n in names]
        elif not isinstance(rule, Proportional):
            raise SimError(f"online node {j!r}: {d} neighbours is too many to tabulate a non-proportional rule")
        plans.append(_TypePlan(np.array([col[n] for n in names], dtype=np.intp), table,
                               np.array([xj[n] for n in names]), policy == "aux"))
    return plans


def _draw_rows(P: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise categorical draw; returns ``d`` when the row mass is not hit."""
    cum = np.cumsum(P, axis=1)
    return (cum <= u[:, None]).sum(axis=1)


def _arrival_block(rng, n, ids, p, lam, mode, horizon):
    if isinstance(mode, Poisson):
        counts = rng.poisson(lam * horizon, n)
    else:
        rounds = int(round(mode.T * horizon))
        counts = rng.binomial(rounds, min(1.0, lam / mode.T), n)
    m = int(counts.max()) if n else 0
    types = rng.choice(len(ids), size=(n, m), p=p) if m and ids else np.zeros((n, m), dtype=np.intp)
    return counts, types


def _simulate_block(inst, plans, mode, n, rng, horizon=1.0):
    """Safe indicators (n, |I|) and the arrival counts per type (n, |J|)."""
    ids, p, lam = _type_probs(inst)
    nI = len(inst.offline_ids)
    safe = np.ones((n, nI), dtype=bool)
    if not ids or lam == 0:
        return safe, np.zeros((n, len(ids)), dtype=np.int64)
    counts, types = _arrival_block(rng, n, ids, p, lam, mode, horizon)
    hist = np.zeros((n, len(ids)), dtype=np.int64)
    for k in range(types.shape[1]):
        active = counts > k
        tk = types[:, k]
        u = rng.random(n)
        for jx, plan in enumerate(plans):
            rows = np.nonzero(active & (tk == jx))[0]
            d = len(plan.nbrs)
            if rows.size == 0 or d == 0:
                continue
            sub = safe[np.ix_(rows, plan.nbrs)]
            if plan.table is not None:
                if plan.by_history:
                    mask = hist[rows, jx]
                else:
                    mask = sub.astype(np.int64) @ (1 << np.arange(d, dtype=np.int64))
                P = plan.table[mask]
            elif plan.by_history:
                taken = (hist[rows, jx][:, None] >> np.arange(d)) & 1
                W = plan.weights[None, :] * (1 - taken)
                tot = W.sum(axis=1, keepdims=True)
                P = np.divide(W, tot, out=np.zeros_like(W), where=tot > 0)
            else:
                W = plan.weights[None, :] * sub
                tot = W.sum(axis=1, keepdims=True)
                P = np.divide(W, tot, out=np.zeros_like(W), where=tot > 0)
            pick = _draw_rows(P, u[rows])
            hit = pick < d
            rows, pick = rows[hit], pick[hit]
            if plan.by_history:
                hist[rows, jx] |= np.int64(1) << pick
                ok = safe[rows, plan.nbrs[pick]]
                rows, pick = rows[ok], pick[ok]
            safe[rows, plan.nbrs[pick]] = False
    arrivals = np.stack([(types == jx) & (np.arange(types.shape[1])[None, :] < counts[:, None])
                         for jx in range(len(ids))], axis=1).sum(axis=2) if types.size else np.zeros((n, len(ids)), dtype=np.int64)
    return safe, arrivals


def _threads(threads: int | None) -> int:
    env = os.environ.get("KIID_MATCH_THREADS")
    if env:
        return max(1, int(env))
    return max(1, threads or os.cpu_count() or 1)


def _run_blocks(trials, seed, fn, threads=None):
    """Apply ``fn(rng, n, block)`` over fixed-size blocks; results in block order."""
    sizes = [BLOCK] * (trials // BLOCK) + ([trials % BLOCK] if trials % BLOCK else [])
    jobs = [(b, n) for b, n in enumerate(sizes)]
    nt = _threads(threads)
    run = lambda job: fn(_seed_rng(seed, 2, job[0]), job[1], job[0])  # noqa: E731
    if nt == 1 or len(jobs) == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(nt) as pool:
        return list(pool.map(run, jobs))


def simulate_safe(inst, x, policy="boost", rules=None, trials=10_000, mode="poisson", seed=0,
                  horizon=1.0, threads=None) -> np.ndarray:
    """Final safe indicators of every trial, shape ``(trials, |I|)``."""
    policy = _check_policy(policy)
    mode = parse_mode(mode)
    plans = _plan(inst, x, policy, rules)
    out = _run_blocks(trials, seed, lambda rng, n, b: _simulate_block(inst, plans, mode, n, rng, horizon)[0], threads)
    return np.concatenate(out) if out else np.ones((0, len(inst.offline_ids)), dtype=bool)


# ---------------------------------------------------------------------------
# reports


@dataclass
class NodeStat:
    node: str
    mass: float
    cls: str
    match_prob: float
    stderr: float
    mpm: float | None
    analytic: float | None = None
    delta: float | None = None


@dataclass
class SimReport:
    policy: str
    mode: str
    trials: int
    seed: int
    nodes: list[NodeStat]
    total_weight: float
    total_weight_stderr: float
    lp_value: float | None = None
    ratio_lp: float | None = None
    opt_mean: float | None = None
    opt_stderr: float | None = None
    ratio_opt: float | None = None
    opt_trials: int = 0
    seeds: list[list[int]] = field(default_factory=list)

    def node(self, name: str) -> NodeStat:
        return next(s for s in self.nodes if s.node == name)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: Mapping) -> "SimReport":
        d = dict(doc)
        d["nodes"] = [NodeStat(**s) for s in d["nodes"]]
        return cls(**d)


def _node_class(x, i) -> str:
    if isinstance(x, RoundedVector) and x.scale == 3:
        return classify_node(x, i).value
    return "fractional"


def _analytic_probs(inst, x, policy, rules) -> dict[str, float] | None:
    from .analytic import StateSpaceTooLarge, build_chain, transient_solve

    try:
        chain = build_chain(inst, x, rules, policy, max_states=4096)
    except StateSpaceTooLarge:
        return None
    tr = transient_solve(chain, [1.0])
    return {i: float(tr.matched(i)[0]) for i in inst.offline_ids}


def estimate_report(
    inst: Instance,
    x,
    policy: str = "boost",
    rules=None,
    trials: int = 10_000,
    mode: str | Mode = "poisson",
    seed: int = 0,
    *,
    analytic: Mapping[str, float] | str | None = "auto",
    lp_value: float | str | None = "auto",
    opt_trials: int | None = None,
    threads: int | None = None,
) -> SimReport:
    """Monte Carlo estimates of every offline node's match probability.

    ``analytic="auto"`` solves the exact chain when it has at most 4096 states;
    ``lp_value="auto"`` solves the benchmark LP when the instance has at most
    200 edges.  Clairvoyant OPT is computed on the first ``opt_trials`` streams
    (default ``min(trials, 20000)``).
    """
    if trials < 1:
        raise SimError("trials must be positive")
    policy = _check_policy(policy)
    mode = parse_mode(mode)
    plans = _plan(inst, x, policy, rules)
    ids = inst.offline_ids
    w = np.array([inst.weights[i] for i in ids])
    opt_trials = min(trials, 20_000) if opt_trials is None else min(opt_trials, trials)

    def block(rng, n, b):
        safe, arrivals = _simulate_block(inst, plans, mode, n, rng)
        m = ~safe
        tw = m.astype(float) @ w
        lo = b * BLOCK
        k = max(0, min(n, opt_trials - lo))
        opt = np.array([_opt_from_counts(inst, arrivals[r]) for r in range(k)])
        return m.sum(axis=0), tw.sum(), (tw**2).sum(), opt.sum(), (opt**2).sum(), k

    parts = _run_blocks(trials, seed, block, threads)
    hits = sum(p[0] for p in parts)
    s1 = sum(p[1] for p in parts)
    s2 = sum(p[2] for p in parts)
    o1 = sum(p[3] for p in parts)
    o2 = sum(p[4] for p in parts)
    ok = sum(p[5] for p in parts)

    if analytic == "auto":
        analytic = _analytic_probs(inst, x, policy, rules)
    stats = []
    for k, i in enumerate(ids):
        ph = float(hits[k]) / trials
        mass = float(x.node_mass(i))
        a = None if analytic is None else analytic.get(i)
        stats.append(NodeStat(
            node=i, mass=mass, cls=_node_class(x, i), match_prob=ph,
            stderr=math.sqrt(ph * (1 - ph) / trials),
            mpm=ph / mass if mass > 0 else None,
            analytic=a, delta=None if a is None else ph - a,
        ))
    mean = float(s1) / trials
    var = max(0.0, float(s2) / trials - mean**2)
    if lp_value == "auto":
        lp_value = None
        if len(inst.edges) <= 200:
            from .lp import build_lp, solve_lp

            lp_value = solve_lp(build_lp(inst))[1]
    opt_mean = float(o1) / ok if ok else None
    opt_se = math.sqrt(max(0.0, float(o2) / ok - opt_mean**2) / ok) if ok else None
    return SimReport(
        policy=policy, mode=str(mode), trials=trials, seed=seed, nodes=stats,
        total_weight=float(mean), total_weight_stderr=math.sqrt(var / trials),
        lp_value=lp_value, ratio_lp=(mean / lp_value) if lp_value else None,
        opt_mean=opt_mean, opt_stderr=opt_se, ratio_opt=(mean / opt_mean) if opt_mean else None,
        opt_trials=ok, seeds=[[seed, 2, b] for b in range(len(parts))],
    )


# ---------------------------------------------------------------------------
# clairvoyant optimum


def _opt_from_counts(inst: Instance, counts) -> float:
    ids = inst.online_ids
    cols = []
    for jx, c in enumerate(counts):
        cols += [ids[jx]] * int(c)
    return _max_weight(inst, cols)


def _max_weight(inst: Instance, arrivals: Sequence[str]) -> float:
    off = inst.offline_ids
    if not off or not arrivals:
        return 0.0
    # every online copy beyond |I| per type is useless
    keep, seen = [], {}
    for j in arrivals:
        seen[j] = seen.get(j, 0) + 1
        if seen[j] <= len(inst.offline_neighbors(j)):
            keep.append(j)
    if not keep:
        return 0.0
    w = inst.weights
    M = np.zeros((len(off), len(keep)))
    row = {i: k for k, i in enumerate(off)}
    for c, j in enumerate(keep):
        for i in inst.offline_neighbors(j):
            M[row[i], c] = w[i]
    r, c = linear_sum_assignment(M, maximize=True)
    return float(M[r, c].sum())


def clairvoyant_opt(inst: Instance, stream: ArrivalStream) -> float:
    """Maximum matched weight on the realised arrivals (unit offline capacity)."""
    return _max_weight(inst, stream.arrivals)


# ---------------------------------------------------------------------------
# correlation


@dataclass
class CorrelationPoint:
    t: float
    joint: float
    first: float
    second: float
    ratio: float
    ratio_stderr: float
    joint_stderr: float
    first_stderr: float
    closed_joint: float | None = None
    closed_single: float | None = None
    closed_ratio: float | None = None


def correlation_probe(structure: str = "fig1b", t_grid: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
                      trials: int = 100_000, seed: int = 0, nodes=("i1", "i2"), threads=None, **params) -> list[CorrelationPoint]:
    """Estimate ``E[SF1 SF2] / (E[SF1] E[SF2])`` under BOOST at each grid time."""
    from . import catalog

    e = catalog.get(structure, **params)
    ids = e.instance.offline_ids
    a, b = ids.index(nodes[0]), ids.index(nodes[1])
    base = catalog.parse_name(structure)[0]
    K = e.params.get("K", 2)
    out = []
    for n, t in enumerate(t_grid):
        t = float(t)
        S = simulate_safe(e.instance, e.vector, "boost", e.rules, trials, "poisson", seed + 7919 * n, t, threads)
        s1, s2 = S[:, a].astype(float), S[:, b].astype(float)
        j = s1 * s2
        m = np.array([j.mean(), s1.mean(), s2.mean()])
        ratio = m[0] / (m[1] * m[2]) if m[1] * m[2] > 0 else float("nan")
        C = np.cov(np.stack([j, s1, s2])) if trials > 1 else np.zeros((3, 3))
        g = np.array([1 / (m[1] * m[2]), -ratio / m[1], -ratio / m[2]]) if m[1] * m[2] > 0 else np.zeros(3)
        se = float(math.sqrt(max(0.0, g @ C @ g) / trials))
        cj = cs = cr = None
        if base == "fig1b":
            cj, cs = math.exp(-2 * t), math.exp(-2 * t) * (1 + t)
        elif base == "fig1a":
            cj, cs = math.exp(-K * t), math.exp(-K * t) * (1 + K * t / 2)
        if cj is not None:
            cr = cj / cs**2
        out.append(CorrelationPoint(t, float(m[0]), float(m[1]), float(m[2]), float(ratio), se,
                                    float(math.sqrt(m[0] * (1 - m[0]) / trials)),
                                    float(math.sqrt(m[1] * (1 - m[1]) / trials)), cj, cs, cr))
    return out


# ---------------------------------------------------------------------------
# hardness instance


@dataclass(frozen=True)
class HardnessParams:
    K: int
    N: int

    def __post_init__(self):
        if self.K < 1 or self.N < 1:
            raise SimError("K and N must be positive")

    @property
    def deltas(self) -> list[float]:
        return [math.exp(-(k - 1)) - math.exp(-k) for k in range(1, self.K + 1)]

    @property
    def epsilons(self) -> list[float]:
        return [(1 - d) / self.N for d in self.deltas]


def survival_series(delta: float, eps: float, N: int) -> float:
    """Probability that the target survives all arrivals of one online type.

    The type arrives ``Pois(1)`` times; while the target is safe and ``m``
    leaves are matched, an arrival picks a leaf with probability
    ``(1 - m eps - delta) / (1 - m eps)``.
    """
    total = math.exp(-1)
    prod = 1.0
    term = math.exp(-1)
    for ell in range(1, N + 1):
        den = 1 - (ell - 1) * eps
        prod *= (den - delta) / den if den > 0 else 0.0
        term /= ell
        if prod == 0.0 or term == 0.0:
            break
        total += term * prod
    return total


def hardness_limit(K: int) -> float:
    s = 1 - math.exp(-K)
    return (1 - math.exp(-s)) / s


@dataclass
class HardnessResult:
    K: int
    N: int
    trials: int
    match_prob: float
    stderr: float
    lp_value: float
    ratio: float
    ratio_stderr: float
    limit: float
    survival: list[float]
    survival_limit: list[float]
    series_match_prob: float

    @property
    def max_survival_gap(self) -> float:
        return max(abs(a - b) for a, b in zip(self.survival, self.survival_limit))


def hardness_experiment(params: HardnessParams, trials: int = 100_000, seed: int = 0, threads=None) -> HardnessResult:
    """Run BOOST on the hardness instance with its fractional vector."""
    from .catalog import fig4

    e = fig4(params.K, params.N)
    ids = e.instance.offline_ids
    w = np.array([e.instance.weights[i] for i in ids])
    k = ids.index("i")
    plans = _plan(e.instance, e.vector, "boost", None)

    def block(rng, n, b):
        # reduce per block; the full indicator matrix does not fit in memory at 1e6 trials
        S = _simulate_block(e.instance, plans, Poisson(), n, rng, 1.0)[0]
        weight = (~S).astype(float) @ w
        return float(weight.sum()), float((weight**2).sum()), int((~S[:, k]).sum())

    parts = _run_blocks(trials, seed, block, threads)
    tot, tot2, hits = (sum(col) for col in zip(*parts))
    mean = tot / trials
    sd = math.sqrt(max(tot2 / trials - mean**2, 0.0))
    p = hits / trials
    lp_value = float(sum(e.instance.weights[i] * v for (i, _), v in e.vector.values.items()))
    surv = [survival_series(d, eps, params.N) for d, eps in zip(params.deltas, params.epsilons)]
    return HardnessResult(
        K=params.K, N=params.N, trials=trials, match_prob=p,
        stderr=math.sqrt(p * (1 - p) / trials), lp_value=lp_value,
        ratio=mean / lp_value, ratio_stderr=sd / math.sqrt(trials) / lp_value,
        limit=hardness_limit(params.K), survival=surv,
        survival_limit=[math.exp(-d) for d in params.deltas],
        series_match_prob=1 - math.prod(surv),
    )
