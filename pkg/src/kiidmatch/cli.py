"""Command-line entry point: ``kiid-match <command> ...``.

Exit codes: 0 success, 1 failed check, 2 usage or input error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from . import catalog, lp, rounding, sim
from .analytic import NonStochastic, NoSignChange, NotMonotone, StateSpaceTooLarge
from .model import FracVector, Instance, ModelError, dump_json, load_json, validate_polytope
from .policies import MalformedRule, UnknownStructure, rules_from_json
from .simplex import Infeasible, NumericalFailure, Unbounded

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

CSV_COLUMNS = ["node", "mass", "class", "match_prob", "stderr", "mpm", "analytic", "delta"]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def report_csv(report: sim.SimReport | None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in report.nodes if report else []:
        w.writerow([_fmt(v) for v in (s.node, s.mass, s.cls, s.match_prob, s.stderr, s.mpm, s.analytic, s.delta)])
    return buf.getvalue()


def report_emit(report: sim.SimReport | None, fmt: str, path: str | None) -> str:
    """Serialise ``report`` as ``csv`` or ``json``; write to ``path`` if given."""
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = json.dumps(report.to_json() if report else {}, indent=2) + "\n"
    else:
        raise UsageError(f"unknown report format {fmt!r}")
    if path and path != "-":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _write(obj, path):
    if path and path != "-":
        dump_json(obj, path)
    else:
        print(json.dumps(obj, indent=2))


# ---------------------------------------------------------------------------
# input


def _load(path: str, what: str):
    try:
        return load_json(path)
    except OSError as exc:
        raise UsageError(f"cannot read {what} {path!r}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} {path!r} is not valid JSON: {exc}") from exc


def _instance(path: str) -> Instance:
    return Instance.from_json(_load(path, "instance"))


def _vector(path: str, inst: Instance | None = None):
    x = catalog.vector_from_json(_load(path, "vector"))
    if inst is not None:
        bad = validate_polytope(x, inst)
        if bad:
            raise UsageError("vector violates the matching polytope: " + "; ".join(map(str, bad[:5])))
    return x


def _rules(path: str | None):
    return rules_from_json(_load(path, "rules")) if path else None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_lp_solve(a) -> int:
    inst = _instance(a.instance)
    x, value = lp.solve_lp(lp.build_lp(inst, a.variant))
    print(f"LP value: {value:.12g}", file=sys.stderr)
    _write(x.to_json(), a.out)
    return EXIT_OK


def cmd_round(a) -> int:
    inst = _instance(a.instance) if a.instance else None
    y = _vector(a.vector, inst)
    if not isinstance(y, FracVector):
        y = y.as_floats()
    X = rounding.dr_ell(y, a.ell, a.seed)
    _write(X.to_json(), a.out)
    return EXIT_OK


def cmd_simulate(a) -> int:
    if a.trials < 1:
        raise UsageError("--trials must be positive")
    inst = _instance(a.instance)
    x = _vector(a.vector, inst)
    r = sim.estimate_report(inst, x, a.policy, _rules(a.rules), a.trials, a.mode, a.seed, threads=a.threads)
    if a.out:
        report_emit(r, "json", a.out)
    if a.csv:
        report_emit(r, "csv", a.csv)
    if not a.out and not a.csv:
        sys.stdout.write(report_csv(r))
    print(f"expected weight {r.total_weight:.6f} +- {r.total_weight_stderr:.2g}; "
          f"LP {_fmt(r.lp_value)}; OPT {_fmt(r.opt_mean)}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(a) -> int:
    import numpy as np

    from .analytic import build_chain, transient_solve

    if a.structure:
        e = catalog.get(a.structure)
        inst, x, rules = e.instance, e.vector, e.rules
    elif a.instance and a.vector:
        inst = _instance(a.instance)
        x = _vector(a.vector, inst)
        rules = _rules(a.rules)
    else:
        raise UsageError("give --structure or both --instance and --vector")
    grid = np.linspace(0.0, 1.0, a.grid)
    chain = build_chain(inst, x, rules, a.policy)
    tr = transient_solve(chain, grid)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["node", "mass", "match_prob", "mpm"])
    for i in inst.offline_ids:
        m = float(tr.matched(i)[-1])
        mass = float(x.node_mass(i))
        w.writerow([i, repr(mass), repr(m), repr(m / mass) if mass > 0 else ""])
    print(f"{chain.n} states", file=sys.stderr)
    if a.curves:
        with open(a.curves, "w", encoding="utf-8", newline="") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(["t"] + [f"safe:{i}" for i in inst.offline_ids])
            for k, t in enumerate(grid):
                cw.writerow([repr(float(t))] + [repr(float(tr.safe(i)[k])) for i in inst.offline_ids])
    return EXIT_OK


def cmd_catalog(a) -> int:
    if a.action == "list":
        for n in catalog.names():
            e = catalog.get(n)
            print(f"{n:<12} {e.description}")
        return EXIT_OK
    if not a.name:
        raise UsageError("catalog dump needs a NAME (or 'all')")
    doc = catalog.load_embedded() if a.name == "all" else catalog.get(a.name).to_json()
    _write(doc, a.out)
    return EXIT_OK


def cmd_verify(a) -> int:
    from . import verify

    entries = None
    if a.catalog:
        doc = _load(a.catalog, "catalog")
        docs = doc if isinstance(doc, list) else [doc]
        try:
            entries = [catalog.entry_from_json(d) for d in docs]
        except (KeyError, TypeError, ModelError) as exc:
            raise UsageError(f"malformed catalog {a.catalog!r}: {exc}") from exc
    sections = tuple(a.only.split(",")) if a.only else verify.SECTIONS
    unknown = set(sections) - set(verify.SECTIONS)
    if unknown:
        raise UsageError(f"unknown sections {sorted(unknown)}")
    rows = verify.run_all(a.level, entries, sections, log=lambda m: print(m, file=sys.stderr))
    print(verify.HEADER)
    for r in rows:
        print(r.row())
    failed = [r for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    for r in failed:
        print(f"FAILED: [{r.section}] {r.quantity}")
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["section", "quantity", "relation", "reference", "computed", "delta", "tol", "pass"])
            for r in rows:
                w.writerow([r.section, r.quantity, r.relation, repr(float(r.reference)), repr(float(r.computed)),
                            repr(float(r.delta)), repr(float(r.tol)), int(r.passed)])
    return EXIT_CHECK if failed else EXIT_OK


def cmd_hardness(a) -> int:
    h = sim.hardness_experiment(sim.HardnessParams(a.K, a.N), a.trials, a.seed, threads=a.threads)
    doc = {**h.__dict__, "max_survival_gap": h.max_survival_gap}
    _write(doc, a.out)
    return EXIT_OK


def cmd_correlate(a) -> int:
    params = {"K": a.K} if catalog.parse_name(a.structure)[0] == "fig1a" and a.K else {}
    pts = sim.correlation_probe(a.structure, _floats(a.t_grid), a.trials, a.seed, threads=a.threads, **params)
    fields = list(sim.CorrelationPoint.__dataclass_fields__)
    out = open(a.out, "w", encoding="utf-8", newline="") if a.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(fields)
        for p in pts:
            w.writerow([_fmt(getattr(p, f)) for f in fields])
    finally:
        if a.out:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kiid-match", description="Vertex-weighted online matching under known i.i.d. arrivals.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("lp-solve", help="solve the benchmark (or natural) LP")
    s.add_argument("--instance", required=True)
    s.add_argument("--variant", choices=[v.value for v in lp.Variant], default="benchmark")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_lp_solve)

    s = sub.add_parser("round", help="dependent rounding of a fractional vector to thirds")
    s.add_argument("--vector", required=True)
    s.add_argument("--instance", help="validate the vector against this instance first")
    s.add_argument("--ell", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_round)

    s = sub.add_parser("simulate", help="Monte Carlo evaluation of a policy")
    s.add_argument("--instance", required=True)
    s.add_argument("--vector", required=True)
    s.add_argument("--policy", choices=sim.POLICIES, default="boost")
    s.add_argument("--rules")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--mode", default="poisson", help="poisson or discrete:T")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="JSON report")
    s.add_argument("--csv", help="CSV report, one row per offline node")
    s.add_argument("--threads", type=int)
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("analyze", help="exact match probabilities from the policy's Markov chain")
    s.add_argument("--structure", help="catalog name, e.g. 'fig10(z=0.6)'")
    s.add_argument("--instance")
    s.add_argument("--vector")
    s.add_argument("--rules")
    s.add_argument("--policy", choices=sim.POLICIES, default="boost")
    s.add_argument("--grid", type=int, default=101)
    s.add_argument("--curves", help="write safe-probability curves as CSV")
    s.set_defaults(fn=cmd_analyze)

    s = sub.add_parser("catalog", help="list or dump canned structures")
    s.add_argument("action", choices=["list", "dump"])
    s.add_argument("name", nargs="?")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_catalog)

    s = sub.add_parser("verify", help="run the cross-check suite")
    s.add_argument("--level", choices=["smoke", "full"], default="smoke")
    s.add_argument("--catalog", help="check the entries of a dumped catalog file instead of the built-in one")
    s.add_argument("--only", help="comma-separated subset of: criteria,catalog,closed")
    s.add_argument("--out", help="write the table as CSV")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("hardness", help="BOOST on the hardness instance")
    s.add_argument("--K", type=int, default=6)
    s.add_argument("--N", type=int, default=500)
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_hardness)

    s = sub.add_parser("correlate", help="safe-indicator correlation curves")
    s.add_argument("--structure", default="fig1b", choices=["fig1a", "fig1b"])
    s.add_argument("--K", type=int)
    s.add_argument("--t-grid", default="0.25,0.5,0.75,1")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_correlate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        a = build_parser().parse_args(argv)
        return a.fn(a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, Infeasible, Unbounded, StateSpaceTooLarge, NonStochastic, NoSignChange, NotMonotone) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ModelError, MalformedRule, UnknownStructure, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
