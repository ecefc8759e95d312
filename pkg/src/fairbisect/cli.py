"""Command-line frontend: ``fairbisect <command> [options]``.

Commands
--------
``solve``      approximate (or, with ``--exact``, exact) fair bisection
``decompose``  compact unbreakable tree decomposition of an instance's graph
``validate``   check a decomposition document against an instance
``oracle``     brute-force exact fair bisection
``generate``   seeded random instances and the hardness-reduction chain
``bench``      DP table sizes against their bound on a seeded corpus

Exit statuses
-------------
``0`` success (including a "none" answer), ``1`` a verification or
validation failed, ``2`` unreadable input or bad arguments, ``3`` an internal
contract was violated, ``4`` the decomposition builder failed, ``5`` a
configured enumeration budget was exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import decomposition as dec
from .builder import BuilderConfig, build_unbreakable_decomposition
from .depth_reduction import reduce_depth
from .errors import BudgetExceeded, BuilderFailure, ContractError, FairBisectError, ParseError
from .fair_dp import SoundnessChecker, dump_tables, run_dp
from .generators import (
    bcsp_satisfiable,
    bcsp_to_mdss,
    corpus_parameters,
    mdp_to_fair_bisection,
    mdss_to_mdp,
    random_bcsp,
    random_instance,
)
from .graph_core import EdgeCut, FairInstance, format_instance, is_eps_fair, is_exact_fair, parse_instance
from .oracle import OracleBudget, cut_stats, exact_fair_bisection

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_INTERNAL = 3
EXIT_BUILDER = 4
EXIT_BUDGET = 5

log = logging.getLogger("fairbisect")


class _Reporter:
    """Collects a run report and prints it as text or JSON."""

    def __init__(self, command: str, argv: Sequence[str], as_json: bool, out) -> None:
        self.as_json = as_json
        self.out = out
        self.data: dict[str, Any] = {"command": command, "argv": list(argv), "timings": {}}
        self.lines: list[str] = []

    def timed(self, stage: str, fn: Callable[[], Any]) -> Any:
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            self.data["timings"][stage] = round(time.perf_counter() - t0, 6)

    def put(self, key: str, value: Any, text: str | None = None) -> None:
        self.data[key] = value
        if text is not None:
            self.lines.append(text)

    def emit(self) -> None:
        if self.as_json:
            self.out.write(json.dumps(self.data, indent=1, sort_keys=False) + "\n")
        else:
            for line in self.lines:
                self.out.write(line + "\n")
            if self.data["timings"]:
                parts = ", ".join(f"{k} {v:.3f}s" for k, v in self.data["timings"].items())
                self.out.write(f"timings: {parts}\n")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


def _read_instance(path: str) -> FairInstance:
    return parse_instance(_read_text(path))


def _write_output(text: str, path: str | None, out) -> None:
    if path is None or path == "-":
        out.write(text)
    else:
        Path(path).write_text(text)


def _parse_eps(text: str) -> Fraction:
    try:
        eps = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if eps <= 0:
        raise argparse.ArgumentTypeError("eps must be positive")
    return eps


def _cut_text(inst: FairInstance, cut: EdgeCut) -> tuple[dict[str, Any], str]:
    stats = cut_stats(inst.graph, cut)
    text = (f"A = {stats['side_a']}\norder = {stats['order']}\n"
            f"profile A = {stats['profile_a']}  profile B = {stats['profile_b']}")
    return stats, text


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args: argparse.Namespace, rep: _Reporter) -> int:
    inst = rep.timed("parse", lambda: _read_instance(args.instance))
    n = inst.graph.n
    eps = Fraction(1, 2 * n + 1) if args.exact else args.eps
    rep.put("eps", str(eps), f"eps = {eps}")
    observer = SoundnessChecker(inst.graph, inst.k) if args.certify else None
    run = rep.timed("dp", lambda: run_dp(inst, eps, covering=args.covering, seed=args.seed,
                                         observer=observer))
    rep.put("decomposition", {"nodes": len(run.decomposition), "depth": run.decomposition.depth,
                              "max_adhesion": run.decomposition.max_adhesion,
                              "unbreakability_q": run.unbreakability_q},
            f"decomposition: {len(run.decomposition)} nodes, depth {run.decomposition.depth}, "
            f"max adhesion {run.decomposition.max_adhesion}")
    rep.put("domain_size", len(run.domain), f"|D| = {len(run.domain)}")
    status = EXIT_OK
    cut = run.cut
    if cut is None:
        rep.put("cut", None, "none")
    else:
        stats, text = _cut_text(inst, cut)
        rep.put("cut", stats, text)
        fair = is_exact_fair(inst, cut) if args.exact else is_eps_fair(inst, cut, float(eps))
        verdict = "fair" if fair and stats["order"] <= inst.k else "NOT fair"
        rep.put("verdict", verdict, f"verifier: {verdict}")
        if verdict != "fair":
            status = EXIT_VERIFY
    if observer is not None:
        rep.put("soundness", {"entries": observer.entries, "violations": observer.violations},
                f"soundness: {observer.entries} entries, {len(observer.violations)} violations")
        if observer.violations:
            status = EXIT_VERIFY
    if args.oracle_check:
        ref = rep.timed("oracle", lambda: exact_fair_bisection(inst, OracleBudget(args.budget)))
        agree = (ref is None) or (cut is not None)
        rep.put("oracle", {"exact_solution": ref is not None, "agrees": agree},
                f"oracle: exact solution {'exists' if ref is not None else 'does not exist'}; "
                f"{'agrees' if agree else 'DISAGREES'}")
        if not agree:
            status = EXIT_VERIFY
    if args.dump_tables:
        _dump(run, args.dump_tables)
        rep.put("dump_tables", args.dump_tables)
    return status


def _dump(run, directory: str) -> None:
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    for node, rows in dump_tables(run).items():
        payload = [{"kind": kind, "key": key, "order": order, "size_a": size, "profile_a": list(prof)}
                   for kind, key, order, size, prof in rows]
        (target / f"node_{node}.json").write_text(json.dumps(payload, indent=1))


def cmd_decompose(args: argparse.Namespace, rep: _Reporter) -> int:
    inst = rep.timed("parse", lambda: _read_instance(args.instance))
    g = inst.graph
    k = inst.k if args.k is None else args.k
    q = args.q if args.q is not None else max(k, 1)
    cfg = BuilderConfig(k=k, q=q, enumeration_budget=args.budget_cuts)
    td = rep.timed("builder", lambda: build_unbreakable_decomposition(g, cfg))
    q_cert = q
    if not args.no_depth_reduction:
        td = rep.timed("depth_reduction", lambda: reduce_depth(g, td, k))
        q_cert = q + 8 * k
    report = dec.validate(g, td)
    summary = {"nodes": len(td), "depth": td.depth, "max_adhesion": td.max_adhesion,
               "valid": report.valid, "compact": report.compact, "q": q_cert, "k": k}
    rep.put("decomposition_stats", summary,
            f"nodes {len(td)}, depth {td.depth}, max adhesion {td.max_adhesion}, "
            f"valid {report.valid}, compact {report.compact}")
    verdicts: dict[int, bool | None] = {}

    def check_bags() -> None:
        for t in td.nodes:
            try:
                verdicts[t] = bool(dec.is_unbreakable(g, td.bags[t], q_cert, k, budget=args.budget_cuts))
            except BudgetExceeded:
                verdicts[t] = None

    rep.timed("unbreakability", check_bags)
    all_ok = all(v is True for v in verdicts.values())
    rep.put("unbreakable", {str(t): v for t, v in verdicts.items()},
            f"bags ({q_cert}, {k})-unbreakable: "
            + ("all" if all_ok else ", ".join(f"{t}:{v}" for t, v in verdicts.items())))
    rep.put("document", dec.to_document(td))
    if args.out:
        _write_output(dec.dumps(td) + "\n", args.out, rep.out)
    elif not rep.as_json:
        rep.lines.append(dec.dumps(td))
    return EXIT_OK if report.valid and report.compact else EXIT_INTERNAL


def cmd_validate(args: argparse.Namespace, rep: _Reporter) -> int:
    inst = _read_instance(args.instance)
    td = dec.loads(_read_text(args.decomposition))
    report = rep.timed("validate", lambda: dec.validate(inst.graph, td))
    rep.put("report", report.as_dict(),
            f"valid {report.valid}, compact {report.compact}, depth {report.depth}, "
            f"max adhesion {report.max_adhesion}")
    for v in report.violations:
        rep.lines.append(f"violation: {v}")
    for v in report.compactness_findings:
        rep.lines.append(f"compactness: {v}")
    failed = not report.valid or (args.require_compact and not report.compact)
    if args.k is not None and report.max_adhesion > args.k:
        rep.lines.append(f"violation: adhesion {report.max_adhesion} exceeds {args.k}")
        failed = True
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_oracle(args: argparse.Namespace, rep: _Reporter) -> int:
    inst = _read_instance(args.instance)
    cut = rep.timed("oracle", lambda: exact_fair_bisection(inst, OracleBudget(args.budget)))
    rep.put("stats", {"n": inst.graph.n, "m": inst.graph.m, "subsets": 1 << inst.graph.n},
            f"searched {1 << inst.graph.n} subsets of {inst.graph.n} vertices")
    if cut is None:
        rep.put("cut", None, "none")
        return EXIT_OK
    stats, text = _cut_text(inst, cut)
    rep.put("cut", stats, text)
    return EXIT_OK if is_exact_fair(inst, cut) else EXIT_INTERNAL


def _mdss_json(inst) -> str:
    return json.dumps({"dims": inst.dims, "vectors": [list(v) for v in inst.vectors],
                       "target": list(inst.target)}, indent=1) + "\n"


def cmd_generate(args: argparse.Namespace, rep: _Reporter) -> int:
    if args.chain is None:
        n = args.n
        if n is None:
            n, m, c, k = corpus_parameters(args.seed)
        else:
            m = args.m if args.m is not None else min(n, n * (n - 1) // 2)
            c, k = args.c, 1
        inst = random_instance(n, m, c, args.k if args.k is not None else k, args.seed)
        _write_output(format_instance(inst), args.out, rep.out)
        return EXIT_OK
    bcsp = random_bcsp(args.k_vars, args.domain_size, args.seed)
    if args.chain == "bcsp":
        doc = {"k_vars": bcsp.k_vars, "domain_size": bcsp.domain_size,
               "satisfiable": bcsp_satisfiable(bcsp),
               "constraints": [{"i": i, "j": j, "allowed": sorted(map(list, allowed))}
                               for (i, j), allowed in bcsp.constraints.items()]}
        _write_output(json.dumps(doc, indent=1) + "\n", args.out, rep.out)
        return EXIT_OK
    mdss = bcsp_to_mdss(bcsp)
    if args.chain == "mdss":
        _write_output(_mdss_json(mdss), args.out, rep.out)
        return EXIT_OK
    mdp = mdss_to_mdp(mdss, pad=True)
    if args.chain == "mdp":
        _write_output(_mdss_json(mdp), args.out, rep.out)
        return EXIT_OK
    _write_output(format_instance(mdp_to_fair_bisection(mdp)), args.out, rep.out)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, rep: _Reporter) -> int:
    rows = []
    violations: list[str] = []
    # (eps, delta override) pairs; with --delta-values the rounding step is set directly
    settings = ([(Fraction(1, 2), d) for d in args.delta_values] if args.delta_values
                else [(e, None) for e in args.eps_values])
    for i in range(args.count):
        n, m, c, k = corpus_parameters(args.seed + i, max_n=args.max_n)
        inst = random_instance(n, m, c, k, args.seed + i)
        for eps, delta in settings:
            run = run_dp(inst, eps, delta=delta, seed=args.seed)
            entries = sum(len(t) for t in run.tables.values())
            worst = max((len(tab) / run.table_size_bound(t) for t, tab in run.tables.items()), default=0.0)
            violations += [f"instance {i}, eps {eps}, delta {delta}: {v}" for v in run.table_size_violations()]
            bound = sum(run.table_size_bound(t) for t in run.tables)
            rows.append({"instance": i, "n": n, "m": m, "c": c, "k": k, "eps": str(eps),
                         "delta": str(run.domain.delta), "domain_size": len(run.domain), "entries": entries,
                         "bound": bound,
                         "max_fill": round(worst, 6), "seconds": round(sum(run.timings.values()), 4)})
    rep.put("rows", rows)
    for r in rows:
        rep.lines.append(f"#{r['instance']:<3} n={r['n']:<3} c={r['c']} k={r['k']} eps={r['eps']:<6} "
                         f"|D|={r['domain_size']:<4} entries={r['entries']:<7} bound={r['bound']:<10} "
                         f"max fill={r['max_fill']:.4f} {r['seconds']:.3f}s")
    rep.put("violations", violations, f"table-size bound violations: {len(violations)}")
    return EXIT_VERIFY if violations else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    shared.add_argument("--json", action="store_true", help="structured output")
    shared.add_argument("--threads", type=int, default=1,
                        help="worker cap (computation is single-threaded; accepted for interface stability)")
    shared.add_argument("--budget", type=int, default=20, help="vertex budget of brute-force enumeration")
    shared.add_argument("--dump-tables", metavar="DIR", default=None, help="write DP tables as JSON")
    shared.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    p = argparse.ArgumentParser(prog="fairbisect", description="Fair Bisection solver toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[shared], help="find an (eps, r)-fair cut of order <= k")
    s.add_argument("instance", help="instance file ('-' for stdin)")
    s.add_argument("--eps", type=_parse_eps, default=Fraction(1, 2))
    s.add_argument("--exact", action="store_true", help="use eps = 1/(2n+1), which forces exact fairness")
    s.add_argument("--oracle-check", action="store_true", help="compare with the brute-force oracle")
    s.add_argument("--certify", action="store_true", help="re-verify every DP table entry")
    s.add_argument("--covering", choices=["auto", "splitter", "powerset"], default="auto")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("decompose", parents=[shared], help="compact unbreakable tree decomposition")
    d.add_argument("instance")
    d.add_argument("--k", type=int, default=None, help="adhesion bound (default: the instance's k)")
    d.add_argument("--q", type=int, default=None, help="unbreakability parameter of the builder")
    d.add_argument("--no-depth-reduction", action="store_true", help="emit the raw builder output")
    d.add_argument("--budget-cuts", type=int, default=dec.DEFAULT_BUDGET, help="cut enumeration budget")
    d.add_argument("--out", default=None, help="write the decomposition document here")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("validate", parents=[shared], help="check a decomposition document")
    v.add_argument("instance")
    v.add_argument("decomposition")
    v.add_argument("--k", type=int, default=None, help="also require adhesions of size <= k")
    v.add_argument("--require-compact", action="store_true")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", parents=[shared], help="brute-force exact fair bisection")
    o.add_argument("instance")
    o.set_defaults(func=cmd_oracle)

    g = sub.add_parser("generate", parents=[shared], help="write a generated instance")
    g.add_argument("--chain", choices=["bcsp", "mdss", "mdp", "fair"], default=None,
                   help="stage of the reduction chain to emit (default: a random instance)")
    g.add_argument("--k-vars", type=int, default=3)
    g.add_argument("--domain-size", type=int, default=2)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--c", type=int, default=2)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", parents=[shared], help="table sizes versus their bound")
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--max-n", type=int, default=10)
    b.add_argument("--eps-values", type=_parse_eps, nargs="+", default=[Fraction(1), Fraction(1, 2)])
    b.add_argument("--delta-values", type=_parse_eps, nargs="+", default=None,
                   help="set the rounding step directly (eps fixed at 1/2) to vary |D|")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    rep = _Reporter(args.command, argv, args.json, out)
    try:
        status = args.func(args, rep)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BuilderFailure as exc:
        print(f"builder failure: {exc}", file=sys.stderr)
        return EXIT_BUILDER
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ContractError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except FairBisectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    rep.emit()
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
