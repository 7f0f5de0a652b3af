"""Command-line driver.

Every run writes a CSV table (stdout, or ``PREFIX.csv`` with ``--out``) and a
JSON summary (stderr, or ``PREFIX.json``) that embeds the resolved config.
Exit status: 0 ok, 1 certified-invariant violation, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .graphs import SHIPPED, GraphError, LabeledGraph, RadiusError, SchreierGraph, dump_finite_graph, load_finite_graph, load_shipped, schreier_graph
from .words import SubgroupSpec, WordSyntaxError, format_word, parse_word

SCHEMA_VERSION = 1


class Violation(Exception):
    """A certified invariant failed; the run still emits its outputs."""


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.15g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, float):
        return float(f"{x:.15g}") if math.isfinite(x) else str(x)
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator, "float": float(f"{float(x):.15g}")}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


# -- target resolution ------------------------------------------------------------

def read_spec_file(path: str) -> tuple[int, str]:
    """Parse a group spec file of ``rank: k`` and ``subgroup: w1,w2`` lines."""
    rank = None
    subgroup = ""
    with open(path) as fh:
        lines = fh.read().splitlines()
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise WordSyntaxError("expected 'key: value'", line=lineno, column=1)
        key = key.strip()
        offset = len(key) + 2 + (len(value) - len(value.lstrip()))
        if key == "rank":
            try:
                rank = int(value)
            except ValueError:
                raise WordSyntaxError("rank must be an integer", line=lineno, column=offset) from None
        elif key == "subgroup":
            if rank is None:
                raise WordSyntaxError("'rank' must come before 'subgroup'", line=lineno, column=1)
            try:
                SubgroupSpec.parse(rank, value.strip())
            except WordSyntaxError as exc:
                raise WordSyntaxError(exc.args[0].split(" (")[0], line=lineno,
                                      column=offset + (exc.column or 1) - 1) from None
            subgroup = value.strip()
        else:
            raise WordSyntaxError(f"unknown key {key!r}", line=lineno, column=1)
    if rank is None:
        raise WordSyntaxError("spec file has no 'rank' line", line=len(lines) or 1, column=1)
    return rank, subgroup


def resolve_target(args) -> tuple[object, dict]:
    if getattr(args, "graph", None):
        if args.graph in SHIPPED:
            g = load_shipped(args.graph)
        elif os.path.exists(args.graph):
            g = load_finite_graph(args.graph)
        else:
            raise GraphError(f"no shipped graph or file named {args.graph!r}")
        return g, {"graph": args.graph, "vertices": g.n_vertices, "degree": g.degree}
    if getattr(args, "spec", None):
        rank, sub = read_spec_file(args.spec)
    else:
        if args.rank is None:
            raise GraphError("give --rank (optionally --subgroup), --spec or --graph")
        rank, sub = args.rank, args.subgroup or ""
    H = SubgroupSpec.parse(rank, sub)
    return schreier_graph(H), {"rank": rank, "subgroup": str(H), "H": H}


def _subgroup(target, conf) -> SubgroupSpec:
    if "H" not in conf:
        raise GraphError("this command needs a group target (--rank/--subgroup or --spec)")
    return conf["H"]


# -- commands ----------------------------------------------------------------------

def cmd_walks_count(args, target, conf):
    from .walks import return_counts

    counts = return_counts(target if isinstance(target, SchreierGraph) else target, args.n)
    return csv_text(["n", "count"], enumerate(counts)), {"count": counts[-1]}


def cmd_measure(args, target, conf):
    from .walks import nu_measure, trace_measure

    m = trace_measure(target, args.n) if args.which == "mu" else nu_measure(target, args.n)
    total = m.total()
    if total != 1:
        raise Violation(f"measure total mass {total} != 1")
    return m.to_csv(), {"support_size": len(m.support), "total": total}


def cmd_rho_return(args, target, conf):
    from .spectral import rho_return_series
    from .walks import return_counts

    bounds = rho_return_series(target, args.n)
    counts = return_counts(target, 2 * args.n)
    rows = [(b.parameter, 2 * b.parameter, counts[2 * b.parameter], b.value, b.kind) for b in bounds]
    values = [b.value for b in bounds]
    bad = [i + 2 for i in range(len(values) - 1) if values[i + 1] < values[i] - 2 * bounds[i].error_slack]
    summary = {"bounds": [b.to_record() for b in bounds]}
    text = csv_text(["n", "walk_length", "count", "value", "kind"], rows)
    if bad:
        raise Violation(f"return bound decreased at n={bad[0]}", text, summary)
    return text, summary


def cmd_rho_rayleigh(args, target, conf):
    from .spectral import rho_rayleigh_lower

    res = rho_rayleigh_lower(target, args.radius, args.iterations)
    b = res.bound
    text = csv_text(["radius", "iterations", "value", "last_increment", "kind"],
                    [(args.radius, res.iterations, b.value, res.last_increment, b.kind)])
    return text, {"bound": b.to_record(), "last_increment": res.last_increment}


def cmd_rho_finite(args, target, conf):
    from .spectral import eigenvalues_finite, is_ramanujan_finite

    if not isinstance(target, LabeledGraph):
        raise GraphError("rho finite needs --graph")
    spec = eigenvalues_finite(target)
    rep = is_ramanujan_finite(target, args.tol)
    text = csv_text(["index", "eigenvalue"], enumerate(float(x) for x in spec.eigenvalues))
    return text, {"ramanujan": rep.ramanujan, "witness": rep.witness, "bound": rep.bound,
                  "connected": rep.connected, "max_residual": spec.max_residual}


def cmd_ineq_finite(args, target, conf):
    from .inequality import finite_n_inequality

    H = _subgroup(target, conf)
    if args.n % 2 or args.n < 4:
        raise ValueError("--n must be even and >= 4")
    reps = [finite_n_inequality(H, n, args.m, method=args.method) for n in range(4, args.n + 1, 2)]
    rows = [(r.n, r.lhs, r.rhs, r.margin, r.certified, r.conclusive) for r in reps]
    text = csv_text(["n", "lhs", "rhs", "margin", "certified", "conclusive"], rows)
    summary = {"reports": [r.to_record(args.with_rows) for r in reps]}
    bad = [r.n for r in reps if r.certified and not r.conclusive]
    if bad:
        raise Violation(f"certified finite-n inequality failed at n={bad[0]}", text, summary)
    return text, summary


def cmd_ineq_asymptotic(args, target, conf):
    from .inequality import asymptotic_report

    H = _subgroup(target, conf)
    reps = asymptotic_report(H, args.n, args.m, method=args.method)
    rows = [(r.n, r.lhs, r.rhs, r.margin, r.certified, r.conclusive) for r in reps]
    return (csv_text(["n", "lhs", "rhs", "margin", "certified", "conclusive"], rows),
            {"reports": [r.to_record() for r in reps]})


def cmd_power(args, target, conf):
    from .cycles import graph_power, ramanujan_power_check

    if not isinstance(target, LabeledGraph):
        raise GraphError("power needs --graph")
    pg = graph_power(target, args.k)
    chk = ramanujan_power_check(target, args.k, args.tol)
    summary = {"degree": pg.degree, "base_ramanujan": chk.base.ramanujan,
               "power_ramanujan": chk.power.ramanujan, "agree": chk.agree}
    text = dump_finite_graph(pg.to_graph())
    if not chk.agree and chk.base.connected:
        raise Violation("Ramanujan property differs between graph and its power", text, summary)
    return text, summary


def cmd_cycles_indicator(args, target, conf):
    from .cycles import cycle_indicator, independent_cycles

    if isinstance(target, SchreierGraph):
        target = target.ball(args.vertex_radius if args.vertex_radius else (args.k + 1) // 2)
        vertices = [0] if args.vertex is None else [args.vertex]
    else:
        vertices = range(target.n_vertices) if args.vertex is None else [args.vertex]
    rows = []
    violations = []
    for x in vertices:
        c, _ = cycle_indicator(target, x, args.k)
        cert = independent_cycles(target, x, args.k, args.cap)
        D = "inconclusive" if cert.value is None else cert.value
        if cert.value == 1 and (c != 1 or not cert.validate()):
            violations.append(x)
        rows.append((x, c, D, " ".join(format_word(w) for w in cert.words)))
    text = csv_text(["vertex", "C", "D", "cycle_words"], rows)
    summary = {"k": args.k, "cap": args.cap}
    if violations:
        raise Violation(f"independence certificate failed at vertex {violations[0]}", text, summary)
    return text, summary


def cmd_cycles_dp(args, target, conf):
    from .cycles import cycle_density_dp

    if isinstance(target, LabeledGraph) and not target.complete:
        raise RadiusError("density DP needs a finite graph or a group target")
    series = cycle_density_dp(target, args.k, args.n)
    if any(not (0 <= q <= 1) for q in series.q):
        raise Violation("density outside [0, 1]", series.to_csv(), {})
    ces = series.cesaro(args.n) if args.n >= 1 else Fraction(0)
    return series.to_csv(), {"cesaro_final": ces}


def cmd_cycles_mc(args, target, conf):
    from .cycles import cycle_density_mc

    mc = cycle_density_mc(target, args.k, args.n, args.walkers, args.seed)
    return mc.to_csv(), {"walkers": args.walkers, "seed": args.seed}


def cmd_realize(args, target, conf):
    from .realize import schreier_realization

    if not isinstance(target, LabeledGraph):
        raise GraphError("realize needs --graph")
    R = schreier_realization(target)
    text = csv_text(["index", "generator"], enumerate(format_word(w) for w in R.subgroup.generators))
    summary = {"rank": R.subgroup.rank, "subgroup": str(R.subgroup), "bfs_match": R.bfs_match,
               "edges_match": R.edges_match, "permutations": R.permutations}
    if not R.verified:
        raise Violation("realization failed its isomorphism check", text, summary)
    return text, summary


def _parse_vertex_set(text: str, target, rank):
    items = [t.strip() for t in text.split(",")] if text.strip() else []
    if isinstance(target, SchreierGraph) and target.is_cayley:
        return [parse_word(t, rank) for t in items]
    return [int(t) for t in items]


def cmd_qinv(args, target, conf):
    from .walks import quasi_invariance_margin

    rank = conf.get("rank")
    A = _parse_vertex_set(args.set, target, rank)
    if args.letter.isdigit():
        s = int(args.letter)
    else:
        w = parse_word(args.letter, rank)
        if len(w) != 1:
            raise ValueError("--letter must be a single generator or inverse")
        s = w[0]
    r = quasi_invariance_margin(target, A, s, args.n)
    text = csv_text(["n", "nu_As_num", "nu_As_den", "subtrahend_num", "subtrahend_den",
                     "margin_num", "margin_den", "margin_float"],
                    [(r.n, r.nu_As.numerator, r.nu_As.denominator, r.subtrahend.numerator,
                      r.subtrahend.denominator, r.margin.numerator, r.margin.denominator,
                      float(r.margin))])
    summary = {"nu_As": r.nu_As, "nu_A": r.nu_A, "rho_sq_lower": r.rho_sq_lower,
               "subtrahend": r.subtrahend, "margin": r.margin, "holds": r.holds}
    if not r.holds:
        raise Violation("quasi-invariance margin is negative", text, summary)
    return text, summary


# -- parser ------------------------------------------------------------------------

def _target_opts(p):
    p.add_argument("--rank", type=int, help="rank k of the free group")
    p.add_argument("--subgroup", default="", help='generators, e.g. "aa,bB" (uppercase = inverse)')
    p.add_argument("--spec", help="group spec file with 'rank:' and 'subgroup:' lines")
    p.add_argument("--graph", help=f"finite graph file or shipped name ({', '.join(SHIPPED)})")
    p.add_argument("--out", help="write PREFIX.csv and PREFIX.json instead of stdout/stderr")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kesten", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def leaf(parent, name, func, **kw):
        p = parent.add_parser(name, **kw)
        _target_opts(p)
        p.set_defaults(func=func)
        return p

    walks = sub.add_parser("walks").add_subparsers(dest="action", required=True)
    p = leaf(walks, "count", cmd_walks_count, help="exact return-walk counts")
    p.add_argument("--n", type=int, required=True)

    measure = sub.add_parser("measure").add_subparsers(dest="which", required=True)
    for which in ("mu", "nu"):
        p = leaf(measure, which, cmd_measure)
        p.add_argument("--n", type=int, required=True)

    rho = sub.add_parser("rho").add_subparsers(dest="action", required=True)
    p = leaf(rho, "return", cmd_rho_return)
    p.add_argument("--n", type=int, default=8)
    p = leaf(rho, "rayleigh", cmd_rho_rayleigh)
    p.add_argument("--radius", type=int, default=10)
    p.add_argument("--iterations", type=int)
    p = leaf(rho, "finite", cmd_rho_finite)
    p.add_argument("--tol", type=float, default=1e-9)

    ineq = sub.add_parser("ineq").add_subparsers(dest="action", required=True)
    for name, func, default_n in (("finite-n", cmd_ineq_finite, 6), ("asymptotic", cmd_ineq_asymptotic, 16)):
        p = leaf(ineq, name, func)
        p.add_argument("--n", type=int, default=default_n)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--method", default="auto", choices=["auto", "exact", "return", "rayleigh"])
        p.add_argument("--with-rows", action="store_true")

    p = leaf(sub, "power", cmd_power)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-9)

    cycles = sub.add_parser("cycles").add_subparsers(dest="action", required=True)
    p = leaf(cycles, "indicator", cmd_cycles_indicator)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--vertex", type=int)
    p.add_argument("--vertex-radius", type=int, default=0)
    p.add_argument("--cap", type=int, default=10_000)
    p = leaf(cycles, "density-dp", cmd_cycles_dp)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=64)
    p = leaf(cycles, "density-mc", cmd_cycles_mc)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--walkers", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    leaf(sub, "realize", cmd_realize)

    p = leaf(sub, "qinv", cmd_qinv)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--set", default="", help="vertex set A: words (Cayley) or vertex ids")
    p.add_argument("--letter", required=True, help="generator letter, or slot index on finite graphs")
    return ap


def _config(args, conf) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    cfg.update({k: v for k, v in conf.items() if k != "H"})
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    status = 0
    violation = None
    try:
        target, conf = resolve_target(args)
        text, result = args.func(args, target, conf)
    except Violation as v:
        status = 1
        violation = str(v.args[0])
        text = v.args[1] if len(v.args) > 1 else ""
        result = v.args[2] if len(v.args) > 2 else {}
        conf = conf if "conf" in locals() else {}
    except (WordSyntaxError, GraphError, RadiusError, ValueError, OSError) as exc:
        print(f"kesten: error: {exc}", file=sys.stderr)
        return 2
    summary = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": " ".join(a for a in (args.command, getattr(args, "action", None),
                                        getattr(args, "which", None)) if a),
        "config": _config(args, conf),
        "result": result,
        "status": "violation" if status else "ok",
    }
    if violation:
        summary["violation"] = violation
    blob = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out + ".csv", "w") as fh:
            fh.write(text)
        with open(args.out + ".json", "w") as fh:
            fh.write(blob)
    else:
        sys.stdout.write(text)
        sys.stderr.write(blob)
    if violation:
        print(f"kesten: certified invariant violated: {violation}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
