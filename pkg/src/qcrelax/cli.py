"""Command-line driver: generate instances, solve relaxations, compare.

Exit codes: 0 success, 1 solve failure, 2 usage error.  The default
solver tolerance can be overridden with the CONIC_SOLVER_TOL environment
variable or the --tol flag (the flag wins).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import build
from .chordal import Graph, chordal_extension, maximal_cliques, overlap_set
from .completion import PartialMatrix, zero_fill
from .generators import LatticeSpec, ZeroDiagSpec, gen_lattice, gen_zero_diag
from .model import (
    aggregate_pattern,
    homogenize,
    load_instance,
    save_instance,
)
from .program import (
    _lower_dual,
    _lower_primal,
    export_sdpa,
    program_objective,
    standard_form_to_json,
    variable_values,
)
from .solver import SolverConfig, solve

RELAXATIONS = ("fsdp", "ssdp", "fsocp", "ssocp", "dual-fsocp", "dual-ssocp")

CSV_HEADER = (
    "instance,relaxation,form,status,variables,constraints,"
    "nonneg,soc,psd,free,iterations,wall_time_s,objective,pres,dres,gap"
)


def _default_tol() -> float:
    env = os.environ.get("CONIC_SOLVER_TOL")
    if env is None:
        return 1e-8
    try:
        return float(env)
    except ValueError:
        raise SystemExit(f"invalid CONIC_SOLVER_TOL value {env!r}")


def _build_relaxation(name, data, pattern, chordal_parts):
    if name == "fsdp":
        return build.build_fsdp(data)
    if name == "ssdp":
        ext, cs, u = chordal_parts
        return build.build_ssdp(data, ext, cs, u)
    if name == "fsocp":
        return build.build_fsocp(data)
    if name == "ssocp":
        return build.build_ssocp(data, pattern)
    if name == "dual-fsocp":
        return build.build_dual_fsocp(data)
    if name == "dual-ssocp":
        return build.build_dual_ssocp(data, pattern)
    raise ValueError(f"unknown relaxation {name!r}")


def _chordal_parts(pattern):
    g = Graph(pattern.dim, pattern.edges)
    ext = chordal_extension(g)
    cs = maximal_cliques(ext)
    return ext, cs, overlap_set(cs)


def _run_one(inst_path, relax, form, tol):
    inst = load_instance(inst_path)
    data = homogenize(inst)
    pattern = aggregate_pattern(data)
    parts = _chordal_parts(pattern) if relax == "ssdp" else None
    prog = _build_relaxation(relax, data, pattern, parts)
    sf = _lower_primal(prog) if form == "P" else _lower_dual(prog)
    cfg = SolverConfig(tol_gap=tol, tol_primal=tol, tol_dual=tol)
    t0 = time.perf_counter()
    sol = solve(sf, cfg)
    wall = time.perf_counter() - t0
    inv = prog.cone_inventory()
    rec = {
        "instance": str(inst_path),
        "relaxation": relax,
        "form": form,
        "status": sol.status,
        "variables": prog.num_vars,
        "constraints": len(prog.equalities)
        + len(prog.inequalities)
        + len(prog.soc_constraints),
        "cones": inv,
        "iterations": sol.iterations,
        "wall_time_s": round(wall, 4),
        "objective": program_objective(sf, sol) if sol.status == "Optimal" else None,
        "residuals": {
            "pres": sol.residuals[0],
            "dres": sol.residuals[1],
            "gap": sol.residuals[2],
        },
    }
    return rec, prog, sf, sol


def _record_csv(rec) -> str:
    inv = rec["cones"]
    obj = "" if rec["objective"] is None else f"{rec['objective']:.10g}"
    r = rec["residuals"]
    return ",".join(
        [
            rec["instance"],
            rec["relaxation"],
            rec["form"],
            rec["status"],
            str(rec["variables"]),
            str(rec["constraints"]),
            str(inv["nonneg"]),
            str(inv["soc"]),
            str(inv["psd"]),
            str(inv["free"]),
            str(rec["iterations"]),
            f"{rec['wall_time_s']:.4f}",
            obj,
            f"{r['pres']:.3e}",
            f"{r['dres']:.3e}",
            f"{r['gap']:.3e}",
        ]
    )


def cmd_generate(args) -> int:
    if args.family == "lattice":
        inst = gen_lattice(LatticeSpec(args.nl, args.m, args.seed))
    else:
        inst = gen_zero_diag(ZeroDiagSpec(args.n, args.m, args.density, args.seed))
    save_instance(inst, args.output)
    print(f"wrote {args.output} (n={inst.n}, m={inst.m})")
    return 0


def _emit_completion(prog, sf, sol, path, compact):
    inst_dim = prog.metadata["dim"]
    entries = build.extract_entries(prog, variable_values(sf, sol))
    pattern = frozenset(k for k in entries if k[0] != k[1])
    known = dict(entries)
    for i in range(1, inst_dim + 1):
        known.setdefault((i, i), 0.0)
    X = zero_fill(PartialMatrix(inst_dim, known, pattern))
    if compact:
        doc = {
            "dim": inst_dim,
            "upper": [
                [i, j, X[i - 1, j - 1]]
                for i in range(1, inst_dim + 1)
                for j in range(i, inst_dim + 1)
                if X[i - 1, j - 1] != 0.0
            ],
        }
    else:
        doc = {"dim": inst_dim, "rows": [list(map(float, row)) for row in X]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def cmd_solve(args) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    try:
        rec, prog, sf, sol = _run_one(args.instance, args.relax, args.form, tol)
    except Exception as exc:  # build or IO failure
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.csv:
        print(CSV_HEADER)
        print(_record_csv(rec))
    else:
        print(json.dumps(rec))
    if args.emit_completion:
        if args.relax != "ssocp":
            print("error: --emit-completion requires --relax ssocp", file=sys.stderr)
            return 2
        _emit_completion(prog, sf, sol, args.emit_completion, args.compact)
    return 0 if rec["status"] == "Optimal" else 1


def cmd_compare(args) -> int:
    relaxations = [r.strip() for r in args.relax.split(",") if r.strip()]
    if not relaxations:
        print("error: empty relaxation list", file=sys.stderr)
        return 2
    for r in relaxations:
        if r not in RELAXATIONS:
            print(f"error: unknown relaxation {r!r}", file=sys.stderr)
            return 2
    tol = args.tol if args.tol is not None else _default_tol()

    instances = list(args.instances)
    tmp_files = []
    if args.sweep_nl:
        import tempfile

        for nl in (int(v) for v in args.sweep_nl.split(",")):
            inst = gen_lattice(LatticeSpec(nl, args.m, args.seed))
            fh = tempfile.NamedTemporaryFile(
                "w", suffix=f"-nl{nl}.json", delete=False
            )
            fh.close()
            save_instance(inst, fh.name)
            instances.append(fh.name)
            tmp_files.append(fh.name)
    if not instances:
        print("error: no instances given (pass files or --sweep-nl)", file=sys.stderr)
        return 2

    rows = []
    for path in instances:
        recs = {}
        for relax in relaxations:
            try:
                rec, _, _, _ = _run_one(path, relax, args.form, tol)
            except Exception as exc:
                print(f"warning: {relax} on {path} failed: {exc}", file=sys.stderr)
                continue
            recs[relax] = rec
        objs = [
            r["objective"] for r in recs.values() if r["objective"] is not None
        ]
        ref = objs[0] if objs else None
        for relax in relaxations:
            if relax not in recs:
                continue
            rec = recs[relax]
            obj = rec["objective"]
            if obj is None or ref is None:
                agree = ""
            else:
                agree = "OK" if abs(obj - ref) <= 1e-6 * (1 + abs(ref)) else "DIFF"
            ratio = ""
            if (
                relax == "ssocp"
                and "fsocp" in recs
                and rec["wall_time_s"] > 0
            ):
                ratio = f"{recs['fsocp']['wall_time_s'] / rec['wall_time_s']:.2f}"
            rows.append((_record_csv(rec), agree, ratio))

    header = CSV_HEADER + ",agreement,fsocp_ssocp_time_ratio"
    lines = [header] + [f"{r},{a},{t}" for r, a, t in rows]
    if args.out and args.out.endswith(".md"):
        cols = header.split(",")
        md = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
        for r, a, t in rows:
            md.append("| " + " | ".join(r.split(",") + [a, t]) + " |")
        text = "\n".join(md) + "\n"
    else:
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        sys.stdout.write(text)
    for path in tmp_files:
        os.unlink(path)
    return 0


def cmd_export(args) -> int:
    inst = load_instance(args.instance)
    data = homogenize(inst)
    pattern = aggregate_pattern(data)
    parts = _chordal_parts(pattern) if args.relax == "ssdp" else None
    prog = _build_relaxation(args.relax, data, pattern, parts)
    sf = _lower_primal(prog)
    if args.format == "sdpa":
        if args.relax not in ("fsdp", "ssdp"):
            print("error: sdpa export needs a pure-SDP relaxation", file=sys.stderr)
            return 2
        export_sdpa(sf, args.output)
    else:
        with open(args.output, "w") as fh:
            fh.write(standard_form_to_json(sf))
            fh.write("\n")
    print(f"wrote {args.output}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qcrelax", description="QCQP conic relaxation toolkit"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a random instance")
    gs = g.add_subparsers(dest="family", required=True)
    gl = gs.add_parser("lattice", help="lattice-structured QCQP")
    gl.add_argument("--nl", type=int, required=True)
    gl.add_argument("--m", type=int, required=True)
    gl.add_argument("--seed", type=int, default=0)
    gl.add_argument("-o", "--output", required=True)
    gz = gs.add_parser("zerodiag", help="zero-diagonal QCQP")
    gz.add_argument("--n", type=int, required=True)
    gz.add_argument("--m", type=int, required=True)
    gz.add_argument("--density", type=float, required=True)
    gz.add_argument("--seed", type=int, default=0)
    gz.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one relaxation")
    s.add_argument("instance")
    s.add_argument("--relax", choices=RELAXATIONS, required=True)
    s.add_argument("--form", choices=("P", "D"), default="P")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--csv", action="store_true", help="CSV instead of JSON")
    s.add_argument("--emit-completion", metavar="PATH", default=None)
    s.add_argument("--compact", action="store_true", help="upper triangle only")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="solve several relaxations and tabulate")
    c.add_argument("instances", nargs="*")
    c.add_argument("--relax", required=True, help="comma-separated list")
    c.add_argument("--form", choices=("P", "D"), default="P")
    c.add_argument("--tol", type=float, default=None)
    c.add_argument("--sweep-nl", default=None, help="comma-separated lattice sizes")
    c.add_argument("--m", type=int, default=10)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None, help=".csv or .md output path")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("export", help="export a lowered relaxation")
    e.add_argument("instance")
    e.add_argument("--relax", choices=RELAXATIONS, required=True)
    e.add_argument("--format", choices=("sdpa", "json"), default="json")
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
