"""Command-line front door: graph files, walk dumps, voltages, resistance,
lemma campaigns, and the R(n) growth study."""

from __future__ import annotations

import argparse
import sys

from .graphs import LineSpec, build_lattice, build_line_graph, build_regular_tree, read_graph, write_graph
from .harmonic import solve_voltage, write_field
from .electrical import effective_resistance, resistance_to_infinity, write_resistance_csv
from .experiments import growth_experiment, load_manifest, run_experiment
from .walks import StopRule, simulate, write_trace


def _build_from_args(args):
    if args.kind == "line":
        if args.multiplicities:
            spec = LineSpec(tuple(int(x) for x in args.multiplicities.split(",")))
        else:
            spec = LineSpec.geometric(args.base, args.length)
        return build_line_graph(spec)
    if args.kind == "lattice":
        return build_lattice(args.dim, args.radius)
    if args.kind == "tree":
        return build_regular_tree(args.branching, args.depth)
    raise SystemExit(f"unknown graph kind {args.kind!r}")


def _parse_stop(text: str) -> StopRule:
    if text == "boundary":
        return StopRule.until_boundary()
    if text.startswith("max:"):
        return StopRule.max_steps(int(text[4:]))
    if text.startswith("vertex:"):
        return StopRule.until_vertex(int(text[7:]))
    if text.startswith("boundary_or:"):
        return StopRule.until_boundary_or(int(text[12:]))
    raise SystemExit(f"bad stop rule {text!r} (boundary | max:N | vertex:V | boundary_or:N)")


def _add_graph_source(p):
    p.add_argument("--graph", help="graph file in the interchange format")
    p.add_argument("--kind", choices=["line", "lattice", "tree"])
    p.add_argument("--base", type=int, default=3)
    p.add_argument("--length", type=int, default=20)
    p.add_argument("--multiplicities", help="comma separated line multiplicities")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--radius", type=int, default=10)
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--depth", type=int, default=8)


def _load_graph(args):
    if args.graph:
        return read_graph(args.graph)
    if args.kind:
        return _build_from_args(args)
    raise SystemExit("give --graph FILE or --kind with its parameters")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="walklab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="emit a graph file")
    _add_graph_source(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("walk", help="simulate one walk and dump the trace")
    _add_graph_source(p)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--stop", default="boundary")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("voltage", help="solve the voltage field and export it")
    _add_graph_source(p)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("resist", help="effective resistance between two sets")
    _add_graph_source(p)
    p.add_argument("--source", required=True, help="comma separated vertex ids")
    p.add_argument("--sink", required=True, help="ids, or 'boundary'")
    p.add_argument("--out", help="optional CSV destination")

    p = sub.add_parser("lemmas", help="run a manifest's lemma campaign")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="override the manifest output directory")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--check-radius-doubling", action="store_true")

    p = sub.add_parser("growth", help="R(n) of PATH(n) at step checkpoints")
    p.add_argument("--kind", choices=["lattice2", "lattice3"], default="lattice2")
    p.add_argument("--checkpoints", default="1000,10000,100000")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--radius", type=int)
    p.add_argument("--pairs", default="sampled:64")
    p.add_argument("--out", required=True)

    args = ap.parse_args(argv)

    if args.cmd == "gen":
        g = _build_from_args(args)
        write_graph(g, args.out)
        print(f"wrote {g!r} to {args.out}")
        return 0

    if args.cmd == "walk":
        g = _load_graph(args)
        trace = simulate(g, args.start, _parse_stop(args.stop), args.seed)
        write_trace(trace, args.out)
        print(f"{len(trace)} steps, terminated by {trace.termination}; dump in {args.out}")
        return 0

    if args.cmd == "voltage":
        g = _load_graph(args)
        fld = solve_voltage(g, args.root)
        write_field(fld, args.out)
        note = " (degenerate: no reachable boundary)" if fld.degenerate else ""
        print(f"residual {fld.residual:.3e}{note}; field in {args.out}")
        return 0

    if args.cmd == "resist":
        g = _load_graph(args)
        src = {int(x) for x in args.source.split(",")}
        if args.sink == "boundary":
            sink = set(g.boundary)
        else:
            sink = {int(x) for x in args.sink.split(",")}
        rep = effective_resistance(g, src, sink)
        if args.out:
            write_resistance_csv([(g.n, f"{rep.value:.12g}", rep.method)], args.out)
        print(f"{rep.value:.12g}")
        return 0

    if args.cmd == "lemmas":
        m = load_manifest(args.manifest)
        if args.out:
            m.out_dir = args.out
        if args.trials:
            m.trials = args.trials
        if args.seed is not None:
            m.seed = args.seed
        if args.check_radius_doubling:
            m.check_radius_doubling = True
        paths = run_experiment(m)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return 0

    if args.cmd == "growth":
        checkpoints = [int(x) for x in args.checkpoints.split(",")]
        result = growth_experiment(
            args.kind, checkpoints, seed=args.seed, pairs=args.pairs,
            radius=args.radius, out_csv=args.out,
        )
        for pt in result.points:
            print(f"n={pt.steps} R={pt.resistance:.6g} ratio={pt.ratio:.6g}")
        if result.truncated:
            print("walk reached the truncation shell; series cut early")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
