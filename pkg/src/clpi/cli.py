"""Command line entry point: ``clpi solve|sweep|oracle|gen-graph``.

Exit status is 0 when every cell succeeds, 2 when some cell failed and 1
when the run aborted (unreadable graph, bad arguments, ...).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .baselines import exact_tiny
from .graph import EdgeListError
from .harness import (ExperimentSpec, build_instance, emit_csv, load_spec,
                      run_experiment, write_synthetic_as)

log = logging.getLogger("clpi")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge list file")
    p.add_argument("--undirected", action="store_true",
                   help="treat each input edge as two opposite arcs")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--pairs", help="file of 's t' target pairs (raw node ids)")
    src.add_argument("--num-pairs", type=int, default=10, help="number of sampled pairs")
    p.add_argument("--seed", type=int, default=0, help="pair sampling seed")
    p.add_argument("--function", default="concave:1",
                   help="weight function, family:c[:f0] or table:FILE[:mode]")
    p.add_argument("--T", type=_floats, required=True, help="threshold(s), comma separated")
    p.add_argument("--subgraph-size", type=int, default=None,
                   help="restrict to a BFS subgraph of this many nodes")
    p.add_argument("--subgraph-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clpi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="run one algorithm over T and epsilon grids")
    _add_instance_args(p)
    p.add_argument("--epsilon", type=_floats, default=[0.1])
    p.add_argument("--k", type=int, default=20, help="shortest paths per pair and round")
    p.add_argument("--cpl", choices=["ii", "fi"], default="ii")
    p.add_argument("--tb", choices=["te", "jsg"], default="te")
    p.add_argument("--eps-sched", type=float, default=0.1, help="TE decay of M per sweep")
    p.add_argument("--max-rounds", type=int, default=500)
    p.add_argument("--out", help="CSV output (default stdout)")

    p = sub.add_parser("sweep", help="run a key=value experiment spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="CSV output (overrides the spec's 'out')")

    p = sub.add_parser("oracle", help="exact grid optimum on a tiny instance")
    _add_instance_args(p)
    p.add_argument("--grid-step", type=float, default=1.0)
    p.add_argument("--x-max", type=float, default=None)

    p = sub.add_parser("gen-graph", help="write a synthetic AS-like edge list")
    p.add_argument("--out", required=True)
    p.add_argument("--nodes", type=int, default=6474)
    p.add_argument("--edges", type=int, default=13895)
    p.add_argument("--seed", type=int, default=1)
    return parser


def _write(records, out) -> int:
    data = emit_csv(records, out)
    if out is None:
        sys.stdout.write(data.decode("ascii"))
    failed = [r for r in records if r.failed]
    for r in failed:
        log.error("%s T=%g eps=%g: %s", r.algorithm, r.T, r.eps, r.status)
    return 2 if failed else 0


def _spec_from_args(args, algorithms, eps_grid) -> ExperimentSpec:
    return ExperimentSpec(
        graph_path=args.graph, T_grid=args.T, eps_grid=eps_grid, algorithms=algorithms,
        function=args.function, undirected=args.undirected, pairs_path=args.pairs,
        num_pairs=args.num_pairs, seed=args.seed,
        subgraph_size=args.subgraph_size, subgraph_seed=args.subgraph_seed,
        **({"k": args.k, "eps_sched": args.eps_sched, "max_rounds": args.max_rounds}
           if args.cmd == "solve" else {}),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.cmd == "solve":
            combo = f"{args.cpl}-{args.tb}".upper()
            spec = _spec_from_args(args, [combo], args.epsilon)
            return _write(run_experiment(spec), args.out)
        if args.cmd == "sweep":
            spec = load_spec(args.spec)
            return _write(run_experiment(spec), args.out or spec.output_path)
        if args.cmd == "oracle":
            spec = _spec_from_args(args, ["EXACT"], [0.1])
            inst = build_instance(spec)
            for T in args.T:
                x = exact_tiny(inst.g, inst.f, inst.pairs, T, args.grid_step, args.x_max)
                print(f"T={T:g} norm={x.norm():.12g} x={' '.join(f'{v:g}' for v in x)}")
            return 0
        if args.cmd == "gen-graph":
            g = write_synthetic_as(args.out, args.nodes, args.edges, args.seed)
            print(f"wrote {args.out}: {g.n} nodes, {g.m // 2} edges")
            return 0
    except (OSError, EdgeListError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1
    parser.error(f"unknown command {args.cmd}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
