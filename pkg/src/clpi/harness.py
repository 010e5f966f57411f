"""Experiment sweeps: instance generation, pair sampling, runs and CSV output."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import os
import random
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

from .baselines import OraclePrecondition, cut_baseline, discrete_baseline, exact_tiny
from .cpl import ALGORITHMS, is_eps_feasible, solve_combo
from .graph import Graph, read_edge_list, write_edge_list
from .tb import TbConfig
from .weights import WeightFunction, parse_function_spec

log = logging.getLogger(__name__)

ALL_ALGORITHMS = ALGORITHMS + ("CUT", "DISCRETE", "EXACT")
CSV_HEADER = ["algorithm", "function", "T", "epsilon", "norm_x", "queries",
              "max_stored_paths", "rounds", "wall_ms", "status"]
ROUNDS_HEADER = ["algorithm", "function", "T", "epsilon", "round", "stored_paths"]


# ---------------------------------------------------------------------------
# instances


def active_nodes(g: Graph) -> list[int]:
    return [v for v in range(g.n) if g.succ[v] or g.pred[v]]


def sample_pairs(g: Graph, num: int, seed: int) -> list[tuple[int, int]]:
    """``num`` distinct ordered pairs of non-isolated nodes, uniformly without
    replacement."""
    if num < 1:
        raise ValueError("num must be >= 1")
    nodes = active_nodes(g)
    m = len(nodes)
    total = m * (m - 1)
    if num > total:
        raise ValueError(f"asked for {num} pairs but only {total} exist")
    rng = random.Random(seed)
    pairs = []
    for idx in rng.sample(range(total), num):
        i, j = divmod(idx, m - 1)
        if j >= i:
            j += 1
        pairs.append((nodes[i], nodes[j]))
    return pairs


def read_pairs(path, g: Graph) -> list[tuple[int, int]]:
    """Pairs file: one ``s t`` per line using the graph's raw node labels."""
    index = {lab: i for i, lab in enumerate(g.labels)}
    pairs = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                s, t = (index[int(a)] for a in line.split()[:2])
            except (KeyError, ValueError):
                raise ValueError(f"{path}:{lineno}: unknown node in {line!r}") from None
            pairs.append((s, t))
    return pairs


def extract_subgraph(g: Graph, center_seed: int, size: int) -> Graph:
    """Induced subgraph on the first ``size`` nodes of a BFS from a seeded
    random non-isolated centre (ignoring arc direction).

    If the centre's component is too small the search continues from the
    smallest unvisited id.  Node ids keep the original relative order and
    labels carry over.
    """
    if not 1 <= size <= g.n:
        raise ValueError(f"size must lie in 1..{g.n}")
    cand = active_nodes(g) or list(range(g.n))
    center = random.Random(center_seed).choice(cand)
    seen = {center}
    queue = deque([center])
    order = [center]
    nxt_root = 0
    while len(order) < size:
        if not queue:
            while nxt_root in seen:
                nxt_root += 1
            seen.add(nxt_root)
            order.append(nxt_root)
            queue.append(nxt_root)
            continue
        u = queue.popleft()
        for v in sorted(set(g.succ[u]) | set(g.pred[u])):
            if v not in seen and len(order) < size:
                seen.add(v)
                order.append(v)
                queue.append(v)
    keep = sorted(order)
    remap = {v: i for i, v in enumerate(keep)}
    arcs = [(remap[u], remap[v]) for u, v in g.arcs if u in remap and v in remap]
    return Graph(len(keep), tuple(arcs), g.undirected_source,
                 tuple(g.labels[v] for v in keep))


def synthetic_as_graph(n: int = 6474, edges: int = 13895, seed: int = 1) -> Graph:
    """Connected AS-like topology with exactly ``n`` nodes and ``edges`` links.

    Starts from the networkx internet AS model and drops randomly chosen
    edges that are not needed for connectivity.
    """
    import networkx as nx

    h = nx.random_internet_as_graph(n, seed=seed)
    h = nx.Graph(h)
    h.remove_edges_from(list(nx.selfloop_edges(h)))
    if h.number_of_edges() < edges:
        raise ValueError(f"model produced only {h.number_of_edges()} edges")
    rng = random.Random(seed)
    cand = sorted(tuple(sorted(e)) for e in h.edges())
    rng.shuffle(cand)
    for u, v in cand:
        if h.number_of_edges() == edges:
            break
        if h.degree(u) < 2 or h.degree(v) < 2:
            continue
        h.remove_edge(u, v)
        if not nx.has_path(h, u, v):
            h.add_edge(u, v)
    if h.number_of_edges() != edges:
        raise ValueError("could not trim the model to the requested edge count")
    return Graph.from_edges(n, h.edges(), undirected=True)


def write_synthetic_as(path, n: int = 6474, edges: int = 13895, seed: int = 1) -> Graph:
    g = synthetic_as_graph(n, edges, seed)
    with open(path, "w", encoding="ascii") as fh:
        write_edge_list(g, fh, f"synthetic AS-like topology\nNodes: {n} Edges: {edges}")
    return g


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class ExperimentSpec:
    graph_path: str
    T_grid: Sequence[float]
    eps_grid: Sequence[float]
    algorithms: Sequence[str] = ALGORITHMS
    function: str = "concave:1"
    undirected: bool = True
    pairs_path: str | None = None
    num_pairs: int = 10
    seed: int = 0
    k: int = 20
    eps_sched: float = 0.1
    max_rounds: int = 500
    subgraph_size: int | None = None
    subgraph_seed: int = 0
    grid_step: float = 1.0
    output_path: str | None = None

    def __post_init__(self):
        if not self.T_grid or not self.eps_grid or not self.algorithms:
            raise ValueError("T grid, epsilon grid and algorithm list must be nonempty")
        self.algorithms = [a.upper() for a in self.algorithms]
        bad = [a for a in self.algorithms if a not in ALL_ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}; choose from {ALL_ALGORITHMS}")


@dataclass
class RunRecord:
    algorithm: str
    function: str
    T: float
    eps: float
    norm_x: float = 0.0
    queries: int = 0
    max_stored_paths: int = 0
    rounds: int = 0
    per_round_paths: list[int] = field(default_factory=list)
    wall_ms: int = 0
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failed(self) -> bool:
        return self.status.startswith("error")


@dataclass
class Instance:
    g: Graph
    pairs: list[tuple[int, int]]
    f: WeightFunction


def build_instance(spec: ExperimentSpec) -> Instance:
    g = read_edge_list(spec.graph_path, spec.undirected)
    if spec.subgraph_size is not None:
        g = extract_subgraph(g, spec.subgraph_seed, spec.subgraph_size)
    if spec.pairs_path:
        pairs = read_pairs(spec.pairs_path, g)
    else:
        pairs = sample_pairs(g, spec.num_pairs, spec.seed)
    return Instance(g, pairs, parse_function_spec(spec.function))


def run_cell(inst: Instance, algorithm: str, T: float, eps: float, k: int = 20,
             eps_sched: float = 0.1, max_rounds: int = 500, grid_step: float = 1.0,
             tb_config: TbConfig | None = None) -> RunRecord:
    """Solve one cell from zero impact and re-check feasibility."""
    g, pairs, f = inst.g, inst.pairs, inst.f
    rec = RunRecord(algorithm, str(f), T, eps)
    start = time.perf_counter()
    try:
        if algorithm in ALGORITHMS:
            res = solve_combo(g, f, pairs, T, eps, algorithm, k, eps_sched, tb_config,
                              max_rounds)
        elif algorithm == "CUT":
            res = cut_baseline(g, f, pairs, T, eps, k, max_rounds=max_rounds)
        elif algorithm == "DISCRETE":
            res = discrete_baseline(g, f, pairs, T, eps, k, max_rounds=max_rounds)
        elif algorithm == "EXACT":
            res = None
            x = exact_tiny(g, f, pairs, T, grid_step)
        else:
            raise ValueError(f"unknown algorithm {algorithm!r}")
    except OraclePrecondition as exc:
        rec.status = f"skipped: oracle precondition ({exc})"
        return rec
    except Exception as exc:  # one bad cell must not abort the sweep
        log.warning("%s T=%g eps=%g failed: %s", algorithm, T, eps, exc)
        rec.status = f"error: {type(exc).__name__}: {exc}"
        rec.wall_ms = round((time.perf_counter() - start) * 1000)
        return rec
    rec.wall_ms = round((time.perf_counter() - start) * 1000)
    if res is not None:
        x = res.x
        rec.queries = res.queries
        rec.rounds = res.rounds
        rec.per_round_paths = list(res.per_round_paths)
        rec.max_stored_paths = res.max_stored_paths
    rec.norm_x = x.norm()
    if not is_eps_feasible(g, f, x, pairs, T, eps):
        rec.status = "error: infeasible result"
    return rec


def run_experiment(spec: ExperimentSpec, inst: Instance | None = None) -> list[RunRecord]:
    """Every (algorithm, T, eps) cell in that nesting order."""
    inst = inst or build_instance(spec)
    records = []
    for alg in spec.algorithms:
        for T in spec.T_grid:
            for eps in spec.eps_grid:
                if alg == "EXACT" and inst.g.n > 10:
                    records.append(RunRecord(alg, str(inst.f), T, eps,
                                             status="skipped: oracle precondition"))
                    continue
                records.append(run_cell(inst, alg, T, eps, spec.k, spec.eps_sched,
                                        spec.max_rounds, spec.grid_step))
    return records


def _fmt(v: float) -> str:
    return repr(float(v))


def format_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.algorithm, r.function, _fmt(r.T), _fmt(r.eps), _fmt(r.norm_x),
                    r.queries, r.max_stored_paths, r.rounds, r.wall_ms, r.status])
    return buf.getvalue()


def format_rounds_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROUNDS_HEADER)
    for r in records:
        for i, count in enumerate(r.per_round_paths, 1):
            w.writerow([r.algorithm, r.function, _fmt(r.T), _fmt(r.eps), i, count])
    return buf.getvalue()


def rounds_path(path) -> FsPath:
    p = FsPath(path)
    return p.with_name(p.stem + ".rounds.csv")


def emit_csv(records: Sequence[RunRecord], path=None) -> bytes:
    """Return the metrics CSV; when ``path`` is given also write it and the
    per-round series next to it."""
    text = format_csv(records)
    if path is not None:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
        with open(rounds_path(path), "w", encoding="ascii", newline="") as fh:
            fh.write(format_rounds_csv(records))
    return text.encode("ascii")


# ---------------------------------------------------------------------------
# spec files


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def load_spec(path) -> ExperimentSpec:
    """Parse a ``key = value`` spec file; relative paths resolve against it."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, encoding="utf-8") as fh:
        cp.read_string("[sweep]\n" + fh.read())
    sec = cp["sweep"]
    here = os.path.dirname(os.path.abspath(path))

    def rel(p):
        return p if p is None or os.path.isabs(p) else os.path.join(here, p)

    known = {"graph", "undirected", "pairs", "num_pairs", "seed", "function", "t",
             "epsilon", "k", "algorithms", "eps_sched", "max_rounds", "subgraph_size",
             "subgraph_seed", "grid_step", "out"}
    unknown = set(sec) - known
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    if "graph" not in sec or "t" not in sec:
        raise ValueError("spec needs at least 'graph' and 'T'")
    size = sec.get("subgraph_size")
    function = sec.get("function", "concave:1").strip()
    if function.startswith("table:"):
        # table files are relative to the spec too
        rest = function[len("table:"):]
        mode = ""
        if rest.endswith((":step", ":linear")):
            rest, mode = rest.rsplit(":", 1)
            mode = ":" + mode
        function = f"table:{rel(rest)}{mode}"
    return ExperimentSpec(
        graph_path=rel(sec["graph"].strip()),
        T_grid=_floats(sec["t"]),
        eps_grid=_floats(sec.get("epsilon", "0.1")),
        algorithms=sec.get("algorithms", ",".join(ALGORITHMS)).replace(",", " ").split(),
        function=function,
        undirected=sec.getboolean("undirected", True),
        pairs_path=rel(sec.get("pairs")),
        num_pairs=sec.getint("num_pairs", 10),
        seed=sec.getint("seed", 0),
        k=sec.getint("k", 20),
        eps_sched=sec.getfloat("eps_sched", 0.1),
        max_rounds=sec.getint("max_rounds", 500),
        subgraph_size=int(size) if size else None,
        subgraph_seed=sec.getint("subgraph_seed", 0),
        grid_step=sec.getfloat("grid_step", 1.0),
        output_path=rel(sec.get("out")),
    )
