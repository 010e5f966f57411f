"""Directed graphs with node weights: edge-list loading, shortest paths, Yen.

Path lengths are sums of *node* weights and include both endpoints.  All
searches break ties between equal-length paths by the lexicographic order of
their node sequences, so results are reproducible across runs.
"""

from __future__ import annotations

import heapq
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

Path = tuple[int, ...]


class EdgeListError(ValueError):
    """Raised when an edge list cannot be parsed."""


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph on nodes ``0..n-1``.

    ``labels[i]`` is the raw id node ``i`` had in its source file.
    """

    n: int
    arcs: tuple[tuple[int, int], ...]
    undirected_source: bool = False
    labels: tuple[int, ...] = ()
    succ: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    pred: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        succ: list[set[int]] = [set() for _ in range(self.n)]
        pred: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.arcs:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"arc ({u}, {v}) out of range for n={self.n}")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if v in succ[u]:
                raise ValueError(f"duplicate arc ({u}, {v})")
            succ[u].add(v)
            pred[v].add(u)
        object.__setattr__(self, "succ", tuple(tuple(sorted(s)) for s in succ))
        object.__setattr__(self, "pred", tuple(tuple(sorted(p)) for p in pred))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(self.n)))
        elif len(self.labels) != self.n:
            raise ValueError("labels must have one entry per node")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], undirected: bool = False,
                   labels: Sequence[int] = ()) -> "Graph":
        """Build a graph, dropping self-loops and duplicates."""
        seen = set()
        for u, v in edges:
            if u == v:
                continue
            seen.add((u, v))
            if undirected:
                seen.add((v, u))
        return cls(n, tuple(sorted(seen)), undirected, tuple(labels))

    @property
    def m(self) -> int:
        return len(self.arcs)

    def degree(self, v: int) -> int:
        """Number of distinct neighbours (in or out)."""
        return len(set(self.succ[v]) | set(self.pred[v]))

    def has_arc(self, u: int, v: int) -> bool:
        succ = self.succ[u]
        i = _bisect(succ, v)
        return i < len(succ) and succ[i] == v

    def check_node(self, v: int) -> None:
        if not isinstance(v, (int,)) or not 0 <= v < self.n:
            raise ValueError(f"node id {v!r} out of range 0..{self.n - 1}")


def _bisect(seq, x):
    lo, hi = 0, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if seq[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def load_edge_list(source, treat_as_undirected: bool = True) -> Graph:
    """Parse a SNAP-style edge list.

    ``source`` may be bytes, str, a path or a binary/text file object.  Lines
    starting with ``#`` are comments; every other non-blank line must hold two
    nonnegative integers.  Raw ids are remapped to ``0..n-1`` in increasing
    raw-id order.
    """
    if isinstance(source, (bytes, bytearray)):
        lines = io.StringIO(source.decode("ascii"))
    elif isinstance(source, str):
        lines = io.StringIO(source)
    elif isinstance(source, os.PathLike):
        return read_edge_list(source, treat_as_undirected)
    else:
        data = source.read()
        return load_edge_list(data, treat_as_undirected)

    raw_edges = []
    raw_ids = set()
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) < 2:
            raise EdgeListError(f"line {lineno}: expected two node ids, got {stripped!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer node id in {stripped!r}") from None
        if u < 0 or v < 0:
            raise EdgeListError(f"line {lineno}: negative node id in {stripped!r}")
        raw_ids.add(u)
        raw_ids.add(v)
        raw_edges.append((u, v))
    if not raw_ids:
        raise EdgeListError("empty input: no edges found")
    labels = sorted(raw_ids)
    index = {raw: i for i, raw in enumerate(labels)}
    edges = ((index[u], index[v]) for u, v in raw_edges)
    return Graph.from_edges(len(labels), edges, treat_as_undirected, labels)


def read_edge_list(path, treat_as_undirected: bool = True) -> Graph:
    """Load an edge-list file from disk."""
    with open(path, "r", encoding="ascii") as fh:
        return load_edge_list(fh.read(), treat_as_undirected)


def write_edge_list(g: Graph, fh, comment: str | None = None) -> None:
    """Write ``g`` in SNAP format using its raw labels (one line per arc,
    or per undirected edge when the graph came from undirected input)."""
    if comment:
        for line in comment.splitlines():
            fh.write(f"# {line}\n")
    for u, v in g.arcs:
        if g.undirected_source and u > v:
            continue
        fh.write(f"{g.labels[u]}\t{g.labels[v]}\n")


# ---------------------------------------------------------------------------
# shortest paths


def _check_weights(g: Graph, weights: Sequence[float]) -> None:
    if len(weights) != g.n:
        raise ValueError(f"expected {g.n} node weights, got {len(weights)}")


def shortest_path(g: Graph, weights: Sequence[float], s: int, t: int,
                  limit: float = math.inf, banned_nodes=frozenset(),
                  banned_arcs=frozenset(), base: float = 0.0) -> tuple[float, Path | None]:
    """Lexicographically smallest minimum-weight ``s``-``t`` path.

    ``base`` is added to the source label.  Labels ``>= limit`` are pruned, so
    ``(inf, None)`` is returned when every path reaches ``limit``.
    """
    succ = g.succ
    start = base + weights[s]
    if start >= limit or s in banned_nodes:
        return math.inf, None
    best = {s: start}
    heap = [(start, (s,))]
    done = set()
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == t:
            return d, path
        for v in succ[u]:
            if v in done or v in banned_nodes or (banned_arcs and (u, v) in banned_arcs):
                continue
            nd = d + weights[v]
            if nd >= limit:
                continue
            old = best.get(v)
            if old is None or nd <= old:
                best[v] = nd
                heapq.heappush(heap, (nd, path + (v,)))
    return math.inf, None


def node_weighted_distance(g: Graph, weights: Sequence[float], s: int, t: int,
                           cap: float) -> float:
    """``min(cap, min over s-t paths of the summed node weights)``."""
    g.check_node(s)
    g.check_node(t)
    _check_weights(g, weights)
    if cap <= 0:
        raise ValueError("cap must be positive")
    d, _ = shortest_path(g, weights, s, t, limit=cap)
    return min(d, cap)


def path_weight(weights: Sequence[float], path: Sequence[int]) -> float:
    return math.fsum(weights[v] for v in path)


def k_shortest_paths(g: Graph, weights: Sequence[float], s: int, t: int, k: int,
                     cap: float = math.inf, below: float | None = None) -> list[Path]:
    """Up to ``k`` loopless ``s``-``t`` paths in nondecreasing length (Yen).

    Order is by uncapped node-weight length, then lexicographically by node
    sequence, which is also nondecreasing in length capped at ``cap``.  When
    ``below`` is given, only paths strictly shorter than it are produced and
    the search stops at the first longer one.
    """
    g.check_node(s)
    g.check_node(t)
    _check_weights(g, weights)
    if k < 1:
        raise ValueError("k must be >= 1")
    if s == t:
        raise ValueError("source and sink must differ")
    limit = math.inf if below is None else below
    d0, first = shortest_path(g, weights, s, t, limit=limit)
    if first is None:
        return []
    accepted: list[Path] = [first]
    seen = {first}
    candidates: list[tuple[float, Path]] = []
    while len(accepted) < k:
        prev = accepted[-1]
        prefix = 0.0
        for i in range(len(prev) - 1):
            spur = prev[i]
            root = prev[: i + 1]
            banned_arcs = {(p[i], p[i + 1]) for p in accepted
                           if len(p) > i + 1 and p[: i + 1] == root}
            banned_nodes = frozenset(root[:-1])
            d, tail = shortest_path(g, weights, spur, t, limit=limit,
                                    banned_nodes=banned_nodes,
                                    banned_arcs=banned_arcs, base=prefix)
            prefix += weights[spur]
            if tail is None:
                continue
            cand = root[:-1] + tail
            if cand not in seen:
                seen.add(cand)
                heapq.heappush(candidates, (d, cand))
        if not candidates:
            break
        _, nxt = heapq.heappop(candidates)
        accepted.append(nxt)
    return accepted


def simple_paths(g: Graph, s: int, t: int, limit: int | None = None) -> Iterator[Path]:
    """All simple ``s``-``t`` paths by depth-first search, lexicographic order."""
    if s == t:
        return
    count = 0
    stack = [(s, iter(g.succ[s]))]
    on_path = [s]
    visited = {s}
    while stack:
        _, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            visited.discard(on_path.pop())
            continue
        if nxt in visited:
            continue
        if nxt == t:
            yield tuple(on_path) + (t,)
            count += 1
            if limit is not None and count >= limit:
                return
            continue
        visited.add(nxt)
        on_path.append(nxt)
        stack.append((nxt, iter(g.succ[nxt])))


def is_simple_path(g: Graph, path: Sequence[int]) -> bool:
    if len(path) == 0 or len(set(path)) != len(path):
        return False
    return all(g.has_arc(u, v) for u, v in zip(path, path[1:]))
