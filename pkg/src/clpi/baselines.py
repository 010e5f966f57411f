"""Comparison methods and exact oracles for tiny instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cpl import CplError, SolveResult, check_pairs, collect_paths, unsatisfied_pairs
from .graph import Graph, Path, simple_paths
from .weights import (DEFAULT_X_MAX, TAU_CMP, ImpactVector, WeightFunction,
                      as_function_list, node_weights)


class BaselineError(ValueError):
    """A weight function cannot reach ``T`` so the baseline is undefined."""


class OraclePrecondition(ValueError):
    """The exact oracle refuses instances that are too large."""


@dataclass
class _Collected:
    """Cumulative under-threshold paths with running lengths."""

    fs: list[WeightFunction]
    T: float
    thr: float
    paths: list[Path]
    known: set
    x: list[float]

    def length(self, p) -> float:
        return math.fsum(self.fs[v](self.x[v]) for v in p)

    def open_paths(self) -> list[Path]:
        return [p for p in self.paths if self.length(p) < self.thr]


def _levels_loop(g: Graph, fs, S, T: float, eps: float, k: int, step, max_rounds: int,
                 name: str) -> SolveResult:
    """Collect paths like full set interdiction but keep ``x``; ``step`` raises
    impact on some nodes until every collected path reaches the threshold."""
    fs = as_function_list(fs, g.n)
    pairs = check_pairs(g, S)
    thr = T * (1 - eps) * (1 - TAU_CMP)
    st = _Collected(fs, T, thr, [], set(), [0.0] * g.n)
    res = SolveResult(ImpactVector.zeros(g.n))
    while True:
        wts = node_weights(fs, st.x)
        todo = unsatisfied_pairs(g, wts, pairs, thr)
        if not todo:
            break
        if res.rounds >= max_rounds:
            raise CplError(f"{name}: round limit {max_rounds} reached")
        fresh = [p for p in collect_paths(g, wts, todo, k, thr) if p not in st.known]
        st.known.update(fresh)
        st.paths.extend(fresh)
        res.round_starts.append(ImpactVector(st.x))
        while True:
            open_ = st.open_paths()
            if not open_:
                break
            step(st, open_)
        res.rounds += 1
        res.per_round_paths.append(len(st.paths))
        res.path_sets.append(fresh)
    res.x = ImpactVector(st.x)
    res.final_paths = list(st.paths)
    return res


def _caps(fs: list[WeightFunction], T: float, x_max: float) -> list[float]:
    caps = []
    for f in fs:
        c = f.x_cap(T, x_max)
        if f(c) < T * (1 - TAU_CMP):
            raise BaselineError(f"weight function {f} never reaches T={T}")
        caps.append(c)
    return caps


def cut_baseline(g: Graph, fs, S, T: float, eps: float, k: int = 20,
                 x_max: float = DEFAULT_X_MAX, max_rounds: int = 500) -> SolveResult:
    """All-or-nothing: a node gets either nothing or enough impact to reach ``T``.

    Nodes are chosen greedily by how many open collected paths they lie on
    (ties to the smaller id).
    """
    fs = as_function_list(fs, g.n)
    caps = _caps(fs, T, x_max)

    def step(st, open_):
        count: dict[int, int] = {}
        for p in open_:
            for v in p:
                if st.x[v] < caps[v]:
                    count[v] = count.get(v, 0) + 1
        if not count:
            raise CplError("cut baseline: open path with every node saturated")
        v = min(count, key=lambda u: (-count[u], u))
        st.x[v] = caps[v]

    return _levels_loop(g, fs, S, T, eps, k, step, max_rounds, "cut baseline")


def discrete_levels(f: WeightFunction, T: float, x_max: float = DEFAULT_X_MAX) -> tuple[float, int]:
    """``(unit, top)``: allowed impacts are ``0, unit, ..., top*unit``.

    Staircase functions use unit 1 up to the first integer reaching ``T``;
    everything else uses four levels with ``f(3*unit) >= T``.
    """
    cap = f.x_cap(T, x_max)
    if f.integral_levels:
        return 1.0, max(1, math.ceil(cap - 1e-12))
    return cap / 3.0, 3


def discrete_baseline(g: Graph, fs, S, T: float, eps: float, k: int = 20,
                      x_max: float = DEFAULT_X_MAX, max_rounds: int = 500) -> SolveResult:
    """Greedy over discrete impact levels by capped gain per unit of impact."""
    fs = as_function_list(fs, g.n)
    _caps(fs, T, x_max)
    levels = [discrete_levels(f, T, x_max) for f in fs]
    lvl = [0] * g.n

    def step(st, open_):
        lengths = [st.length(p) for p in open_]
        through: dict[int, list[int]] = {}
        for i, p in enumerate(open_):
            for v in p:
                through.setdefault(v, []).append(i)
        best, best_v = 0.0, -1
        for v in sorted(through):
            unit, top = levels[v]
            if lvl[v] >= top:
                continue
            f = fs[v]
            delta = f((lvl[v] + 1) * unit) - f(st.x[v])
            gain = sum(min(delta, T - lengths[i]) for i in through[v])
            if gain / unit > best:
                best, best_v = gain / unit, v
        if best_v < 0:
            raise CplError("discrete baseline: no level increase helps an open path")
        lvl[best_v] += 1
        st.x[best_v] = lvl[best_v] * levels[best_v][0]

    return _levels_loop(g, fs, S, T, eps, k, step, max_rounds, "discrete baseline")


# ---------------------------------------------------------------------------
# exact oracles


def feasible_paths(g: Graph, fs, S, T: float, limit: int | None = None) -> list[Path]:
    """All simple target-pair paths shorter than ``T`` at zero impact."""
    fs = as_function_list(fs, g.n)
    w0 = [f(0.0) for f in fs]
    out = []
    for s, t in S:
        for p in simple_paths(g, s, t):
            if math.fsum(w0[v] for v in p) < T:
                out.append(p)
                if limit is not None and len(out) > limit:
                    return out
    return out


def exact_tiny(g: Graph, fs, S, T: float, grid_step: float = 1.0,
               x_max: float | None = None, max_nodes: int = 10,
               max_paths: int = 200) -> ImpactVector:
    """Cheapest grid impact ``x in {0, d, 2d, ...}^n`` with every path >= T.

    Branch and bound over nodes sorted by path count.  The bound adds, for
    each open path, its deficit divided by the best gain rate available on
    its unassigned nodes.
    """
    if g.n > max_nodes:
        raise OraclePrecondition(f"exact oracle needs n <= {max_nodes}, got {g.n}")
    if grid_step <= 0:
        raise ValueError("grid step must be positive")
    fs = as_function_list(fs, g.n)
    pairs = check_pairs(g, S)
    paths = feasible_paths(g, fs, pairs, T, limit=max_paths)
    if len(paths) > max_paths:
        raise OraclePrecondition(f"exact oracle needs <= {max_paths} feasible paths")
    x = [0.0] * g.n
    if not paths:
        return ImpactVector(x)
    target = T * (1 - TAU_CMP)
    nodes = sorted({v for p in paths for v in p},
                   key=lambda v: (-sum(v in p for p in paths), v))
    order = {v: i for i, v in enumerate(nodes)}
    # grid values per node, up to the first level reaching T
    vals: dict[int, list[float]] = {}
    amounts: dict[int, list[float]] = {}
    rate: dict[int, float] = {}
    for v in nodes:
        f = fs[v]
        top = f.x_cap(T, DEFAULT_X_MAX if x_max is None else x_max)
        n_lv = math.ceil(top / grid_step - 1e-9)
        if x_max is not None:
            n_lv = min(n_lv, math.floor(x_max / grid_step + 1e-9))
        amts = [j * grid_step for j in range(n_lv + 1)]
        amounts[v] = amts
        vals[v] = [f(a) for a in amts]
        rate[v] = max(((vals[v][j] - vals[v][0]) / amts[j] for j in range(1, len(amts))),
                      default=0.0)
    # a path's last node in branching order decides when it is complete
    last = [max(order[v] for v in p) for p in paths]
    base = [math.fsum(vals[v][0] for v in p) for p in paths]
    by_last: dict[int, list[int]] = {}
    for i, j in enumerate(last):
        by_last.setdefault(j, []).append(i)
    members = [[order[v] for v in p] for p in paths]

    level = [0] * len(nodes)
    best = [math.inf, None]

    def path_len(i):
        return math.fsum(vals[nodes[j]][level[j]] for j in members[i])

    def bound(depth):
        lb = 0.0
        for i in range(len(paths)):
            if last[i] < depth:
                continue
            deficit = target - path_len(i)
            if deficit <= 0:
                continue
            r = max((rate[nodes[j]] for j in members[i] if j >= depth), default=0.0)
            if r <= 0:
                return math.inf
            lb = max(lb, deficit / r)
        return lb

    def dfs(depth, cost):
        if depth == len(nodes):
            if cost < best[0]:
                best[0] = cost
                best[1] = list(level)
            return
        v = nodes[depth]
        for j, amt in enumerate(amounts[v]):
            c = cost + amt
            if c >= best[0] - 1e-12:
                break
            level[depth] = j
            if any(path_len(i) < target for i in by_last.get(depth, ())):
                continue
            if c + bound(depth + 1) >= best[0] - 1e-12:
                continue
            dfs(depth + 1, c)
        level[depth] = 0

    dfs(0, 0.0)
    if best[1] is None:
        raise OraclePrecondition("no grid point blocks every path; raise x_max")
    for j, v in enumerate(nodes):
        x[v] = amounts[v][best[1][j]]
    return ImpactVector(x)


def exact_linear_lp(paths: Sequence[Sequence[int]], fs, T: float, n: int) -> tuple[float, ImpactVector]:
    """Continuous optimum ``min sum x`` with every path length >= T, for linear weights.

    Capping does not matter here: ``min(L, T) >= T`` iff ``L >= T``.
    """
    from scipy.optimize import linprog

    fs = as_function_list(fs, n)
    if any(fs[v].family != "linear" for p in paths for v in p):
        raise ValueError("the LP oracle needs linear weight functions")
    if not paths:
        return 0.0, ImpactVector.zeros(n)
    A = np.zeros((len(paths), n))
    b = np.zeros(len(paths))
    for i, p in enumerate(paths):
        for v in p:
            A[i, v] -= fs[v].c
        b[i] = -(T - math.fsum(fs[v].f0 for v in p))
    res = linprog(np.ones(n), A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    x = np.maximum(res.x, 0.0)
    return float(res.fun), ImpactVector(x)
