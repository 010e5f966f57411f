"""Critical path listing: the outer loops that decide which paths to block.

Both drivers repeatedly collect the ``k`` shortest paths of every target pair
that is still closer than ``T(1 - eps)`` and hand them to a threshold-blocking
routine.  Incremental interdiction blocks only the freshly collected paths on
top of the current impact; full set interdiction keeps every path ever
collected and re-solves from zero impact each round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .graph import Graph, Path, k_shortest_paths, shortest_path
from .tb import QueryCounter, TbConfig, TbRequest, solve_tb
from .weights import TAU_CMP, ImpactVector, as_function_list, node_weights


class CplError(RuntimeError):
    """The driver hit its round limit or could not make progress."""


@dataclass
class CplConfig:
    T: float
    eps: float = 0.1
    k: int = 20
    tb: str = "te"
    eps_sched: float = 0.1
    max_rounds: int = 500
    tb_config: TbConfig = field(default_factory=TbConfig)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.tb not in ("te", "jsg"):
            raise ValueError(f"unknown blocking method {self.tb!r}")

    @property
    def threshold(self) -> float:
        return self.T * (1 - self.eps) * (1 - self.tb_config.tau_cmp)


@dataclass
class SolveResult:
    x: ImpactVector
    rounds: int = 0
    per_round_paths: list[int] = field(default_factory=list)
    queries: int = 0
    # paths newly collected in each round
    path_sets: list[list[Path]] = field(default_factory=list)
    # the path set handed to the last blocking call
    final_paths: list[Path] = field(default_factory=list)
    # impact in force when each round collected its paths
    round_starts: list[ImpactVector] = field(default_factory=list)

    @property
    def max_stored_paths(self) -> int:
        return max(self.per_round_paths, default=0)

    @property
    def norm(self) -> float:
        return self.x.norm()


def check_pairs(g: Graph, S) -> list[tuple[int, int]]:
    pairs = []
    for s, t in S:
        g.check_node(s)
        g.check_node(t)
        if s == t:
            raise ValueError(f"target pair ({s}, {t}) has equal endpoints")
        pairs.append((s, t))
    return pairs


def is_eps_feasible(g: Graph, fs, x, S, T: float, eps: float,
                    tau: float = TAU_CMP) -> bool:
    """True iff every pair's node-weighted distance is at least ``T(1-eps)``."""
    fs = as_function_list(fs, g.n)
    wts = node_weights(fs, list(x))
    thr = T * (1 - eps) * (1 - tau)
    for s, t in S:
        d, _ = shortest_path(g, wts, s, t, limit=thr)
        if d < thr:
            return False
    return True


def unsatisfied_pairs(g: Graph, wts: Sequence[float], S, thr: float) -> list[tuple[int, int]]:
    out = []
    for s, t in S:
        d, _ = shortest_path(g, wts, s, t, limit=thr)
        if d < thr:
            out.append((s, t))
    return out


def collect_paths(g: Graph, wts: Sequence[float], pairs, k: int, thr: float) -> list[Path]:
    """Up to ``k`` paths shorter than ``thr`` for each pair, in pair order."""
    out = []
    for s, t in pairs:
        out.extend(k_shortest_paths(g, wts, s, t, k, below=thr))
    return out


def incremental_interdiction(g: Graph, fs, S, cfg: CplConfig) -> SolveResult:
    fs = as_function_list(fs, g.n)
    pairs = check_pairs(g, S)
    thr = cfg.threshold
    counter = QueryCounter()
    x = ImpactVector.zeros(g.n)
    res = SolveResult(x)
    while True:
        wts = node_weights(fs, x.tolist())
        todo = unsatisfied_pairs(g, wts, pairs, thr)
        if not todo:
            break
        if res.rounds >= cfg.max_rounds:
            raise CplError(f"incremental interdiction: {len(todo)} pairs still "
                           f"unsatisfied after {cfg.max_rounds} rounds")
        paths = collect_paths(g, wts, todo, cfg.k, thr)
        res.round_starts.append(x)
        req = TbRequest(paths, x, cfg.T, cfg.eps, fs, cfg.eps_sched)
        out = solve_tb(req, cfg.tb, cfg.tb_config, counter)
        x = out.x
        res.rounds += 1
        res.per_round_paths.append(len(paths))
        res.path_sets.append(paths)
        res.final_paths = paths
    res.x = x
    res.queries = counter.total
    return res


def full_set_interdiction(g: Graph, fs, S, cfg: CplConfig) -> SolveResult:
    fs = as_function_list(fs, g.n)
    pairs = check_pairs(g, S)
    thr = cfg.threshold
    counter = QueryCounter()
    zero = ImpactVector.zeros(g.n)
    x = zero
    res = SolveResult(x)
    P: list[Path] = []
    known: set[Path] = set()
    while True:
        wts = node_weights(fs, x.tolist())
        todo = unsatisfied_pairs(g, wts, pairs, thr)
        if not todo:
            break
        if res.rounds >= cfg.max_rounds:
            raise CplError(f"full set interdiction: {len(todo)} pairs still "
                           f"unsatisfied after {cfg.max_rounds} rounds")
        fresh = [p for p in collect_paths(g, wts, todo, cfg.k, thr) if p not in known]
        if not fresh:
            raise CplError("full set interdiction collected no new path")
        known.update(fresh)
        P.extend(fresh)
        res.round_starts.append(x)
        req = TbRequest(P, zero, cfg.T, cfg.eps, fs, cfg.eps_sched)
        x = solve_tb(req, cfg.tb, cfg.tb_config, counter).x
        res.rounds += 1
        res.per_round_paths.append(len(P))
        res.path_sets.append(fresh)
    res.x = x
    res.final_paths = list(P)
    res.queries = counter.total
    return res


ALGORITHMS = ("II-TE", "II-JSG", "FI-TE", "FI-JSG")


def solve(g: Graph, fs, S, cfg: CplConfig, cpl: str = "ii") -> SolveResult:
    cpl = cpl.lower()
    if cpl == "ii":
        return incremental_interdiction(g, fs, S, cfg)
    if cpl == "fi":
        return full_set_interdiction(g, fs, S, cfg)
    raise ValueError(f"unknown path listing method {cpl!r}")


def solve_combo(g: Graph, fs, S, T: float, eps: float, combo: str, k: int = 20,
                eps_sched: float = 0.1, tb_config: TbConfig | None = None,
                max_rounds: int = 500) -> SolveResult:
    """Run one of ``II-TE``, ``II-JSG``, ``FI-TE``, ``FI-JSG``."""
    cpl, _, tb = combo.upper().partition("-")
    cfg = CplConfig(T=T, eps=eps, k=k, tb=tb.lower(), eps_sched=eps_sched,
                    max_rounds=max_rounds, tb_config=tb_config or TbConfig())
    return solve(g, fs, S, cfg, cpl)
