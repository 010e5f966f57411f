"""Threshold blocking: push every path of a set to length >= T(1 - eps).

Two greedy algorithms share one univariate primitive.  For a node ``v`` at
impact ``w`` and the paths through it with remaining gaps ``g_i = T - len_i``,
adding ``x`` raises the capped total by

    r(x) = sum_i min(delta(x), g_i),   delta(x) = f_v(w + x) - f_v(w).

``r`` is concave and piecewise linear in ``delta``; its breakpoints are the
increments at which individual paths saturate.  Together with the kinks of
``f_v`` these split ``x`` into pieces on which ``r`` is a single analytic
expression, which makes both the threshold search of threshold expansion and
the ratio maximisation of jump-start greedy exact up to a bisection tolerance.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .weights import DEFAULT_X_MAX, TAU_CMP, ImpactVector, WeightFunction, as_function_list

_RATIO_TIE = 1e-9
_ROUND = 1e-12


class TbError(RuntimeError):
    """A blocking run could not make progress."""


@dataclass
class TbConfig:
    max_sweeps: int = 200
    fallback_M: float = 1e6
    x_max: float = DEFAULT_X_MAX
    tau_cmp: float = TAU_CMP
    x_tol_rel: float = 1e-6
    # zero-trap threshold, relative to the node's saturation increment
    x_zero_tol_rel: float = 1e-9
    sigma_tol_rel: float = 1e-6
    # jump-start lower bound: recompute every greedy step, and divide by the
    # number of nodes on surviving paths instead of |V|
    beta_per_round: bool = True
    beta_over_path_nodes: bool = True
    max_greedy_steps: int = 1_000_000


class QueryCounter:
    """Counts univariate searches (the runtime metric)."""

    def __init__(self):
        self.total = 0

    def tick(self, k: int = 1) -> None:
        self.total += k


@dataclass
class TbRequest:
    paths: Sequence[Sequence[int]]
    x_base: Sequence[float]
    T: float
    eps: float
    fs: Sequence[WeightFunction]
    eps_sched: float = 0.1

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not 0 < self.eps_sched < 1:
            raise ValueError("eps_sched must lie in (0, 1)")


@dataclass
class TbResult:
    s: ImpactVector
    x: ImpactVector  # x_base + s, as used internally
    queries: int
    updates: int
    iterations: int
    m_values: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    forced: int = 0


# ---------------------------------------------------------------------------
# univariate primitive


def _lift(f: WeightFunction, w: float, b: float, target: float) -> float:
    """Nudge ``b`` up by ulps until ``f(w + b) >= target``."""
    for _ in range(64):
        if f(w + b) >= target:
            return b
        b = math.nextafter(b, math.inf)
    return b


class _Gain:
    """``r(x)`` for one node given the gaps of the paths through it."""

    __slots__ = ("f", "w", "fw", "gaps", "prefix", "m", "hi", "_points", "_free", "_beta")

    def __init__(self, f: WeightFunction, w: float, gaps: Sequence[float], x_max: float):
        self.f = f
        self.w = w
        self.fw = fw = f(w)
        gaps = sorted(gaps)
        self.gaps = gaps
        prefix = [0.0]
        for g in gaps:
            prefix.append(prefix[-1] + g)
        self.prefix = prefix
        self.m = len(gaps)
        self._free = None
        self._beta = None
        self._points = None
        if not gaps or w >= x_max:
            self.hi = 0.0
            self._points = []
            return
        hi = min(f.reach(fw + gaps[-1]) - w, x_max - w)
        if hi < x_max - w:
            hi = _lift(f, w, hi, fw + gaps[-1])
        self.hi = hi

    def _saturations(self):
        """Increments at which the paths saturate, ascending, below ``hi``."""
        f, w, fw, hi = self.f, self.w, self.fw, self.hi
        last = None
        for g in self.gaps[:-1]:
            if g == last:
                continue
            last = g
            b = f.reach(fw + g) - w
            if b >= hi:
                return
            if b > 0:
                yield _lift(f, w, b, fw + g)

    @property
    def points(self) -> list[float]:
        """Piece endpoints in ``(0, hi]``: saturations, kinks of f, and hi."""
        if self._points is None:
            f, w, hi = self.f, self.w, self.hi
            pts = set(self._saturations())
            pts.add(hi)
            for k in f.kinks(w, w + hi):
                b = k - w
                if 0 < b < hi:
                    pts.add(_lift(f, w, b, f(k)))
            self._points = sorted(p for p in pts if 0 < p <= hi)
        return self._points

    def r(self, x: float) -> float:
        delta = self.f(self.w + x) - self.fw
        i = bisect_right(self.gaps, delta)
        return self.prefix[i] + delta * (self.m - i)

    def _meets(self, x: float, M: float) -> bool:
        r = self.r(x)
        return r >= M * x - _ROUND * max(r, M * x)

    def max_x_with_ratio(self, M: float, xtol: float) -> float:
        """Largest ``x`` in ``(0, hi]`` with ``r(x) >= M x``, else 0."""
        hi = self.hi
        if hi <= 0:
            return 0.0
        if self._meets(hi, M):
            return hi
        if self.f.shape == "concave":
            # r concave with r(0) = 0, so {r >= Mx} is an interval [0, root]
            if self.m * self.f.slope(self.w) <= M * (1 + _ROUND):
                return 0.0
            lo, up = 0.0, hi
        else:
            # r - Mx is convex or linear on every piece: scan pieces from the right
            pts = self.points
            i = len(pts) - 2
            while i >= 0 and not self._meets(pts[i], M):
                i -= 1
            if i < 0:
                return 0.0
            lo, up = pts[i], pts[i + 1]
        while up - lo > xtol:
            mid = 0.5 * (lo + up)
            if self._meets(mid, M):
                lo = mid
            else:
                up = mid
        return lo

    def zero_tol(self, rel: float) -> float:
        return rel * self.hi

    def argmax_ratio(self, lower: float, floor: float) -> tuple[float, float]:
        """Maximiser of ``r(x)/x`` over ``[lower, hi]``, probing at ``floor``
        when ``lower`` is 0.

        Ties go to the largest maximiser.  All candidate maxima lie on piece
        endpoints: the ratio is nonincreasing for concave families and
        piecewise quasi-convex otherwise.
        """
        hi = self.hi
        if hi <= 0:
            return 0.0, 0.0
        lo = lower if lower > 0 else floor
        if lo >= hi:
            return hi, self.r(hi) / hi
        best_x, best = lo, self.r(lo) / lo
        if self.f.shape == "concave":
            # ratio nonincreasing: only ties with the left end can matter
            for p in self._saturations_and_hi():
                if p <= lo:
                    continue
                ratio = self.r(p) / p
                if ratio < best * (1 - _RATIO_TIE):
                    break
                best_x, best = p, max(best, ratio)
            return best_x, best
        for p in self.points:
            if p <= lo:
                continue
            ratio = self.r(p) / p
            if ratio >= best * (1 - _RATIO_TIE):
                best_x, best = p, max(best, ratio)
        return best_x, best

    def _saturations_and_hi(self):
        yield from self._saturations()
        yield self.hi

    def sup_ratio(self) -> float:
        if self.hi <= 0:
            return 0.0
        if self.f.shape == "concave":
            return self.m * self.f.slope(self.w)
        return max(self.r(p) / p for p in self.points)


def _gain_for(paths, w, v, fs, T, x_max) -> _Gain:
    gaps = []
    for p in paths:
        if v in p:
            total = math.fsum(fs[u](float(w[u])) for u in p)
            if total < T:
                gaps.append(T - total)
    return _Gain(fs[v], float(w[v]), gaps, x_max)


def _entries(x) -> list[float]:
    return x.tolist() if isinstance(x, ImpactVector) else [float(a) for a in x]


def init_M(P: Sequence[Sequence[int]], fs, T: float, fallback_M: float = 1e6,
           x_max: float = DEFAULT_X_MAX) -> float:
    """Initial gain-per-cost requirement for threshold expansion.

    ``|P|`` times the largest slope any node on ``P`` can have below ``T``
    when all those functions are differentiable, else ``fallback_M``.
    """
    if not P:
        raise ValueError("path set must be nonempty")
    nodes = {v for p in P for v in p}
    if isinstance(fs, WeightFunction):
        funcs = [fs]
    else:
        funcs = [fs[v] for v in nodes]
    slopes = [f.max_slope(T, x_max) for f in funcs]
    if any(s is None for s in slopes):
        return float(fallback_M)
    return len(P) * max(slopes)


def max_x_with_ratio(P, w, v: int, M: float, fs, T: float,
                     counter: QueryCounter | None = None,
                     config: TbConfig | None = None) -> float:
    """Largest ``x`` with ``r(x)/x >= M`` for node ``v`` (one query)."""
    if M <= 0:
        raise ValueError("M must be positive")
    cfg = config or TbConfig()
    w = _entries(w)
    fs = as_function_list(fs, len(w))
    if counter is not None:
        counter.tick()
    gain = _gain_for(P, w, v, fs, T, cfg.x_max)
    return gain.max_x_with_ratio(M, cfg.x_tol_rel * fs[v].x_cap(T, cfg.x_max))


def argmax_ratio(P, w, v: int, lower_bound: float, fs, T: float,
                 counter: QueryCounter | None = None,
                 config: TbConfig | None = None) -> tuple[float, float]:
    """``(x, r(x)/x)`` maximising the ratio over ``x >= lower_bound`` (one query).

    With ``lower_bound == 0`` a maximiser below the zero tolerance is
    reported as ``x = 0``.
    """
    if lower_bound < 0:
        raise ValueError("lower bound must be nonnegative")
    cfg = config or TbConfig()
    w = _entries(w)
    fs = as_function_list(fs, len(w))
    if counter is not None:
        counter.tick()
    gain = _gain_for(P, w, v, fs, T, cfg.x_max)
    ztol = gain.zero_tol(cfg.x_zero_tol_rel)
    x, ratio = gain.argmax_ratio(lower_bound, ztol)
    if lower_bound == 0 and x <= ztol:
        return 0.0, ratio
    return x, ratio


class _PathArrays:
    """Paths flattened for vectorised length sums."""

    def __init__(self, paths: Sequence[Sequence[int]]):
        self.nodes = sorted({v for p in paths for v in p})
        local = {v: i for i, v in enumerate(self.nodes)}
        self.flat = np.fromiter((local[v] for p in paths for v in p), dtype=np.intp)
        self.lengths = np.array([len(p) for p in paths])
        self.offsets = np.cumsum(self.lengths) - self.lengths

    def sigma(self, cur, fs, T: float, tol_rel: float, x_max: float, mask=None) -> float:
        """Largest uniform extra impact keeping some (masked) path shorter than ``T``."""
        if mask is None:
            nodes = self.nodes
        else:
            used = np.unique(self.flat[np.repeat(mask, self.lengths)])
            nodes = [self.nodes[j] for j in used]
        base = np.array([cur[v] for v in self.nodes])
        funcs = [fs[v] for v in self.nodes]
        shared = funcs[0] if all(f is funcs[0] for f in funcs) else None

        def some_short(sigma):
            z = base + sigma
            if shared is not None:
                wts = shared.values(z)
            else:
                wts = np.array([f(a) for f, a in zip(funcs, z.tolist())])
            sums = np.add.reduceat(wts[self.flat], self.offsets)
            if mask is not None:
                sums = sums[mask]
            return bool(np.min(sums) < T)

        if not some_short(0.0):
            raise ValueError("every path already has length >= T")
        hi = max(fs[v].x_cap(T, x_max) for v in nodes)
        if some_short(hi):
            return hi
        lo = 0.0
        tol = tol_rel * hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if some_short(mid):
                lo = mid
            else:
                hi = mid
        return lo


def estimate_beta(P, x_base, fs, T: float, n: int,
                  counter: QueryCounter | None = None,
                  config: TbConfig | None = None) -> float:
    """Jump-start amount ``sigma / n``.

    ``sigma`` is the largest uniform impact (found by bisection) under which
    some path of ``P`` stays shorter than ``T``; no blocking vector can then
    be cheaper than ``sigma``.  Counts as one query.
    """
    cfg = config or TbConfig()
    cur = _entries(x_base)
    fs = as_function_list(fs, len(cur))
    paths = [tuple(p) for p in P]
    if not paths:
        raise ValueError("path set must be nonempty")
    if counter is not None:
        counter.tick()
    sigma = _PathArrays(paths).sigma(cur, fs, T, cfg.sigma_tol_rel, cfg.x_max)
    return sigma / n


# ---------------------------------------------------------------------------
# shared bookkeeping


class _Blocking:
    def __init__(self, req: TbRequest, cfg: TbConfig):
        base = _entries(req.x_base)
        self.n = n = len(base)
        self.fs = fs = as_function_list(req.fs, n)
        self.T = req.T
        self.cfg = cfg
        self.thr = req.T * (1 - req.eps) * (1 - cfg.tau_cmp)
        self.base = base
        self.cur = list(base)
        self.fcur = [f(x) for f, x in zip(fs, base)]
        self.paths = [tuple(p) for p in req.paths]
        self.sums = [math.fsum(self.fcur[v] for v in p) for p in self.paths]
        self.active: set[int] = set()
        self.through: dict[int, set[int]] = {}
        for i, total in enumerate(self.sums):
            if total < self.thr:
                self.active.add(i)
                for v in self.paths[i]:
                    self.through.setdefault(v, set()).add(i)
        self._gains: dict[int, _Gain] = {}
        self._arrays = None
        self._xcap = {}

    def nodes(self) -> list[int]:
        return sorted(self.through)

    def xcap(self, v: int) -> float:
        c = self._xcap.get(v)
        if c is None:
            c = self._xcap[v] = self.fs[v].x_cap(self.T, self.cfg.x_max)
        return c

    def gain(self, v: int) -> _Gain:
        g = self._gains.get(v)
        if g is None:
            T, sums = self.T, self.sums
            g = _Gain(self.fs[v], self.cur[v], [T - sums[i] for i in self.through[v]],
                      self.cfg.x_max)
            self._gains[v] = g
        return g

    def add(self, v: int, x: float) -> None:
        new = self.cur[v] + x
        self.cur[v] = new
        fnew = self.fs[v](new)
        delta = fnew - self.fcur[v]
        self.fcur[v] = fnew
        touched = set()
        for i in list(self.through.get(v, ())):
            path = self.paths[i]
            touched.update(path)
            self.sums[i] += delta
            if self.sums[i] >= self.thr:
                fresh = math.fsum(self.fcur[u] for u in path)
                self.sums[i] = fresh
                if fresh >= self.thr:
                    self._drop(i)
        for u in touched:
            self._gains.pop(u, None)

    def _drop(self, i: int) -> None:
        self.active.discard(i)
        for u in self.paths[i]:
            s = self.through.get(u)
            if s is not None:
                s.discard(i)
                if not s:
                    del self.through[u]

    def beta(self, counter: QueryCounter) -> float:
        counter.tick()
        if self._arrays is None:
            self._arrays = _PathArrays(self.paths)
        mask = np.zeros(len(self.paths), dtype=bool)
        mask[list(self.active)] = True
        sigma = self._arrays.sigma(self.cur, self.fs, self.T, self.cfg.sigma_tol_rel,
                                   self.cfg.x_max, mask)
        n = len(self.through) if self.cfg.beta_over_path_nodes else self.n
        return sigma / n

    def force(self) -> None:
        """Saturate the shortest remaining path at its busiest node."""
        i = min(self.active, key=lambda j: (self.sums[j], self.paths[j]))
        ranked = sorted(self.paths[i], key=lambda u: (-len(self.through.get(u, ())), u))
        for u in ranked:
            room = self.xcap(u) - self.cur[u]
            if room > 0:
                self.add(u, room)
                return
        raise TbError(f"path {self.paths[i]} cannot reach the threshold")

    def result(self, counter_start: int, counter: QueryCounter, **kw) -> TbResult:
        s = []
        for b, c in zip(self.base, self.cur):
            d = max(c - b, 0.0)
            while b + d < c:
                d = math.nextafter(d, math.inf)
            s.append(d)
        return TbResult(s=ImpactVector(s), x=ImpactVector(self.cur),
                        queries=counter.total - counter_start, **kw)


# ---------------------------------------------------------------------------
# algorithms


def threshold_expansion(req: TbRequest, config: TbConfig | None = None,
                        counter: QueryCounter | None = None) -> TbResult:
    """Round-robin over nodes adding the largest amount whose gain per unit
    is at least ``M``; ``M`` shrinks by ``(1 - eps_sched)`` after each sweep.

    Nodes on no remaining path have ``r = 0`` and are skipped without a
    query.  Sweeps in which no node can qualify (``M`` above every node's
    supremum ratio) are fast-forwarded; they are still counted, one query per
    node, exactly as the literal loop would.  After ``max_sweeps`` sweeps the
    shortest remaining path is saturated outright until none remain.
    """
    cfg = config or TbConfig()
    counter = counter if counter is not None else QueryCounter()
    start = counter.total
    st = _Blocking(req, cfg)
    if not st.active:
        return st.result(start, counter, updates=0, iterations=0)
    shrink = 1.0 - req.eps_sched
    M = init_M([st.paths[i] for i in sorted(st.active)], st.fs, req.T,
               cfg.fallback_M, cfg.x_max)
    m_values = [M]
    sweeps = updates = forced = 0
    while st.active:
        if sweeps >= cfg.max_sweeps:
            st.force()
            forced += 1
            updates += 1
            continue
        nodes = st.nodes()
        sup = max(st.gain(v).sup_ratio() for v in nodes)
        if M > sup * (1 + _RATIO_TIE):
            skipped = 0
            while M > sup * (1 + _RATIO_TIE) and sweeps < cfg.max_sweeps:
                M *= shrink
                m_values.append(M)
                sweeps += 1
                skipped += 1
            counter.tick(skipped * len(nodes))
            continue
        for v in nodes:
            if not st.active:
                break
            if v not in st.through:
                continue
            counter.tick()
            x = st.gain(v).max_x_with_ratio(M, cfg.x_tol_rel * st.xcap(v))
            if x > 0:
                st.add(v, x)
                updates += 1
        sweeps += 1
        if st.active:
            M *= shrink
            m_values.append(M)
    return st.result(start, counter, updates=updates, iterations=sweeps,
                     m_values=m_values, forced=forced)


def jump_start_greedy(req: TbRequest, config: TbConfig | None = None,
                      counter: QueryCounter | None = None) -> TbResult:
    """Repeatedly add the single point impact with the best gain per unit.

    A node whose best amount is (numerically) zero is re-queried with the
    lower bound ``beta`` from :func:`estimate_beta`.
    """
    cfg = config or TbConfig()
    counter = counter if counter is not None else QueryCounter()
    start = counter.total
    st = _Blocking(req, cfg)
    steps = 0
    beta = None
    betas: list[float] = []
    while st.active:
        steps += 1
        if steps > cfg.max_greedy_steps:
            raise TbError(f"jump-start greedy exceeded {cfg.max_greedy_steps} steps")
        if cfg.beta_per_round:
            beta = None
        best_v, best_x, best_ratio = -1, 0.0, 0.0
        for v in st.nodes():
            g = st.gain(v)
            ztol = g.zero_tol(cfg.x_zero_tol_rel)
            counter.tick()
            if g._free is None:
                g._free = g.argmax_ratio(0.0, ztol)
            x, ratio = g._free
            if x <= ztol:
                if beta is None:
                    beta = st.beta(counter)
                    betas.append(beta)
                counter.tick()
                if g._beta is None or g._beta[0] != beta:
                    g._beta = (beta, g.argmax_ratio(beta, ztol))
                x, ratio = g._beta[1]
            if ratio > best_ratio:
                best_v, best_x, best_ratio = v, x, ratio
        if best_v < 0 or best_x <= 0:
            raise TbError("no node improves any remaining path")
        st.add(best_v, best_x)
    return st.result(start, counter, updates=steps, iterations=steps, betas=betas)


def solve_tb(req: TbRequest, method: str = "te", config: TbConfig | None = None,
             counter: QueryCounter | None = None) -> TbResult:
    method = method.lower()
    if method == "te":
        return threshold_expansion(req, config, counter)
    if method == "jsg":
        return jump_start_greedy(req, config, counter)
    raise ValueError(f"unknown blocking method {method!r}")
