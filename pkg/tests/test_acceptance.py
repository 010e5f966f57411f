"""End-to-end acceptance checks.

Desk-scale instances are 200-node BFS subgraphs of the bundled AS-like
topology.  Each test registers a one-line verdict printed in the terminal
summary.
"""

import csv
import math
import time
from functools import lru_cache

import pytest
from hypothesis import given, settings

from clpi.baselines import OraclePrecondition, cut_baseline, discrete_baseline, exact_tiny
from clpi.cli import main
from clpi.cpl import ALGORITHMS, is_eps_feasible, solve_combo
from clpi.graph import Graph, k_shortest_paths, load_edge_list, node_weighted_distance
from clpi.harness import extract_subgraph, sample_pairs
from clpi.weights import (ImpactVector, WeightFunction, evaluate, marginal_gain,
                          parse_function_spec, path_length, vec_add, vec_minus, x_cap)
from test_weights import gain_instances

pytestmark = pytest.mark.acceptance

EPS = 0.1
DESK_PAIRS = 10
DESK_K = 3          # few paths per round so that rounds, not k, drive collection
SUITE_FAMILIES = ("concave:1:1", "convex:1:1", "linear:1:1", "step:1:1")
SUITE_SEEDS = range(50)
SUITE_PAIRS = 5
SUITE_K = 20
SUITE_T = 10.0


@pytest.fixture(scope="module")
def subgraph(as_graph):
    @lru_cache(maxsize=None)
    def get(seed):
        return extract_subgraph(as_graph, seed, 200)
    return get


@pytest.fixture(scope="module")
def desk(subgraph):
    """Concave benchmark: one subgraph, ten pairs, solved at most once per cell."""
    f = parse_function_spec("concave:1")

    @lru_cache(maxsize=None)
    def run(seed, T, eps, combo):
        g = subgraph(seed)
        return solve_combo(g, f, sample_pairs(g, DESK_PAIRS, seed), T, eps, combo, DESK_K)
    return run


@pytest.fixture(scope="module")
def suite(subgraph):
    """Every (subgraph, family, combo) cell of the feasibility suite."""
    start = time.perf_counter()
    cells = []
    for seed in SUITE_SEEDS:
        g = subgraph(seed)
        S = sample_pairs(g, SUITE_PAIRS, seed)
        for fam in SUITE_FAMILIES:
            f = parse_function_spec(fam)
            for combo in ALGORITHMS:
                res = solve_combo(g, f, S, SUITE_T, EPS, combo, SUITE_K)
                cells.append((seed, fam, combo, g, f, S, res))
    return cells, time.perf_counter() - start


def test_c01_feasibility_suite(suite, report):
    cells, elapsed = suite
    bad = [(seed, fam, combo) for seed, fam, combo, g, f, S, res in cells
           if not is_eps_feasible(g, f, res.x, S, SUITE_T, EPS)]
    ok = not bad and len(cells) == 50 * 4 * 4
    report(1, ok, f"{len(cells) - len(bad)}/{len(cells)} cells eps-feasible in {elapsed:.0f}s")
    assert ok, bad[:5]


def random_tiny(seed):
    import random
    rng = random.Random(seed)
    n = rng.randint(4, 8)
    cand = [(u, v) for u in range(n) for v in range(n) if u != v]
    arcs = rng.sample(cand, rng.randint(n, min(len(cand), 2 * n)))
    return Graph.from_edges(n, arcs, undirected=False), rng.sample(cand, 2)


def test_c02_oracle_and_bound(report):
    f = WeightFunction("linear", 1.0)
    T = 10.0
    start = time.perf_counter()
    done, seed, failures, worst = 0, 0, [], 0.0
    while done < 30:
        g, S = random_tiny(seed)
        seed += 1
        try:
            opt = exact_tiny(g, f, S, T, 1.0).norm()
        except OraclePrecondition:
            continue
        if opt == 0:
            continue
        done += 1
        for combo in ALGORITHMS:
            res = solve_combo(g, f, S, T, EPS, combo)
            if res.norm < opt - 1e-9:
                failures.append((seed - 1, combo, "below optimum"))
            if combo == "FI-TE":
                bound = (math.log(len(res.final_paths) / EPS) + 1) / (1 - EPS)
                worst = max(worst, res.norm / opt / bound)
                if res.norm > bound * opt + 1e-9:
                    failures.append((seed - 1, combo, "above bound"))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 120
    report(2, ok, f"30 graphs, all combos >= optimum, FI-TE at {worst:.2f} of bound, "
                  f"{elapsed:.1f}s")
    assert ok, failures


def test_c03_concave_dominance(desk, subgraph, report):
    g = subgraph(0)
    S = sample_pairs(g, DESK_PAIRS, 0)
    f = parse_function_spec("concave:1")
    fi = desk(0, 10.0, EPS, "FI-JSG").norm
    cut = cut_baseline(g, f, S, 10.0, EPS, DESK_K).norm
    disc = discrete_baseline(g, f, S, 10.0, EPS, DESK_K).norm
    ok = cut >= 10 * fi and disc >= 10 * fi
    report(3, ok, f"CUT/FI-JSG = {cut / fi:.0f}x, DISCRETE/FI-JSG = {disc / fi:.0f}x")
    assert ok


def test_c04_stored_paths(desk, suite, report):
    cap = DESK_PAIRS * DESK_K
    over = []
    for combo in ("II-TE", "II-JSG"):
        res = desk(0, 10.0, EPS, combo)
        if max(res.per_round_paths) > cap:
            over.append(("desk", combo))
    for seed, fam, combo, g, f, S, res in suite[0]:
        if combo.startswith("II") and res.per_round_paths \
                and max(res.per_round_paths) > len(S) * SUITE_K:
            over.append((seed, fam, combo))
    fi_ok = True
    detail = []
    for combo in ("FI-TE", "FI-JSG"):
        counts = desk(0, 10.0, EPS, combo).per_round_paths
        grows = all(a <= b for a, b in zip(counts, counts[1:]))
        fi_ok &= grows and max(counts[:3]) > cap
        detail.append(f"{combo} {counts[:3]}")
    ok = not over and fi_ok
    report(4, ok, f"II per round <= |S|k={cap}; " + ", ".join(detail))
    assert ok, over


def test_c05_ii_disjoint(desk, suite, report):
    checked, bad = 0, []
    runs = [(("desk", c), desk(0, 10.0, EPS, c)) for c in ("II-TE", "II-JSG")]
    runs += [((seed, fam, combo), res) for seed, fam, combo, g, f, S, res in suite[0]
             if combo.startswith("II")]
    for key, res in runs:
        seen = set()
        for L in res.path_sets:
            if seen & set(L) or len(set(L)) != len(L):
                bad.append(key)
            seen |= set(L)
        checked += 1
    report(5, not bad, f"{checked} II runs with pairwise disjoint round path sets")
    assert not bad, bad[:5]


def test_c06_query_ordering(desk, report):
    start = time.perf_counter()
    totals = {}
    cells = []
    for seed in range(4):
        for T in (6.0, 10.0):
            for tb in ("TE", "JSG"):
                ii = desk(seed, T, EPS, "II-" + tb).queries
                fi = desk(seed, T, EPS, "FI-" + tb).queries
                totals.setdefault(tb, [0, 0])
                totals[tb][0] += ii
                totals[tb][1] += fi
                cells.append(f"{fi / ii:.1f}")
    ratios = {tb: fi / ii for tb, (ii, fi) in totals.items()}
    elapsed = time.perf_counter() - start
    ok = all(r >= 5 for r in ratios.values())
    report(6, ok, f"sweep totals FI/II: TE {ratios['TE']:.2f}x, JSG {ratios['JSG']:.2f}x "
                  f"(cells {' '.join(cells)}), {elapsed:.0f}s")
    assert ok


def test_c07_te_insensitive_to_T(subgraph, report):
    g = subgraph(0)
    S = sample_pairs(g, DESK_PAIRS, 0)
    f = parse_function_spec("linear:1")
    q = [solve_combo(g, f, S, T, EPS, "II-TE", DESK_K).queries for T in (20, 40, 60, 80, 100)]
    spread = (max(q) - min(q)) / min(q)
    ok = spread <= 0.25
    report(7, ok, f"II-TE queries {q}, spread {spread:.3f}")
    assert ok


def test_c08_eps_tradeoff(desk, report):
    bad, detail = [], []
    for combo in ALGORITHMS:
        tight, loose = desk(0, 10.0, 0.05, combo), desk(0, 10.0, 0.5, combo)
        if loose.norm > tight.norm:
            bad.append((combo, "norm"))
        if combo.startswith("II"):
            if loose.queries > 1.1 * tight.queries:
                bad.append((combo, "queries"))
            detail.append(f"{combo} q {tight.queries}->{loose.queries}")
    report(8, not bad, "norm(0.5) <= norm(0.05) for all combos; " + ", ".join(detail))
    assert not bad, bad


def strip_wall(path):
    with open(path, newline="") as fh:
        return [{k: v for k, v in row.items() if k != "wall_ms"} for row in csv.DictReader(fh)]


def test_c09_determinism(tmp_path, as_graph_path, report):
    spec = tmp_path / "sweep.cfg"
    spec.write_text(f"graph = {as_graph_path}\nsubgraph_size = 100\nsubgraph_seed = 2\n"
                    "num_pairs = 5\nseed = 2\nfunction = concave:1\nT = 6, 10\n"
                    "epsilon = 0.1, 0.3\nk = 3\n"
                    "algorithms = II-TE, II-JSG, FI-TE, FI-JSG, CUT, DISCRETE\n")
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [main(["sweep", "--spec", str(spec), "--out", str(o)]) for o in outs]
    rounds = [(tmp_path / f"{o.stem}.rounds.csv").read_bytes() for o in outs]
    first, second = strip_wall(outs[0]), strip_wall(outs[1])
    ok = codes == [0, 0] and first == second and rounds[0] == rounds[1] and len(first) == 24
    report(9, ok, f"two sweeps of {len(first)} cells identical apart from wall_ms")
    assert ok


TRIVIAL_CHECKS = [
    lambda: load_edge_list(b"0 1\n1 2", True).n == 3,
    lambda: load_edge_list(b"0 1\n1 2", True).m == 4,
    lambda: load_edge_list(b"# c\n5 9", True).n == 2,
    lambda: load_edge_list(b"# c\n5 9", True).m == 2,
    lambda: node_weighted_distance(Graph.from_edges(3, [(0, 1), (1, 2)]), [1, 1, 1], 0, 2, 10) == 3,
    lambda: node_weighted_distance(Graph.from_edges(3, [(0, 1), (1, 2)]), [0, 0, 0], 0, 2, 10) == 0,
    lambda: node_weighted_distance(Graph.from_edges(3, [(0, 1)]), [1, 1, 1], 0, 2, 7) == 7,
    lambda: k_shortest_paths(Graph.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]),
                             [1] * 4, 0, 3, 2) == [(0, 1, 3), (0, 2, 3)],
    lambda: k_shortest_paths(Graph.from_edges(3, [(0, 1), (1, 2)]), [1] * 3, 0, 2, 5) == [(0, 1, 2)],
    lambda: evaluate(WeightFunction("linear", 1.0), 2.5) == 2.5,
    lambda: evaluate(WeightFunction("step", 1.0), 2.9) == 2,
    lambda: evaluate(WeightFunction("concave", 2.0), 0.0) == 0,
    lambda: vec_add(ImpactVector([1, 0]), ImpactVector([0, 2])) == ImpactVector([1, 2]),
    lambda: vec_add(ImpactVector([0.5, 3]), ImpactVector.zeros(2)) == ImpactVector([0.5, 3]),
    lambda: vec_add(ImpactVector([1, 2]), ImpactVector([3, 4])).norm() == 10,
    lambda: vec_minus(ImpactVector([3, 1]), ImpactVector([1, 2])) == ImpactVector([2, 0]),
    lambda: vec_minus(ImpactVector([0.5, 3]), ImpactVector([0.5, 3])) == ImpactVector.zeros(2),
    lambda: vec_minus(ImpactVector.zeros(2), ImpactVector([0.5, 3])) == ImpactVector.zeros(2),
    lambda: path_length((0, 1, 2), ImpactVector.zeros(3), WeightFunction("linear", 1.0), 10) == 0,
    lambda: path_length((0, 1, 2), ImpactVector([5, 5, 5]), WeightFunction("linear", 1.0), 10) == 10,
    lambda: path_length((0, 1), ImpactVector([2, 3]), WeightFunction("convex", 1.0), 100) == 13,
    lambda: marginal_gain([(0, 1, 2)], [0] * 4, 3, 5.0, WeightFunction("linear", 1.0), 10) == 0,
    lambda: marginal_gain([(0, 1, 2)], [0] * 4, 1, 4.0, WeightFunction("linear", 1.0), 10) == 4,
    lambda: marginal_gain([(0, 1, 2)], [0] * 4, 1, 20.0, WeightFunction("linear", 1.0), 10) == 10,
    lambda: x_cap(WeightFunction("linear", 1.0), 10) == 10,
    lambda: x_cap(WeightFunction("convex", 1.0), 9) == 3,
    lambda: x_cap(WeightFunction("concave", 1.0), 50, 1e6) == 1e6,
]


@settings(max_examples=10_000, deadline=None, database=None)
@given(gain_instances())
def gain_monotone(inst):
    f, paths, w, _, v, a, b, T = inst
    assert f(a) <= f(b)
    assert marginal_gain(paths, w, v, a, f, T) <= marginal_gain(paths, w, v, b, f, T) + 1e-9


@settings(max_examples=10_000, deadline=None, database=None)
@given(gain_instances())
def gain_base_dominance(inst):
    f, paths, w, extra, v, a, _, T = inst
    bigger = [x + e for x, e in zip(w, extra)]
    bigger[v] = w[v]
    assert marginal_gain(paths, bigger, v, a, f, T) <= marginal_gain(paths, w, v, a, f, T) + 1e-9


def test_c10_unit_properties(report):
    failed = [i for i, check in enumerate(TRIVIAL_CHECKS) if not check()]
    props = []
    for prop in (gain_monotone, gain_base_dominance):
        try:
            prop()
        except AssertionError as exc:
            props.append(f"{prop.__name__}: {exc}")
    ok = not failed and not props
    report(10, ok, f"{len(TRIVIAL_CHECKS) - len(failed)}/{len(TRIVIAL_CHECKS)} examples exact; "
                   f"monotonicity and base dominance on 10000 samples each")
    assert ok, (failed, props)
