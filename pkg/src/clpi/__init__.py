"""Length-bounded path interdiction with continuous node impacts."""

from .baselines import cut_baseline, discrete_baseline, exact_linear_lp, exact_tiny
from .cpl import (CplConfig, SolveResult, full_set_interdiction, incremental_interdiction,
                  is_eps_feasible, solve, solve_combo)
from .graph import (Graph, k_shortest_paths, load_edge_list, node_weighted_distance,
                    read_edge_list)
from .harness import (ExperimentSpec, RunRecord, emit_csv, extract_subgraph, run_experiment,
                      sample_pairs)
from .tb import (QueryCounter, TbConfig, TbRequest, TbResult, jump_start_greedy,
                 threshold_expansion)
from .weights import (ImpactVector, WeightFunction, marginal_gain, parse_function_spec,
                      path_length, vec_add, vec_minus)

__version__ = "0.1.0"
