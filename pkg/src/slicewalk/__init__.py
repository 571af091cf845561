"""Sampling and approximate counting for hardcore-model slices on regular bipartite graphs."""

__version__ = "0.1.0"

from .graphs import (BipartiteRegularGraph, RegularGraph, RejectionBudgetError,
                     bipartite_complement, closed_neighborhood, common_neighbors,
                     complement_regular, gen_bipartite_regular, gen_regular,
                     induced_subgraph, load_graph, pruned_graph, save_graph)
from .slices import (LinkOperator, NeighborGraph, OneSidedSlice, RegularSlice,
                     SliceError, TwoSidedSlice, enumerate_facets, exact_distribution,
                     link, local_walk_exact, neighbor_graph, one_sided_link_walk_closed_form,
                     one_sided_log_weight, one_sided_weight, regular_link_walk_closed_form,
                     two_sided_link_walk_closed_form)
from .spectra import (SpectrumSummary, adjacency_matrix, complement_interlacing_check,
                      eigen_summary, iterative_summary, psd_dominance, spectrum)
from .walks import (ChainConfig, ChainState, MixingReport, down_up_step,
                    exact_transition_matrix, greedy_initial_state, run_chain,
                    spectral_gap, tv_distance)

__all__ = [name for name in dir() if not name.startswith("_")]
