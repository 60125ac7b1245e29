"""Core-periphery hypergraph modeling.

A library and batch CLI for a random hypergraph model with truncated-
exponential node ranks and power-form edge probabilities: exact
linear-time likelihood via sufficient statistics, constrained MLE/MAP
(with optional learnable ranks from features), exact ball-dropping
sampling, core-size thresholds, layer model selection, and
negative-sampling baselines.
"""

__version__ = "0.1.0"

from .hypergraph import (FeatureMatrix, Hypergraph, HypergraphError, ParseError,
                         connected_components, degree_threshold_filter,
                         degree_vector, dump_edge_list, k_core_filter,
                         largest_connected_component, load_edge_list,
                         load_features, load_hyperedges, load_simplicial,
                         normalize_features, project_to_graph)
from .partition import (BinomialTable, LayerAssignment, LayerConfig,
                        PartitionError, PartitionStats, RankVector,
                        assign_layers, block_capacity, count_complement,
                        count_positive)
from .model import (DEFAULT_GAMMA, FitOptions, FitResult, ModelError,
                    ModelParams, PriorConfig, RankMapParams, ZETA,
                    edge_probability, fit, gradient, log_barrier,
                    log_likelihood, log_prior, objective, rank_gradient,
                    theta_gradient)
from .sampler import (BallDropPlan, SampleResult, SamplerError,
                      ball_drop_block, expected_edge_count,
                      negative_order_counts, sample_edge_arrays,
                      sample_hypergraph, sample_negative_edges, sample_ranks,
                      sample_uniform_subset)
from .coresize import (CoreSizeError, CoreThresholdProblem,
                       CoreThresholdResult, DominationError,
                       EmpiricalCoreResult, empirical_core_threshold,
                       is_dominating, phi, solve_core_threshold,
                       threshold_curve, trunc_exp_cdf, trunc_exp_quantile)
from .baselines import (BaselineError, CoreScores, LogisticCpOptions,
                        PermutationModel, ScoreMap, enumerate_non_edges,
                        exact_logistic_cp_ll, exact_permutation_ll,
                        holder_mean, logistic_cp_fit, logistic_cp_ll_estimate,
                        logistic_cp_prob, negative_ll_variance_bound,
                        permutation_ll_estimate, permutation_model_from_order,
                        rank_correlation)
from .modelselect import (GridSearchResult, PiecewiseFit, SelectionError,
                          breakpoint_grid_search, degree_loglog_points,
                          elbow_select, enumerate_breakpoints, piecewise_fit,
                          piecewise_error_profile)
from .rng import RngStream
