"""randkit: low-rank smooth kernel estimation on weighted graphs.

Estimate a symmetric m x m kernel from n noisy samples of randomly chosen
entries, when the kernel is simultaneously low rank and smooth with respect
to the spectrum of a graph smoothing operator.  The package provides

* graph Laplacians and their spectral decompositions (:mod:`randkit.graphs`,
  :mod:`randkit.spectra`),
* kernel algebra: norms, truncation, coherence functions and their
  regularized majorants (:mod:`randkit.kernels`, :mod:`randkit.oracles`),
* the uniform-design sampling model (:mod:`randkit.sampling`),
* a two-penalty convex estimator (nuclear norm + Sobolev smoothing) and a
  rank/eigenbasis-restricted least-squares estimator
  (:mod:`randkit.convex`, :mod:`randkit.restricted`),
* closed-form risk calculators and minimax packing constructions
  (:mod:`randkit.rates`, :mod:`randkit.packing`),
* a reproducible Monte Carlo experiment harness and CLI
  (:mod:`randkit.experiments`, :mod:`randkit.cli`).
"""

from randkit.convex import (
    AggregatePath,
    ConvexConfig,
    SolveReport,
    aggregate_epsbar,
    aggregate_path,
    convex_oracle_bound,
    first_order_residual,
    objective,
    solve_convex,
    tail_exponent,
)
from randkit.experiments import (
    ExperimentConfig,
    RateReport,
    fit_rate_slope,
    run_experiment,
)
from randkit.graphs import (
    WeightedGraph,
    complete_graph,
    cycle_graph,
    empty_graph,
    laplacian,
    load_graph,
    path_graph,
)
from randkit.kernels import (
    SymmetricKernel,
    coherence_function,
    coherence_majorant,
    eigenbasis_truncation,
    kernel_norms,
    load_kernel,
    save_kernel,
    sign_and_support,
    truncate,
)
from randkit.oracles import OracleProfile, generate_oracle
from randkit.packing import (
    PackingReport,
    PackingSet,
    build_packing,
    kappa_schedule,
    packing_distributions,
    verify_packing,
)
from randkit.rates import (
    AdaptiveRate,
    BiasVarianceCutoff,
    ProblemSize,
    adaptive_upper_rate,
    basis_lp_norm,
    basis_lp_norm_partial,
    basis_sparsity,
    bias_variance_cutoff,
    minimax_lower_dense,
    minimax_lower_sparse,
    polynomial_spectrum_rate,
)
from randkit.restricted import (
    RestrictedConfig,
    SelectionConfig,
    restricted_ls,
    restricted_risk_bound,
    select_model,
    selection_penalty,
)
from randkit.sampling import (
    Dataset,
    default_epsilon,
    draw_dataset,
    empirical_loss,
    epsilon_star,
    load_dataset,
    save_dataset,
)
from randkit.spectra import (
    SpectralDecomposition,
    SpectralMajorant,
    regularized_majorant,
    smoothing_operator,
    spectral_function,
)

__all__ = [
    "WeightedGraph",
    "path_graph",
    "cycle_graph",
    "complete_graph",
    "empty_graph",
    "laplacian",
    "load_graph",
    "SpectralDecomposition",
    "SpectralMajorant",
    "smoothing_operator",
    "spectral_function",
    "regularized_majorant",
    "SymmetricKernel",
    "kernel_norms",
    "truncate",
    "sign_and_support",
    "coherence_function",
    "coherence_majorant",
    "eigenbasis_truncation",
    "save_kernel",
    "load_kernel",
    "OracleProfile",
    "generate_oracle",
    "Dataset",
    "draw_dataset",
    "empirical_loss",
    "epsilon_star",
    "default_epsilon",
    "save_dataset",
    "load_dataset",
    "ConvexConfig",
    "SolveReport",
    "AggregatePath",
    "objective",
    "solve_convex",
    "first_order_residual",
    "tail_exponent",
    "convex_oracle_bound",
    "aggregate_path",
    "aggregate_epsbar",
    "RestrictedConfig",
    "SelectionConfig",
    "restricted_ls",
    "select_model",
    "selection_penalty",
    "restricted_risk_bound",
    "ProblemSize",
    "AdaptiveRate",
    "BiasVarianceCutoff",
    "basis_lp_norm",
    "basis_lp_norm_partial",
    "basis_sparsity",
    "minimax_lower_dense",
    "minimax_lower_sparse",
    "bias_variance_cutoff",
    "adaptive_upper_rate",
    "polynomial_spectrum_rate",
    "PackingSet",
    "PackingReport",
    "kappa_schedule",
    "build_packing",
    "packing_distributions",
    "verify_packing",
    "ExperimentConfig",
    "RateReport",
    "run_experiment",
    "fit_rate_slope",
]

__version__ = "0.1.0"
