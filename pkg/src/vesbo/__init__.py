"""Bayesian optimization with variational entropy search acquisitions.

Noise-free GP regression (Matern 5/2, MLE-fitted), grid-based acquisition
optimization (expected improvement, max-value entropy search, and the
VES-exp / VES-Gamma lower-bound family), posterior path sampling, and a
benchmark harness with a log-regret metric and CSV outputs.
"""

from .acquisition import (
    AcquisitionField,
    GammaVariational,
    ei_closed_form,
    ei_field,
    eslb_exp,
    eslb_gamma,
    lambda_star,
    mc_ei_field,
    mes_field,
)
from .errors import (
    BracketError,
    ConfigError,
    GridDegeneracyError,
    InconsistentMomentsError,
    InvalidFStarError,
    SingularDataError,
    VesboError,
)
from .gp import (
    Dataset,
    GpPosterior,
    KernelParams,
    fit_hyperparameters,
    fit_posterior,
    kernel_eval,
    kernel_matrix,
    log_marginal_likelihood,
    posterior_cov,
    posterior_mean,
    posterior_mean_var,
)
from .harness import (
    ACQUISITIONS,
    ExperimentConfig,
    ExperimentAggregate,
    RegretTrace,
    StepRecord,
    log_regret,
    run_bo,
    run_experiment,
    write_aggregate_csv,
    write_runs_csv,
)
from .objectives import Objective, get_objective, objective_registry
from .sampling import (
    GapMoments,
    GapMomentsField,
    PathBatch,
    SampleGrid,
    derive_seed,
    gap_moments,
    gap_moments_all,
    nearest_node_map,
    sample_paths,
    sampling_plan,
)
from .special_math import RootBracket, digamma, normal_pdf_cdf, solve_monotone_root
from .ves import (
    K_MAX,
    VesConfig,
    VesIteration,
    VesResult,
    solve_beta,
    solve_k,
    ves_exp_select,
    ves_gamma_select,
)

__version__ = "0.1.0"
