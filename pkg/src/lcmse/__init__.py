"""Identifiability analysis for latent class models in multiple-systems
(capture-recapture) estimation.

Core surface: inclusion patterns and their canonical order, latent class
models with definition-level cell probabilities, the moment transform and
proportionality test, the 2J <= K identifiability decision with explicit
counterexample pairs, seeded simulation, and conditional-likelihood EM
fitting with a nonidentifiability probe. The HTTP service lives in
``lcmse.service`` and the command-line client in ``lcmse.cli``.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateModelError,
    DimensionMismatchError,
    DistinctnessWarning,
    DomainError,
    InvalidDimensionError,
    InvalidModelError,
    InvalidTableError,
    LcmseError,
    NonidentifiableFamilyWarning,
    OverparameterizedWarning,
    RegimeError,
)
from .estimation import (
    FitConfig,
    FitResult,
    ProbeReport,
    best_fit,
    conditional_loglik,
    em_trace,
    fit_em,
    probe_nonidentifiability,
    saturated_loglik,
)
from .identifiability import (
    CounterexamplePair,
    CounterexampleVerification,
    IdentifiabilityDecision,
    LambdaMatrix,
    alternating_binomial_sum,
    build_lambda_matrix,
    counterexample,
    is_identifiable,
    numerical_rank,
    parameter_bound_satisfied,
    reference_pair,
    verify_counterexample,
)
from .io import (
    model_to_dict,
    parse_model,
    parse_table_dict,
    read_model,
    read_table,
    table_to_dict,
    write_model,
    write_table,
)
from .model import (
    CellProbabilityVector,
    ContingencyTable,
    LatentClassModel,
    MomentVector,
    cell_probabilities,
    conditional_probabilities,
)
from .moments import (
    CoefficientMatrix,
    ProportionalityResult,
    check_moment_proportionality,
    coefficient_matrix,
    moments_from_pi,
    moments_of_model,
    pi_from_moments,
)
from .patterns import InclusionPattern, PatternOrder, enumerate_patterns
from .simulation import (
    SimulatedTable,
    SimulationSpec,
    replicate_stream,
    simulate_replicates,
    simulate_table,
)

__all__ = [
    "__version__",
    # errors and warnings
    "LcmseError",
    "InvalidDimensionError",
    "InvalidModelError",
    "InvalidTableError",
    "DimensionMismatchError",
    "DegenerateModelError",
    "RegimeError",
    "DomainError",
    "NonidentifiableFamilyWarning",
    "OverparameterizedWarning",
    "DistinctnessWarning",
    # patterns
    "InclusionPattern",
    "PatternOrder",
    "enumerate_patterns",
    # models and probabilities
    "LatentClassModel",
    "CellProbabilityVector",
    "MomentVector",
    "ContingencyTable",
    "cell_probabilities",
    "conditional_probabilities",
    # moment transform
    "CoefficientMatrix",
    "coefficient_matrix",
    "moments_of_model",
    "pi_from_moments",
    "moments_from_pi",
    "ProportionalityResult",
    "check_moment_proportionality",
    # identifiability
    "IdentifiabilityDecision",
    "is_identifiable",
    "parameter_bound_satisfied",
    "CounterexamplePair",
    "counterexample",
    "reference_pair",
    "CounterexampleVerification",
    "verify_counterexample",
    "alternating_binomial_sum",
    "LambdaMatrix",
    "build_lambda_matrix",
    "numerical_rank",
    # io
    "read_model",
    "write_model",
    "parse_model",
    "model_to_dict",
    "read_table",
    "write_table",
    "table_to_dict",
    "parse_table_dict",
    # simulation
    "SimulationSpec",
    "SimulatedTable",
    "simulate_table",
    "simulate_replicates",
    "replicate_stream",
    # estimation
    "FitConfig",
    "FitResult",
    "ProbeReport",
    "conditional_loglik",
    "saturated_loglik",
    "fit_em",
    "em_trace",
    "best_fit",
    "probe_nonidentifiability",
]
