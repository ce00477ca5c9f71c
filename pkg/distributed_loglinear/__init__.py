# ruff: noqa: F401
from ._model import (
    Cell,
    CellSpace,
    GeneratingClass,
    JSet,
    ThetaVector,
    ProbabilityVector,
    ContingencyTable,
    build_jset,
    theta_from_p,
    p_from_theta,
    cumulant,
    loglik,
    support,
    triangleleft,
    triangleleft_zero,
)
from ._graphs import (
    Graph,
    Neighborhood,
    neighborhood,
    maximal_cliques,
    is_decomposable,
    make_lattice,
    make_random_graph,
    make_star,
    parse_generator,
)
from ._marginals import (
    BufferClassification,
    MarginalModel,
    marginal_table,
    classify_buffer,
    relaxed_model,
    exact_marginal_model,
    marginal_theta_oracle,
    lemma_one_formula,
)
from ._estimators import (
    EstimateReport,
    ipf_fit,
    newton_mle,
    global_estimate,
    local_marginal_estimate,
    combine_local_estimates,
    pseudo_likelihood_estimate,
    decomposable_theta,
    estimate,
)
from ._asymptotics import (
    FisherMatrix,
    VarianceOrderingReport,
    fisher_matrix,
    asymptotic_variance,
    verify_variance_ordering,
)
from ._sampling import SampleSet, random_theta, exact_sample, gibbs_sample, draw_samples
from ._harness import (
    ExperimentSpec,
    ExperimentResult,
    run_mse_sweep,
    run_variance_sweep,
    run_verification,
    run_comparison,
)
from ._files import read_data, read_graph, read_theta, write_table, write_graph
from .config import SolverConfig
from ._errors import (
    DistributedLoglinearException,
    InvalidCellSpace,
    CellSpaceMismatch,
    InvalidGeneratingClass,
    InvalidGraph,
    InvalidThetaVector,
    InvalidProbabilityVector,
    InvalidContingencyTable,
    InvalidSolverConfig,
    InvalidExperimentSpec,
    BufferedTargetCell,
    CapacityExceeded,
    EstimationFailed,
    MleDoesNotExist,
    IpfNotConverged,
    NewtonNotConverged,
    DegenerateFisherMatrix,
    CoverageError,
    NotDecomposable,
    DataFileUnparsable,
    DataStarvation,
    TheoremCheckFailed,
)

__all__ = [
    "Cell",
    "CellSpace",
    "GeneratingClass",
    "JSet",
    "ThetaVector",
    "ProbabilityVector",
    "ContingencyTable",
    "build_jset",
    "theta_from_p",
    "p_from_theta",
    "cumulant",
    "loglik",
    "support",
    "triangleleft",
    "triangleleft_zero",
    "Graph",
    "Neighborhood",
    "neighborhood",
    "maximal_cliques",
    "is_decomposable",
    "make_lattice",
    "make_random_graph",
    "make_star",
    "parse_generator",
    "BufferClassification",
    "MarginalModel",
    "marginal_table",
    "classify_buffer",
    "relaxed_model",
    "exact_marginal_model",
    "marginal_theta_oracle",
    "lemma_one_formula",
    "EstimateReport",
    "ipf_fit",
    "newton_mle",
    "global_estimate",
    "local_marginal_estimate",
    "combine_local_estimates",
    "pseudo_likelihood_estimate",
    "decomposable_theta",
    "estimate",
    "FisherMatrix",
    "VarianceOrderingReport",
    "fisher_matrix",
    "asymptotic_variance",
    "verify_variance_ordering",
    "SampleSet",
    "random_theta",
    "exact_sample",
    "gibbs_sample",
    "draw_samples",
    "ExperimentSpec",
    "ExperimentResult",
    "run_mse_sweep",
    "run_variance_sweep",
    "run_verification",
    "run_comparison",
    "read_data",
    "read_graph",
    "read_theta",
    "write_table",
    "write_graph",
    "SolverConfig",
    "DistributedLoglinearException",
    "InvalidCellSpace",
    "CellSpaceMismatch",
    "InvalidGeneratingClass",
    "InvalidGraph",
    "InvalidThetaVector",
    "InvalidProbabilityVector",
    "InvalidContingencyTable",
    "InvalidSolverConfig",
    "InvalidExperimentSpec",
    "BufferedTargetCell",
    "CapacityExceeded",
    "EstimationFailed",
    "MleDoesNotExist",
    "IpfNotConverged",
    "NewtonNotConverged",
    "DegenerateFisherMatrix",
    "CoverageError",
    "NotDecomposable",
    "DataFileUnparsable",
    "DataStarvation",
    "TheoremCheckFailed",
]
