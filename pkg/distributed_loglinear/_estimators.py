import logging
import math
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import logsumexp

from ._errors import (
    CoverageError,
    DegenerateFisherMatrix,
    EstimationFailed,
    InvalidExperimentSpec,
    IpfNotConverged,
    MleDoesNotExist,
    NewtonNotConverged,
)
from ._files import encode_cell
from ._graphs import (
    Graph,
    cliques_generating_class,
    junction_tree,
    neighborhood,
)
from ._marginals import relaxed_model
from ._model import (
    Cell,
    CellSpace,
    ContingencyTable,
    GeneratingClass,
    JSet,
    ProbabilityVector,
    ThetaVector,
    build_jset,
    restrict_cell,
    support,
    theta_from_p,
)
from ._sampling import SampleSet
from .config import SolverConfig

logger = logging.getLogger(__name__)

GLOBAL = "global"
GLOBAL_IPF = "global-ipf"
ONE_HOP = "one-hop"
TWO_HOP = "two-hop"
PSEUDO = "pseudo"
DECOMPOSABLE = "decomposable"

METHODS = (GLOBAL, GLOBAL_IPF, ONE_HOP, TWO_HOP, PSEUDO, DECOMPOSABLE)
LOCAL_METHODS = {ONE_HOP: 1, TWO_HOP: 2}

_LINE_SEARCH_SLACK = 1e-14

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """
    The outcome of one estimation method. `sources` lists, for every j ∈ J, the vertices
    whose local estimates were averaged; `per_vertex` keeps the individual local values.
    When the MLE does not exist `existence_flag` is False and `theta_hat` is None.
    `provenance` records the inputs of a CLI run.
    """

    method: str
    theta_hat: Optional[ThetaVector]
    existence_flag: bool = True
    sources: Dict[Cell, Tuple[int, ...]] = field(default_factory=dict)
    per_vertex: Dict[int, Dict[Cell, float]] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    failure: Optional[str] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def vertex_estimate(self, vertex: int, cell: Sequence[int]) -> float:
        """The estimate of theta_cell produced at `vertex` alone."""
        if not self.per_vertex:
            return self.theta_hat[cell]
        return self.per_vertex[vertex][tuple(cell)]

    def to_raw_data(self) -> Dict[str, Any]:
        raw = {
            "method": self.method,
            "existence_flag": self.existence_flag,
            "diagnostics": self.diagnostics,
        }
        if self.provenance:
            raw["provenance"] = self.provenance
        if self.failure is not None:
            raw["failure"] = self.failure
        if self.theta_hat is None:
            return raw
        levels = self.theta_hat.space.levels
        raw["theta0"] = self.theta_hat.theta0
        raw["entries"] = [
            {
                "cell": encode_cell(cell, levels),
                "value": float(value),
                "sources": list(self.sources.get(cell, ())),
            }
            for cell, value in zip(self.theta_hat.jset.cells, self.theta_hat.values)
        ]
        if self.per_vertex:
            raw["per_vertex"] = {
                str(vertex): {
                    encode_cell(cell, levels): value for cell, value in sorted(values.items())
                }
                for vertex, values in sorted(self.per_vertex.items())
            }
        return raw


@dataclass(frozen=True)
class LocalEstimate:
    """The exempt components estimated at one vertex, keyed by full-length cells."""

    vertex: int
    values: Dict[Cell, float]
    diagnostics: Dict[str, Any] = field(default_factory=dict)


def model_jset(space: CellSpace, graph: Graph, cfg: Optional[SolverConfig] = None) -> JSet:
    """The J-set of the graphical model: cells supported on cliques of `graph`."""
    if graph.vertex_count != space.vertex_count:
        raise InvalidExperimentSpec(
            f"The graph has {graph.vertex_count} vertices but the cell space has "
            f"{space.vertex_count}"
        )
    max_cliques = (cfg or SolverConfig()).max_cliques
    return build_jset(space, cliques_generating_class(graph, max_cliques))


def _check_divergence(
    values: Iterable[Tuple[Cell, float]], cfg: SolverConfig, levels: Sequence[int]
) -> None:
    for cell, value in values:
        if abs(value) > cfg.divergence_threshold:
            raise MleDoesNotExist(
                f"|theta| of cell {encode_cell(cell, levels)} is {abs(value):.3g}, above "
                f"the divergence threshold {cfg.divergence_threshold:g}"
            )


def _require_observed(
    table: ContingencyTable,
    maximal_sets: Iterable[FrozenSet[int]],
    limit: int,
    vertices: Optional[Sequence[int]] = None,
) -> None:
    """
    Empty marginal cells are looked for in the raw counts, before any smoothing.
    `vertices` names the graph vertex behind each axis of a marginal table.
    """
    counts = table.dense_counts(limit).reshape(table.space.levels)
    if counts.sum() <= 0:
        raise MleDoesNotExist("the table is empty")
    for members in maximal_sets:
        axes = tuple(vertex for vertex in range(counts.ndim) if vertex not in members)
        if np.any(counts.sum(axis=axes) <= 0):
            named = sorted(members if vertices is None else (vertices[m] for m in members))
            raise MleDoesNotExist(
                f"the observed marginal over vertices {named} has an empty cell"
            )


def _off_buffer_sets(
    generating_class: GeneratingClass, buffer: FrozenSet[int]
) -> List[FrozenSet[int]]:
    """Maximal sets carrying exempt components; the saturated buffer is left out."""
    return [members for members in generating_class.maximal_sets if not members <= buffer]


def _observed_marginals(
    target: np.ndarray, generating_class: GeneratingClass
) -> List[Tuple[Tuple[int, ...], np.ndarray]]:
    """
    The data marginal over every maximal set, with the axes summed away. An empty
    marginal cell puts the data on the boundary, where no MLE exists.
    """
    constraints = []
    for members in generating_class.maximal_sets:
        axes = tuple(vertex for vertex in range(target.ndim) if vertex not in members)
        observed = target.sum(axis=axes, keepdims=True)
        if np.any(observed <= 0):
            raise MleDoesNotExist(
                f"the observed marginal over vertices {sorted(members)} has an empty cell"
            )
        constraints.append((axes, observed))
    return constraints


def _ipf(
    table: ContingencyTable,
    generating_class: GeneratingClass,
    cfg: SolverConfig,
    limit: int,
    checked_sets: Optional[Iterable[FrozenSet[int]]] = None,
    vertices: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, int, float]:
    space = table.space
    _require_observed(
        table,
        generating_class.maximal_sets if checked_sets is None else checked_sets,
        limit,
        vertices,
    )
    counts = table.smoothed_counts(cfg.epsilon_smoothing, limit)
    total = counts.sum()
    constraints = _observed_marginals(
        (counts / total).reshape(space.levels), generating_class
    )

    fitted = np.full(space.levels, 1.0 / space.size)
    residual = math.inf
    for cycle in range(1, cfg.ipf_max_cycles + 1):
        for axes, observed in constraints:
            fitted *= observed / fitted.sum(axis=axes, keepdims=True)
        residual = max(
            float(np.max(np.abs(fitted.sum(axis=axes, keepdims=True) - observed)))
            for axes, observed in constraints
        )
        if residual <= cfg.ipf_tolerance:
            break
    else:
        raise IpfNotConverged(residual, cfg.ipf_max_cycles)
    if np.any(fitted <= 0):
        raise MleDoesNotExist("fitted cell probabilities vanish")
    logger.debug("ipf converged after %d cycles, residual %.3e", cycle, residual)
    return fitted.reshape(-1), cycle, residual


def ipf_fit(
    table: ContingencyTable,
    generating_class: GeneratingClass,
    cfg: Optional[SolverConfig] = None,
    limit: Optional[int] = None,
) -> ProbabilityVector:
    """
    Iterative proportional fitting from the uniform table: every cycle rescales the fit
    to match the data marginal over each maximal set of the generating class.
    """
    cfg = cfg or SolverConfig()
    fitted, _, _ = _ipf(
        table, generating_class, cfg, cfg.enumeration_guard if limit is None else limit
    )
    return ProbabilityVector.from_weights(table.space, fitted)


def _damped_newton(
    objective: Objective, start: np.ndarray, cfg: SolverConfig, what: str
) -> Tuple[np.ndarray, int, float]:
    """
    Maximizes a concave objective returning (value, gradient, negative Hessian). The
    step is halved until the objective does not decrease.
    """
    theta = np.array(start, dtype=float)
    value, gradient, information = objective(theta)
    for iteration in range(cfg.newton_max_iterations + 1):
        gradient_norm = float(np.max(np.abs(gradient))) if gradient.size else 0.0
        if gradient_norm < cfg.newton_tolerance:
            logger.debug(
                "newton (%s) converged after %d iterations, gradient norm %.3e",
                what,
                iteration,
                gradient_norm,
            )
            return theta, iteration, gradient_norm
        if iteration == cfg.newton_max_iterations:
            break
        try:
            factor = cho_factor(information)
        except LinAlgError:
            raise DegenerateFisherMatrix(what)
        step = cho_solve(factor, gradient)
        scale = 1.0
        for _ in range(cfg.newton_max_halvings + 1):
            candidate = theta + scale * step
            candidate_value, candidate_gradient, candidate_information = objective(
                candidate
            )
            if math.isfinite(candidate_value) and candidate_value >= value - (
                _LINE_SEARCH_SLACK * (1.0 + abs(value))
            ):
                break
            scale /= 2.0
        else:
            raise NewtonNotConverged(gradient_norm, iteration + 1)
        theta, value, gradient, information = (
            candidate,
            candidate_value,
            candidate_gradient,
            candidate_information,
        )
        if np.max(np.abs(theta), initial=0.0) > cfg.divergence_threshold:
            raise MleDoesNotExist(
                f"the {what} parameters diverge beyond {cfg.divergence_threshold:g}"
            )
    raise NewtonNotConverged(gradient_norm, cfg.newton_max_iterations)


def _likelihood_objective(
    table: ContingencyTable,
    jset: JSet,
    cfg: SolverConfig,
    limit: int,
    checked_sets: Optional[Iterable[FrozenSet[int]]] = None,
    vertices: Optional[Sequence[int]] = None,
) -> Objective:
    generating_class = jset.generating_class()
    _require_observed(
        table,
        generating_class.maximal_sets if checked_sets is None else checked_sets,
        limit,
        vertices,
    )
    design = jset.design_matrix(limit)
    counts = table.smoothed_counts(cfg.epsilon_smoothing, limit)
    total = counts.sum()
    _observed_marginals(counts.reshape(table.space.levels), generating_class)
    statistics = design.T @ counts / total

    def objective(theta):
        weights = design @ theta
        cumulant = logsumexp(weights)
        probabilities = np.exp(weights - cumulant)
        means = design.T @ probabilities
        information = (design.T * probabilities) @ design - np.outer(means, means)
        return float(theta @ statistics - cumulant), statistics - means, information

    return objective


def newton_mle(
    table: ContingencyTable,
    jset: JSet,
    cfg: Optional[SolverConfig] = None,
    limit: Optional[int] = None,
) -> ThetaVector:
    """Damped Newton on the per-observation log-likelihood, started at theta = 0."""
    cfg = cfg or SolverConfig()
    limit = cfg.enumeration_guard if limit is None else limit
    theta, _, _ = _newton_with_diagnostics(table, jset, cfg, limit)
    return theta


def _newton_with_diagnostics(
    table: ContingencyTable,
    jset: JSet,
    cfg: SolverConfig,
    limit: int,
    checked_sets: Optional[Iterable[FrozenSet[int]]] = None,
    vertices: Optional[Sequence[int]] = None,
) -> Tuple[ThetaVector, int, float]:
    objective = _likelihood_objective(table, jset, cfg, limit, checked_sets, vertices)
    values, iterations, gradient_norm = _damped_newton(
        objective, np.zeros(len(jset)), cfg, "likelihood"
    )
    cumulant = float(logsumexp(jset.design_matrix(limit) @ values))
    return ThetaVector(jset, values, theta0=-cumulant), iterations, gradient_norm


def global_estimate(
    table: ContingencyTable,
    jset: JSet,
    cfg: Optional[SolverConfig] = None,
    fitter: str = "newton",
) -> EstimateReport:
    cfg = cfg or SolverConfig()
    levels = table.space.levels
    if fitter == "newton":
        theta, iterations, gradient_norm = _newton_with_diagnostics(
            table, jset, cfg, cfg.enumeration_guard
        )
        diagnostics = {
            "fitter": "newton",
            "iterations": iterations,
            "gradient_norm": gradient_norm,
        }
        method = GLOBAL
    else:
        fitted, cycles, residual = _ipf(
            table, jset.generating_class(), cfg, cfg.enumeration_guard
        )
        theta = theta_from_p(ProbabilityVector.from_weights(table.space, fitted), jset)
        diagnostics = {"fitter": "ipf", "cycles": cycles, "residual": residual}
        method = GLOBAL_IPF
    _check_divergence(theta.as_dict().items(), cfg, levels)
    return EstimateReport(
        method,
        theta,
        sources={cell: tuple(sorted(support(cell))) for cell in jset.cells},
        diagnostics=diagnostics,
    )


def local_marginal_estimate(
    table: ContingencyTable,
    graph: Graph,
    vertex: int,
    hop: int,
    cfg: Optional[SolverConfig] = None,
    jset_full: Optional[JSet] = None,
) -> LocalEstimate:
    """
    Fits the relaxed marginal model on M_v and keeps only the exempt components, those
    whose support is inside M_v but not inside the buffer B_v.
    """
    cfg = cfg or SolverConfig()
    jset_full = jset_full or model_jset(table.space, graph, cfg)
    nb = neighborhood(graph, vertex, hop)
    model = relaxed_model(nb, jset_full)
    try:
        model.jset.space.ensure_enumerable(
            cfg.local_enumeration_guard, f"fit the local model at vertex {vertex}"
        )
        marginal = table.marginal(nb.members, cfg.sparse_threshold)
        generating_class = model.jset.generating_class()
        positions = {member: position for position, member in enumerate(model.members)}
        checked_sets = _off_buffer_sets(
            generating_class, frozenset(positions[member] for member in nb.buffer)
        )
        if cfg.local_fitter == "ipf":
            fitted, cycles, residual = _ipf(
                marginal,
                generating_class,
                cfg,
                cfg.local_enumeration_guard,
                checked_sets,
                model.members,
            )
            local_theta = theta_from_p(
                ProbabilityVector.from_weights(model.jset.space, fitted), model.jset
            )
            diagnostics = {"fitter": "ipf", "cycles": cycles, "residual": residual}
        else:
            local_theta, iterations, gradient_norm = _newton_with_diagnostics(
                marginal,
                model.jset,
                cfg,
                cfg.local_enumeration_guard,
                checked_sets,
                model.members,
            )
            diagnostics = {
                "fitter": "newton",
                "iterations": iterations,
                "gradient_norm": gradient_norm,
            }
        values = {
            cell: local_theta[model.restrict(cell)] for cell in model.classification.exempt
        }
        _check_divergence(values.items(), cfg, table.space.levels)
    except EstimationFailed as error:
        raise error.at_vertex(vertex)
    return LocalEstimate(vertex, values, diagnostics)


def combine_local_estimates(
    jset_full: JSet, estimates: Iterable[LocalEstimate], method: str
) -> EstimateReport:
    """theta_j is the plain mean of the contributions of every vertex that estimated it."""
    estimates = sorted(estimates, key=lambda estimate: estimate.vertex)
    contributions: Dict[Cell, List[Tuple[int, float]]] = {}
    for estimate in estimates:
        for cell, value in estimate.values.items():
            contributions.setdefault(cell, []).append((estimate.vertex, value))
    values = np.empty(len(jset_full))
    sources = {}
    for position, cell in enumerate(jset_full.cells):
        contributed = contributions.get(cell)
        if not contributed:
            raise CoverageError(encode_cell(cell, jset_full.space.levels))
        values[position] = math.fsum(value for _, value in contributed) / len(contributed)
        sources[cell] = tuple(vertex for vertex, _ in contributed)
    return EstimateReport(
        method,
        ThetaVector(jset_full, values),
        sources=sources,
        per_vertex={estimate.vertex: dict(estimate.values) for estimate in estimates},
        diagnostics={
            str(estimate.vertex): estimate.diagnostics for estimate in estimates
        },
    )


def local_estimate(
    table: ContingencyTable,
    graph: Graph,
    hop: int,
    cfg: Optional[SolverConfig] = None,
    jset_full: Optional[JSet] = None,
) -> EstimateReport:
    """Local relaxed estimates at every vertex, averaged."""
    cfg = cfg or SolverConfig()
    jset_full = jset_full or model_jset(table.space, graph, cfg)
    estimates = [
        local_marginal_estimate(table, graph, vertex, hop, cfg, jset_full)
        for vertex in graph.vertices
    ]
    method = ONE_HOP if hop == 1 else TWO_HOP
    return combine_local_estimates(jset_full, estimates, method)


def _conditional_features(
    cells: np.ndarray, position: int, level_count: int, parameter_cells: Sequence[Cell]
) -> np.ndarray:
    """
    Φ[u, l, k] = 1 iff parameter k has level l at the vertex and configuration u agrees
    with it everywhere else on its support.
    """
    features = np.zeros((cells.shape[0], level_count, len(parameter_cells)))
    for k, cell in enumerate(parameter_cells):
        mask = np.ones(cells.shape[0], dtype=bool)
        for other in support(cell):
            if other != position:
                mask &= cells[:, other] == cell[other]
        features[mask, cell[position], k] = 1.0
    return features


def _pseudo_objective(
    features: np.ndarray, observed_levels: np.ndarray, weights: np.ndarray
) -> Objective:
    rows = np.arange(features.shape[0])
    observed = features[rows, observed_levels]

    def objective(theta):
        scores = features @ theta
        normalizers = logsumexp(scores, axis=1)
        conditionals = np.exp(scores - normalizers[:, None])
        means = np.einsum("ul,ulk->uk", conditionals, features)
        value = float(weights @ (scores[rows, observed_levels] - normalizers))
        gradient = weights @ (observed - means)
        information = np.einsum(
            "u,ul,ulk,ulm->km", weights, conditionals, features, features
        ) - np.einsum("u,uk,um->km", weights, means, means)
        return value, gradient, information

    return objective


def pseudo_likelihood_estimate(
    samples: Union[SampleSet, ContingencyTable],
    graph: Graph,
    cfg: Optional[SolverConfig] = None,
    jset_full: Optional[JSet] = None,
) -> EstimateReport:
    """
    Maximizes, vertex by vertex, the conditional likelihood of x_v given its neighbours
    over the components theta_j with v ∈ S(j). Shared components are averaged over the
    vertices of their support. The conditional only depends on the one-hop neighbourhood,
    so each vertex works on that marginal table.
    """
    cfg = cfg or SolverConfig()
    table = samples.table if isinstance(samples, SampleSet) else samples
    if table.total == 0:
        raise InvalidExperimentSpec("Pseudo-likelihood estimation needs samples")
    space = table.space
    jset_full = jset_full or model_jset(space, graph, cfg)
    maximal_sets = jset_full.generating_class().maximal_sets
    estimates = []
    for vertex in graph.vertices:
        members = sorted({vertex} | graph.neighbours(vertex))
        position = members.index(vertex)
        parameter_cells = [cell for cell in jset_full.cells if cell[vertex] != 0]
        local_cells = [restrict_cell(cell, members) for cell in parameter_cells]
        checked_sets = [
            frozenset(members.index(other) for other in maximal)
            for maximal in maximal_sets
            if vertex in maximal and maximal <= set(members)
        ]
        try:
            marginal = table.marginal(members, cfg.sparse_threshold)
            marginal.space.ensure_enumerable(
                cfg.local_enumeration_guard, f"fit the conditional at vertex {vertex}"
            )
            _require_observed(
                marginal, checked_sets, cfg.local_enumeration_guard, members
            )
            counts = marginal.smoothed_counts(
                cfg.epsilon_smoothing, cfg.local_enumeration_guard
            )
            observed = counts > 0
            cells = marginal.space.enumerate(cfg.local_enumeration_guard)[observed]
            weights = counts[observed] / counts.sum()
            features = _conditional_features(
                cells, position, space.levels[vertex], local_cells
            )
            theta, iterations, gradient_norm = _damped_newton(
                _pseudo_objective(features, cells[:, position], weights),
                np.zeros(len(local_cells)),
                cfg,
                "conditional likelihood",
            )
        except EstimationFailed as error:
            raise error.at_vertex(vertex)
        estimates.append(
            LocalEstimate(
                vertex,
                dict(zip(parameter_cells, theta.tolist())),
                {"fitter": "newton", "iterations": iterations, "gradient_norm": gradient_norm},
            )
        )
    return combine_local_estimates(jset_full, estimates, PSEUDO)


def decomposable_theta(
    table: ContingencyTable,
    graph: Graph,
    cfg: Optional[SolverConfig] = None,
    jset_full: Optional[JSet] = None,
) -> ThetaVector:
    """
    Closed form on a decomposable graph: theta_j is the sum of the clique-marginal
    parameters over cliques containing S(j) minus the separator-marginal parameters over
    separators containing S(j), separators counted with their multiplicity.
    """
    cfg = cfg or SolverConfig()
    space = table.space
    jset_full = jset_full or model_jset(space, graph, cfg)
    tree = junction_tree(graph, cfg.max_cliques)

    def marginal_theta(members):
        members = sorted(members)
        marginal = table.marginal(members, cfg.sparse_threshold)
        _require_observed(
            marginal,
            [frozenset(range(len(members)))],
            cfg.local_enumeration_guard,
            members,
        )
        counts = marginal.smoothed_counts(cfg.epsilon_smoothing, cfg.local_enumeration_guard)
        probabilities = ProbabilityVector.from_weights(marginal.space, counts)
        return members, theta_from_p(probabilities, JSet.saturated(marginal.space))

    cliques = [marginal_theta(clique) for clique in tree.cliques]
    separators = [marginal_theta(separator) for separator in tree.separators]

    values = np.empty(len(jset_full))
    for position, cell in enumerate(jset_full.cells):
        cell_support = support(cell)
        added = [
            theta[restrict_cell(cell, members)]
            for members, theta in cliques
            if cell_support <= set(members)
        ]
        removed = [
            theta[restrict_cell(cell, members)]
            for members, theta in separators
            if cell_support <= set(members)
        ]
        values[position] = math.fsum(added) - math.fsum(removed)
    theta0 = math.fsum(theta.theta0 for _, theta in cliques) - math.fsum(
        theta.theta0 for _, theta in separators
    )
    _check_divergence(zip(jset_full.cells, values), cfg, space.levels)
    return ThetaVector(jset_full, values, theta0=theta0)


def estimate(
    table: ContingencyTable,
    graph: Graph,
    method: str,
    cfg: Optional[SolverConfig] = None,
    jset_full: Optional[JSet] = None,
) -> EstimateReport:
    """
    Runs one method end to end. Failures which mean the data admit no estimate come back
    as a report with existence_flag=False; everything else propagates.
    """
    cfg = cfg or SolverConfig()
    if method not in METHODS:
        raise InvalidExperimentSpec(
            f"Unknown method {method!r}; use one of {', '.join(METHODS)}"
        )
    jset_full = jset_full or model_jset(table.space, graph, cfg)
    try:
        if method == GLOBAL:
            return global_estimate(table, jset_full, cfg, fitter="newton")
        if method == GLOBAL_IPF:
            return global_estimate(table, jset_full, cfg, fitter="ipf")
        if method in LOCAL_METHODS:
            return local_estimate(table, graph, LOCAL_METHODS[method], cfg, jset_full)
        if method == PSEUDO:
            return pseudo_likelihood_estimate(table, graph, cfg, jset_full)
        theta = decomposable_theta(table, graph, cfg, jset_full)
        return EstimateReport(
            DECOMPOSABLE,
            theta,
            sources={cell: tuple(sorted(support(cell))) for cell in jset_full.cells},
        )
    except EstimationFailed as error:
        if not error.flags_nonexistence:
            raise
        logger.info("%s estimate does not exist: %s", method, str(error).strip())
        return EstimateReport(
            method, None, existence_flag=False, failure=str(error).strip()
        )


def relative_mse(estimate: ThetaVector, truth: ThetaVector) -> float:
    """||theta_hat - theta||² / ||theta||² over the J-set of `truth`."""
    errors = np.array([estimate[cell] for cell in truth.jset.cells]) - truth.values
    return float(errors @ errors / (truth.values @ truth.values))


def sum_abs_difference(estimate: ThetaVector, reference: ThetaVector) -> float:
    return math.fsum(
        abs(estimate[cell] - value) for cell, value in reference.as_dict().items()
    )
