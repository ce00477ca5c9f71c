import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._asymptotics import EventProbabilities, verify_variance_ordering
from ._errors import (
    BufferedTargetCell,
    DataStarvation,
    InvalidExperimentSpec,
    TheoremCheckFailed,
)
from ._estimators import (
    GLOBAL,
    GLOBAL_IPF,
    METHODS,
    ONE_HOP,
    PSEUDO,
    TWO_HOP,
    EstimateReport,
    decomposable_theta,
    estimate,
    model_jset,
    newton_mle,
    relative_mse,
    sum_abs_difference,
)
from ._files import encode_cell
from ._graphs import Graph, is_decomposable, neighborhood
from ._marginals import (
    classify_buffer,
    lemma_one_vector,
    marginal_theta_oracle,
    relaxed_model,
)
from ._model import Cell, CellSpace, ContingencyTable, JSet, ThetaVector, p_from_theta
from ._sampling import draw_samples, make_rng, random_theta
from ._settings import DEFAULT_BURN_IN, DEFAULT_THINNING
from .config import SolverConfig

logger = logging.getLogger(__name__)

# seed streams
THETA_STREAM = 0
SAMPLE_STREAM = 1
VERIFY_STREAM = 2
TABLE_STREAM = 3

LEMMA_TOLERANCE = 1e-9
AGREEMENT_TOLERANCE = 1e-6

SWEEP_METHODS = (GLOBAL, ONE_HOP, TWO_HOP, PSEUDO)
EXACT_METHODS = (GLOBAL, GLOBAL_IPF)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    graph: Graph
    graph_source: str
    seed: int
    levels: Tuple[int, ...] = ()
    sample_sizes: Tuple[int, ...] = (100,)
    replications: int = 1
    methods: Tuple[str, ...] = SWEEP_METHODS
    cfg: SolverConfig = field(default_factory=SolverConfig)
    theta: Optional[ThetaVector] = None
    theta_source: str = "random"
    theta_range: Tuple[float, float] = (-1.0, 1.0)
    burn_in: int = DEFAULT_BURN_IN
    thinning: int = DEFAULT_THINNING
    sampler: Optional[str] = None

    def __post_init__(self):
        if not self.levels:
            object.__setattr__(self, "levels", (2,) * self.graph.vertex_count)
        if len(self.levels) != self.graph.vertex_count:
            raise InvalidExperimentSpec(
                f"{len(self.levels)} levels given for {self.graph.vertex_count} vertices"
            )
        if self.replications < 1:
            raise InvalidExperimentSpec("At least one replication is needed")
        sizes = list(self.sample_sizes)
        if not sizes or sizes[0] < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidExperimentSpec(
                "Sample sizes must be positive and strictly ascending"
            )
        unknown = [method for method in self.methods if method not in METHODS]
        if unknown or not self.methods:
            raise InvalidExperimentSpec(
                f"Unknown methods {unknown}; use some of {', '.join(METHODS)}"
            )

    @property
    def space(self) -> CellSpace:
        return CellSpace(self.levels)

    def to_raw_data(self) -> Dict[str, Any]:
        return {
            "graph": self.graph_source,
            "vertex_count": self.graph.vertex_count,
            "edges": [list(edge) for edge in self.graph.sorted_edges()],
            "levels": list(self.levels),
            "seed": self.seed,
            "theta_source": self.theta_source,
            "theta_range": list(self.theta_range),
            "sample_sizes": list(self.sample_sizes),
            "replications": self.replications,
            "methods": list(self.methods),
            "sampler": self.sampler or "auto",
            "burn_in": self.burn_in,
            "thinning": self.thinning,
            "solver": self.cfg.to_raw_data(),
        }


@dataclass(frozen=True)
class ExperimentResult:
    """Rows of one experiment plus the provenance needed to replay it."""

    kind: str
    provenance: Dict[str, Any]
    rows: List[Dict[str, Any]]

    def to_raw_data(self) -> Dict[str, Any]:
        return {"kind": self.kind, "provenance": self.provenance, "rows": self.rows}


def true_theta(spec: ExperimentSpec, jset: JSet) -> ThetaVector:
    if spec.theta is not None:
        if spec.theta.jset != jset:
            return ThetaVector(jset, [spec.theta[cell] for cell in jset.cells])
        return spec.theta
    low, high = spec.theta_range
    return random_theta(jset, make_rng(spec.seed, THETA_STREAM), low, high)


def feasible_methods(spec: ExperimentSpec) -> List[str]:
    """Drops the methods which enumerate all cells when the space exceeds the guard."""
    if spec.space.size <= spec.cfg.enumeration_guard:
        return list(spec.methods)
    methods = [method for method in spec.methods if method not in EXACT_METHODS]
    skipped = sorted(set(spec.methods) - set(methods))
    if skipped:
        logger.info(
            "%d cells exceed the enumeration guard, skipping %s",
            spec.space.size,
            ", ".join(skipped),
        )
    if not methods:
        raise InvalidExperimentSpec(
            "Every requested method needs exact enumeration of the cell space; add "
            "one-hop, two-hop or pseudo"
        )
    return methods


def _provenance(spec: ExperimentSpec, methods: Sequence[str]) -> Dict[str, Any]:
    provenance = spec.to_raw_data()
    provenance["skipped_methods"] = sorted(set(spec.methods) - set(methods))
    return provenance


def _replications(
    spec: ExperimentSpec, jset: JSet, theta: ThetaVector, n: int, methods: Sequence[str]
):
    """Yields (replication, {method: report}) for every replication at sample size n."""
    for replication in range(spec.replications):
        samples = draw_samples(
            theta,
            spec.graph,
            n,
            make_rng(spec.seed, SAMPLE_STREAM, n, replication),
            spec.cfg.enumeration_guard,
            spec.burn_in,
            spec.thinning,
            spec.sampler,
            spec.cfg.sparse_threshold,
        )
        reports = {
            method: estimate(samples.table, spec.graph, method, spec.cfg, jset)
            for method in methods
        }
        yield replication, reports


def run_mse_sweep(spec: ExperimentSpec) -> ExperimentResult:
    """
    Relative MSE of every method against the true parameter, per sample size. A
    replication in which any method finds no MLE is discarded for all methods.
    """
    jset = model_jset(spec.space, spec.graph, spec.cfg)
    theta = true_theta(spec, jset)
    if not np.any(theta.values):
        raise InvalidExperimentSpec(
            "The relative MSE is undefined for an all-zero true parameter"
        )
    methods = feasible_methods(spec)
    rows = []
    for n in spec.sample_sizes:
        errors = {method: [] for method in methods}
        discarded = {method: 0 for method in methods}
        joint_discarded = 0
        for _, reports in _replications(spec, jset, theta, n, methods):
            missing = [method for method, report in reports.items() if not report.existence_flag]
            for method in missing:
                discarded[method] += 1
            if missing:
                joint_discarded += 1
                continue
            for method, report in reports.items():
                errors[method].append(relative_mse(report.theta_hat, theta))
        retained = spec.replications - joint_discarded
        if retained == 0:
            raise DataStarvation(n, spec.replications)
        logger.info(
            "n=%d: %d of %d replications discarded", n, joint_discarded, spec.replications
        )
        for method in methods:
            values = np.array(errors[method])
            rows.append(
                {
                    "method": method,
                    "n": n,
                    "mean_rel_mse": float(values.mean()),
                    "sd": float(values.std(ddof=1)) if retained > 1 else 0.0,
                    "discarded": discarded[method],
                    "joint_discarded": joint_discarded,
                    "retained": retained,
                }
            )
    return ExperimentResult("mse-sweep", _provenance(spec, methods), rows)


def variance_standard_error(values: np.ndarray) -> float:
    """Standard error of the unbiased sample variance, from the fourth central moment."""
    count = len(values)
    if count < 2:
        return math.nan
    variance = values.var(ddof=1)
    fourth = np.mean((values - values.mean()) ** 4)
    squared = (fourth - (count - 3) / (count - 1) * variance**2) / count
    return float(math.sqrt(max(squared, 0.0)))


def _target_value(report: EstimateReport, method: str, vertex: int, cell: Cell) -> float:
    if method in (ONE_HOP, TWO_HOP):
        return report.vertex_estimate(vertex, cell)
    return report.theta_hat[cell]


def validate_target(
    graph: Graph, jset: JSet, vertex: int, cell: Cell
) -> None:
    if cell not in jset:
        raise InvalidExperimentSpec(
            f"Cell {encode_cell(cell, jset.space.levels)} is not a parameter of the model"
        )
    if not 0 <= vertex < graph.vertex_count:
        raise InvalidExperimentSpec(f"Vertex {vertex} is not part of the graph")
    exempt = classify_buffer(neighborhood(graph, vertex, 1), jset).exempt
    if cell not in exempt:
        raise BufferedTargetCell(encode_cell(cell, jset.space.levels), vertex)


def run_variance_sweep(
    spec: ExperimentSpec, target_vertex: int, target_cell: Sequence[int]
) -> ExperimentResult:
    """
    Sample variance over replications of the estimate of one theta_j. Local methods
    report the value estimated at `target_vertex`.
    """
    jset = model_jset(spec.space, spec.graph, spec.cfg)
    cell = spec.space.validate_cell(target_cell)
    validate_target(spec.graph, jset, target_vertex, cell)
    theta = true_theta(spec, jset)
    methods = feasible_methods(spec)
    rows = []
    for n in spec.sample_sizes:
        values = {method: [] for method in methods}
        discarded = {method: 0 for method in methods}
        joint_discarded = 0
        for _, reports in _replications(spec, jset, theta, n, methods):
            missing = [method for method, report in reports.items() if not report.existence_flag]
            for method in missing:
                discarded[method] += 1
            if missing:
                joint_discarded += 1
                continue
            for method, report in reports.items():
                values[method].append(_target_value(report, method, target_vertex, cell))
        retained = spec.replications - joint_discarded
        if retained < 2:
            raise DataStarvation(n, spec.replications)
        for method in methods:
            estimates = np.array(values[method])
            rows.append(
                {
                    "method": method,
                    "n": n,
                    "variance": float(estimates.var(ddof=1)),
                    "variance_se": variance_standard_error(estimates),
                    "mean": float(estimates.mean()),
                    "discarded": discarded[method],
                    "joint_discarded": joint_discarded,
                    "retained": retained,
                }
            )
    provenance = _provenance(spec, methods)
    provenance["target_vertex"] = target_vertex
    provenance["target_cell"] = encode_cell(cell, spec.levels)
    provenance["true_value"] = theta[cell]
    return ExperimentResult("variance-sweep", provenance, rows)


def _check(rows, check, draw, vertex, hop, value, tolerance):
    rows.append(
        {
            "check": check,
            "draw": draw,
            "vertex": vertex,
            "hop": hop,
            "max_abs_diff": value,
            "pass": bool(value < tolerance),
        }
    )


def run_verification(
    graph: Graph,
    seed: int,
    draws: int,
    levels: Optional[Sequence[int]] = None,
    cfg: Optional[SolverConfig] = None,
    graph_source: str = "",
) -> ExperimentResult:
    """
    Exact numerical checks at random parameters: the marginal parameter formula against
    the marginalized joint, exempt marginal parameters against the overall ones, the
    variance ordering at every vertex, and on decomposable graphs the closed-form
    estimate against the Newton MLE.
    """
    cfg = cfg or SolverConfig()
    if draws < 1:
        raise InvalidExperimentSpec("At least one draw is needed")
    space = CellSpace(tuple(levels) if levels else (2,) * graph.vertex_count)
    space.ensure_enumerable(cfg.enumeration_guard, "verify the marginal parameter formulas")
    jset = model_jset(space, graph, cfg)
    decomposable = is_decomposable(graph)
    rows: List[Dict[str, Any]] = []
    for draw in range(draws):
        theta = random_theta(jset, make_rng(seed, VERIFY_STREAM, draw))
        events = EventProbabilities(p_from_theta(theta, cfg.enumeration_guard))
        for vertex in graph.vertices:
            for hop in (1, 2):
                model = relaxed_model(neighborhood(graph, vertex, hop), jset)
                oracle = marginal_theta_oracle(theta, model.neighborhood, cfg.enumeration_guard)
                formula = lemma_one_vector(
                    theta, model.neighborhood, model.jset.cells, cfg.enumeration_guard
                )
                _check(
                    rows,
                    "marginal-formula",
                    draw,
                    vertex,
                    hop,
                    max(abs(value - oracle[cell]) for cell, value in formula.items()),
                    LEMMA_TOLERANCE,
                )
                exempt_gap = max(
                    (
                        abs(oracle[model.restrict(cell)] - theta[cell])
                        for cell in model.classification.exempt
                    ),
                    default=0.0,
                )
                _check(rows, "exempt-equality", draw, vertex, hop, exempt_gap, LEMMA_TOLERANCE)
            ordering = verify_variance_ordering(
                theta, graph, vertex, cfg.enumeration_guard, events
            )
            for row in ordering.rows:
                rows.append(
                    {
                        "check": "variance-ordering",
                        "draw": draw,
                        "vertex": vertex,
                        "cell": row.cell,
                        "var1hop": row.var_one_hop,
                        "var2hop": row.var_two_hop,
                        "varGlobal": row.var_global,
                        "pass": row.passed,
                    }
                )
        if decomposable:
            counts = make_rng(seed, TABLE_STREAM, draw).integers(1, 50, size=space.size)
            table = ContingencyTable(space, dense=counts)
            closed_form = decomposable_theta(table, graph, cfg, jset)
            newton = newton_mle(table, jset, cfg)
            _check(
                rows,
                "decomposable-agreement",
                draw,
                None,
                None,
                float(np.max(np.abs(closed_form.values - newton.values))),
                AGREEMENT_TOLERANCE,
            )
    provenance = {
        "graph": graph_source,
        "vertex_count": graph.vertex_count,
        "edges": [list(edge) for edge in graph.sorted_edges()],
        "levels": list(space.levels),
        "seed": seed,
        "draws": draws,
        "solver": cfg.to_raw_data(),
    }
    return ExperimentResult("verify", provenance, rows)


def verification_failures(result: ExperimentResult) -> List[str]:
    return [
        ", ".join(f"{key}={value}" for key, value in row.items() if key != "pass")
        for row in result.rows
        if not row["pass"]
    ]


def raise_for_failures(result: ExperimentResult) -> None:
    failures = verification_failures(result)
    if failures:
        raise TheoremCheckFailed(failures)


def run_comparison(
    table: ContingencyTable,
    graph: Graph,
    methods: Sequence[str],
    cfg: Optional[SolverConfig] = None,
    provenance: Optional[Dict[str, Any]] = None,
) -> ExperimentResult:
    """Sum over J of |theta_hat_j - global MLE_j| for every method on one dataset."""
    cfg = cfg or SolverConfig()
    jset = model_jset(table.space, graph, cfg)
    reference = estimate(table, graph, GLOBAL, cfg, jset)
    if not reference.existence_flag:
        raise InvalidExperimentSpec(
            f"The global MLE does not exist for this table: {reference.failure}"
        )
    rows = []
    for method in methods:
        report = reference if method == GLOBAL else estimate(table, graph, method, cfg, jset)
        rows.append(
            {
                "method": method,
                "existence_flag": report.existence_flag,
                "sum_abs_difference": (
                    sum_abs_difference(report.theta_hat, reference.theta_hat)
                    if report.existence_flag
                    else None
                ),
            }
        )
    provenance = dict(provenance or {})
    provenance["solver"] = cfg.to_raw_data()
    provenance["total"] = table.total
    return ExperimentResult("compare", provenance, rows)
