import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._errors import DegenerateFisherMatrix, InvalidExperimentSpec
from ._files import encode_cell
from ._graphs import Graph, neighborhood
from ._marginals import relaxed_model
from ._model import (
    Cell,
    JSet,
    ProbabilityVector,
    ThetaVector,
    p_from_theta,
    pad_cell,
    restrict_cell,
    support,
)
from ._settings import DEFAULT_ENUMERATION_GUARD

logger = logging.getLogger(__name__)

ORDERING_SLACK = 1e-10


class EventProbabilities:
    """
    P(j ◁ i) and P(j ◁ i, j' ◁ i) under a joint distribution. Marginals are computed
    once per support set, so the same event always yields the same floating point value
    whichever model asks for it.
    """

    def __init__(self, joint: ProbabilityVector):
        self.joint = joint
        self._array = joint.as_array()
        self._marginals: Dict[Tuple[int, ...], np.ndarray] = {}

    def _marginal(self, members: Tuple[int, ...]) -> np.ndarray:
        marginal = self._marginals.get(members)
        if marginal is None:
            others = tuple(
                vertex
                for vertex in range(self.joint.space.vertex_count)
                if vertex not in members
            )
            marginal = self._array.sum(axis=others)
            self._marginals[members] = marginal
        return marginal

    def probability(self, cell: Sequence[int]) -> float:
        members = tuple(sorted(support(cell)))
        if not members:
            return 1.0
        return float(self._marginal(members)[tuple(cell[vertex] for vertex in members)])

    def joint_probability(self, a: Sequence[int], b: Sequence[int]) -> float:
        combined = list(a)
        for vertex, level in enumerate(b):
            if level:
                if combined[vertex] and combined[vertex] != level:
                    return 0.0
                combined[vertex] = level
        return self.probability(combined)


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    jset: JSet
    matrix: np.ndarray
    members: Tuple[int, ...]
    """The vertices the J-set lives on; all of V for the overall model."""

    def position(self, cell: Sequence[int]) -> int:
        return self.jset.position(cell)

    def inverse(self) -> np.ndarray:
        return _spd_inverse(self.matrix, f"over {len(self.jset)} parameters")

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))


def fisher_matrix(
    true_p: Union[ProbabilityVector, EventProbabilities],
    jset: JSet,
    members: Optional[Sequence[int]] = None,
    limit: int = DEFAULT_ENUMERATION_GUARD,
) -> FisherMatrix:
    """
    K[j, j'] = P(j ◁ i, j' ◁ i) - P(j ◁ i) P(j' ◁ i) under the true joint. A J-set over a
    marginal space I_M is handled by padding its cells with `members`; conflicting levels
    on a shared vertex make the joint event empty.
    """
    events = true_p if isinstance(true_p, EventProbabilities) else EventProbabilities(true_p)
    space = events.joint.space
    space.ensure_enumerable(limit, "build the Fisher matrix")
    if members is None:
        if jset.space != space:
            raise InvalidExperimentSpec(
                "A J-set over a marginal space needs the vertices it lives on"
            )
        members = tuple(range(space.vertex_count))
        padded = list(jset.cells)
    else:
        members = tuple(sorted(members))
        padded = [pad_cell(cell, members, space.vertex_count) for cell in jset.cells]

    singles = np.array([events.probability(cell) for cell in padded])
    matrix = np.empty((len(padded), len(padded)))
    for a, cell_a in enumerate(padded):
        for b in range(a, len(padded)):
            value = events.joint_probability(cell_a, padded[b]) - singles[a] * singles[b]
            matrix[a, b] = matrix[b, a] = value
    return FisherMatrix(jset, matrix, members)


def _spd_inverse(matrix: np.ndarray, what: str) -> np.ndarray:
    try:
        factor = cho_factor(matrix)
    except LinAlgError:
        raise DegenerateFisherMatrix(what)
    inverse = cho_solve(factor, np.eye(matrix.shape[0]))
    return (inverse + inverse.T) / 2.0


def asymptotic_variance(
    true_p: Union[ProbabilityVector, EventProbabilities],
    jset: JSet,
    n: int,
    members: Optional[Sequence[int]] = None,
    limit: int = DEFAULT_ENUMERATION_GUARD,
) -> np.ndarray:
    """K^{-1} / N."""
    if n < 1:
        raise InvalidExperimentSpec("The sample size must be positive")
    return fisher_matrix(true_p, jset, members, limit).inverse() / n


def schur_block_variance(
    fisher: Union[FisherMatrix, np.ndarray], block: Sequence[int]
) -> np.ndarray:
    """
    The block of K^{-1} on `block`, as the inverse of the Schur complement of the
    complementary block.
    """
    matrix = fisher.matrix if isinstance(fisher, FisherMatrix) else np.asarray(fisher)
    block = list(block)
    rest = [index for index in range(matrix.shape[0]) if index not in set(block)]
    inner = matrix[np.ix_(block, block)]
    if rest:
        coupling = matrix[np.ix_(block, rest)]
        try:
            factor = cho_factor(matrix[np.ix_(rest, rest)])
        except LinAlgError:
            raise DegenerateFisherMatrix("on the complementary block")
        inner = inner - coupling @ cho_solve(factor, coupling.T)
    return _spd_inverse(inner, "Schur complement")


@dataclass(frozen=True)
class VarianceOrderingRow:
    vertex: int
    cell: str
    var_one_hop: float
    var_two_hop: float
    var_global: float

    @property
    def passed(self) -> bool:
        return _not_below(self.var_one_hop, self.var_two_hop) and _not_below(
            self.var_two_hop, self.var_global
        )

    def to_raw_data(self) -> Dict[str, Any]:
        return {
            "vertex": self.vertex,
            "cell": self.cell,
            "var1hop": self.var_one_hop,
            "var2hop": self.var_two_hop,
            "varGlobal": self.var_global,
            "pass": self.passed,
        }


def _not_below(larger: float, smaller: float) -> bool:
    return larger - smaller >= -ORDERING_SLACK


@dataclass(frozen=True)
class VarianceOrderingReport:
    """Asymptotic variances per observation (N = 1) of the exempt one-hop components."""

    rows: List[VarianceOrderingRow]
    condition_numbers: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failures(self) -> List[VarianceOrderingRow]:
        return [row for row in self.rows if not row.passed]

    def to_raw_data(self) -> Dict[str, Any]:
        return {
            "condition_numbers": self.condition_numbers,
            "rows": [row.to_raw_data() for row in self.rows],
        }


def verify_variance_ordering(
    theta_true: ThetaVector,
    graph: Graph,
    vertex: int,
    limit: int = DEFAULT_ENUMERATION_GUARD,
    events: Optional[EventProbabilities] = None,
) -> VarianceOrderingReport:
    """
    Checks var(one-hop) >= var(two-hop) >= var(global) on the diagonal of the inverse
    Fisher matrices, for every j ∈ J with S(j) ⊆ M_{1,v} and S(j) ⊄ B_{1,v}. The local
    matrices use the true marginal probabilities.
    """
    jset = theta_true.jset
    events = events or EventProbabilities(p_from_theta(theta_true, limit))
    one_hop = relaxed_model(neighborhood(graph, vertex, 1), jset)
    two_hop = relaxed_model(neighborhood(graph, vertex, 2), jset)

    models = {
        "one-hop": fisher_matrix(events, one_hop.jset, one_hop.members, limit),
        "two-hop": fisher_matrix(events, two_hop.jset, two_hop.members, limit),
        "global": fisher_matrix(events, jset, None, limit),
    }
    diagonals = {}
    for name, fisher in models.items():
        try:
            diagonals[name] = np.diag(fisher.inverse())
        except DegenerateFisherMatrix as error:
            raise error.at_vertex(vertex)

    rows = []
    for cell in one_hop.classification.exempt:
        rows.append(
            VarianceOrderingRow(
                vertex,
                encode_cell(cell, jset.space.levels),
                float(diagonals["one-hop"][one_hop.jset.position(one_hop.restrict(cell))]),
                float(diagonals["two-hop"][two_hop.jset.position(two_hop.restrict(cell))]),
                float(diagonals["global"][jset.position(cell)]),
            )
        )
    report = VarianceOrderingReport(
        rows, {name: fisher.condition_number for name, fisher in models.items()}
    )
    logger.debug(
        "variance ordering at vertex %d: %d of %d rows pass",
        vertex,
        len(rows) - len(report.failures),
        len(rows),
    )
    return report


def exempt_positions(
    fisher: FisherMatrix, cells: Sequence[Cell]
) -> List[int]:
    """Positions in `fisher` of full-length cells, restricted to its vertices."""
    return [fisher.position(restrict_cell(cell, fisher.members)) for cell in cells]
