import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from ._errors import CellSpaceMismatch
from ._graphs import Neighborhood
from ._model import (
    Cell,
    ContingencyTable,
    GeneratingClass,
    JSet,
    ThetaVector,
    build_jset,
    log_weights,
    marginal_probabilities,
    p_from_theta,
    pad_cell,
    restrict_cell,
    subcells,
    support,
    theta_from_p,
)
from ._sampling import random_theta
from ._settings import DEFAULT_ENUMERATION_GUARD

logger = logging.getLogger(__name__)

RELAXED = "relaxed"
EXACT = "exact"

_SUPPORT_THRESHOLD = 1e-8
_SUPPORT_DRAWS = 3


@dataclass(frozen=True)
class BufferClassification:
    """
    Full-length cells of the relaxed model at one neighborhood. `exempt` holds the j ∈ J
    with S(j) ⊆ M_v and S(j) ⊄ B_v, whose marginal parameter equals the overall one;
    `buffered` holds every cell with nonempty support inside B_v.
    """

    exempt: Tuple[Cell, ...]
    buffered: Tuple[Cell, ...]


@dataclass(frozen=True)
class MarginalModel:
    neighborhood: Neighborhood
    jset: JSet
    """Over the restricted cell space I_{M_v}."""
    kind: str
    classification: Optional[BufferClassification] = None

    @property
    def members(self) -> Sequence[int]:
        return self.neighborhood.sorted_members

    def pad(self, cell: Sequence[int], vertex_count: int) -> Cell:
        return pad_cell(cell, self.members, vertex_count)

    def restrict(self, cell: Sequence[int]) -> Cell:
        return restrict_cell(cell, self.members)


def marginal_table(table: ContingencyTable, members: Iterable[int]) -> ContingencyTable:
    return table.marginal(members)


def classify_buffer(nb: Neighborhood, jset_full: JSet) -> BufferClassification:
    exempt = tuple(
        cell
        for cell, cell_support in zip(jset_full.cells, jset_full.supports)
        if cell_support <= nb.members and not cell_support <= nb.buffer
    )
    levels = jset_full.space.levels
    buffer = sorted(nb.buffer)
    buffered = []
    for buffer_levels in itertools.product(*(range(levels[vertex]) for vertex in buffer)):
        if not any(buffer_levels):
            continue
        cell = [0] * jset_full.space.vertex_count
        for vertex, level in zip(buffer, buffer_levels):
            cell[vertex] = level
        buffered.append(tuple(cell))
    return BufferClassification(exempt, tuple(sorted(buffered)))


def relaxed_jset(nb: Neighborhood, jset_full: JSet) -> JSet:
    return relaxed_model(nb, jset_full).jset


def relaxed_model(nb: Neighborhood, jset_full: JSet) -> MarginalModel:
    """
    The relaxed marginal model on M_v: the overall constraints are kept away from the
    buffer and the buffer itself is saturated.
    """
    classification = classify_buffer(nb, jset_full)
    members = nb.sorted_members
    space = jset_full.space.restrict(members)
    jset = JSet(
        space,
        (
            restrict_cell(cell, members)
            for cell in itertools.chain(classification.exempt, classification.buffered)
        ),
    )
    return MarginalModel(nb, jset, RELAXED, classification)


def marginal_theta_oracle(
    theta: ThetaVector, nb: Neighborhood, limit: int = DEFAULT_ENUMERATION_GUARD
) -> ThetaVector:
    """
    The exact marginal parameter θ^{M_v}: the full joint is computed from θ, summed down
    to M_v, and Möbius-inverted over the saturated J-set of I_{M_v}.
    """
    joint = p_from_theta(theta, limit)
    marginal = marginal_probabilities(joint, nb.members)
    return theta_from_p(marginal, JSet.saturated(marginal.space))


def _log_normalizers(
    theta: ThetaVector, members: Sequence[int], limit: int
) -> Tuple[np.ndarray, Tuple[int, ...]]:
    space = theta.space
    cells = space.enumerate(limit)
    weights = log_weights(theta, limit)
    marginal_levels = tuple(space.levels[vertex] for vertex in members)
    groups = np.ravel_multi_index(tuple(cells[:, members].T), marginal_levels)
    group_count = int(np.prod(marginal_levels))

    shift = np.full(group_count, -np.inf)
    np.maximum.at(shift, groups, weights)
    totals = np.bincount(
        groups, weights=np.exp(weights - shift[groups]), minlength=group_count
    )
    group_lse = shift + np.log(totals)

    marginal_cells = np.indices(marginal_levels).reshape(len(members), -1).T
    padded = np.zeros((group_count, space.vertex_count), dtype=np.int64)
    padded[:, members] = marginal_cells
    padded_weights = weights[np.ravel_multi_index(tuple(padded.T), space.levels)]
    return group_lse - padded_weights, marginal_levels


def lemma_one_vector(
    theta: ThetaVector,
    nb: Neighborhood,
    cells: Optional[Iterable[Sequence[int]]] = None,
    limit: int = DEFAULT_ENUMERATION_GUARD,
) -> Dict[Cell, float]:
    """
    Evaluates, for marginal cells j of I_{M_v},

        θ^{M_v}_j = θ_j + Σ_{j' ◁₀ j} (-1)^{|S(j)|-|S(j')|} log Σ_{i: i_M = j'} exp Σ_{k ◁ i, k ⋪ j'} θ_k

    with every cell of the same group handled by one grouped log-sum-exp. The padded
    cell j' itself contributes the leading 1 of each sum. Defaults to every nonzero cell
    of I_{M_v}.
    """
    members = nb.sorted_members
    log_normalizer, marginal_levels = _log_normalizers(theta, members, limit)
    if cells is None:
        cells = (
            cell
            for cell in itertools.product(*(range(level) for level in marginal_levels))
            if any(cell)
        )
    vertex_count = theta.space.vertex_count
    values = {}
    for cell in cells:
        cell = tuple(int(level) for level in cell)
        if len(cell) != len(members):
            raise CellSpaceMismatch(len(members), len(cell))
        total = theta[pad_cell(cell, members, vertex_count)]
        for sub, sign in subcells(cell):
            total += sign * log_normalizer[np.ravel_multi_index(sub, marginal_levels)]
        values[cell] = float(total)
    return values


def lemma_one_formula(
    theta: ThetaVector,
    nb: Neighborhood,
    j: Sequence[int],
    limit: int = DEFAULT_ENUMERATION_GUARD,
) -> float:
    return lemma_one_vector(theta, nb, [j], limit)[tuple(j)]


def exact_marginal_model(
    jset_full: JSet,
    nb: Neighborhood,
    seed: int = 0,
    limit: int = DEFAULT_ENUMERATION_GUARD,
) -> MarginalModel:
    """
    The marginal generating class D^{M_v}, found as the supports of the marginal
    parameters which stay nonzero at several generic random θ.
    """
    rng = np.random.default_rng(seed)
    persistent = None
    for _ in range(_SUPPORT_DRAWS):
        theta = random_theta(jset_full, rng)
        marginal = marginal_theta_oracle(theta, nb, limit)
        nonzero = {
            support(cell)
            for cell, value in zip(marginal.jset.cells, marginal.values)
            if abs(value) > _SUPPORT_THRESHOLD
        }
        persistent = nonzero if persistent is None else persistent & nonzero
    space = jset_full.space.restrict(nb.members)
    generating_class = GeneratingClass(tuple(persistent))
    logger.debug(
        "detected marginal generating class at vertex %d: %s",
        nb.center,
        [sorted(members) for members in generating_class.maximal_sets],
    )
    return MarginalModel(nb, build_jset(space, generating_class), EXACT)
