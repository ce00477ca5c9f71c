import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np
from scipy.special import logsumexp

from ._errors import (
    CapacityExceeded,
    CellSpaceMismatch,
    InvalidCellSpace,
    InvalidContingencyTable,
    InvalidGeneratingClass,
    InvalidProbabilityVector,
    InvalidThetaVector,
)
from ._settings import DEFAULT_ENUMERATION_GUARD, DEFAULT_SPARSE_THRESHOLD

logger = logging.getLogger(__name__)

Cell = Tuple[int, ...]
"""One level index per vertex; level 0 is the distinguished reference level."""

_PROBABILITY_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CellSpace:
    """The set of cells I, the product of the per-vertex level sets I_v."""

    levels: Tuple[int, ...]

    def __post_init__(self):
        levels = tuple(int(level) for level in self.levels)
        if not levels:
            raise InvalidCellSpace("A cell space needs at least one vertex")
        too_small = [vertex for vertex, level in enumerate(levels) if level < 2]
        if too_small:
            raise InvalidCellSpace(
                f"Every vertex needs at least two levels; vertices {too_small} have fewer"
            )
        object.__setattr__(self, "levels", levels)

    @classmethod
    def binary(cls, vertex_count: int) -> "CellSpace":
        return cls((2,) * vertex_count)

    @property
    def vertex_count(self) -> int:
        return len(self.levels)

    @property
    def size(self) -> int:
        # exact integer arithmetic, so the count never overflows
        return math.prod(self.levels)

    @property
    def zero_cell(self) -> Cell:
        return (0,) * self.vertex_count

    def validate_cell(self, cell: Sequence[int]) -> Cell:
        cell = tuple(int(level) for level in cell)
        if len(cell) != self.vertex_count:
            raise CellSpaceMismatch(self.vertex_count, len(cell))
        for vertex, level in enumerate(cell):
            if not 0 <= level < self.levels[vertex]:
                raise InvalidCellSpace(
                    f"Level {level} of vertex {vertex} is outside [0, {self.levels[vertex]})"
                )
        return cell

    def ensure_enumerable(self, limit: int, operation: str) -> None:
        if self.size > limit:
            raise CapacityExceeded(operation, self.size, limit)

    def cells(self) -> Iterator[Cell]:
        """Lexicographic iteration over all cells."""
        return itertools.product(*(range(level) for level in self.levels))

    def enumerate(self, limit: int = DEFAULT_ENUMERATION_GUARD) -> np.ndarray:
        """All cells as a (|I|, |V|) integer array in lexicographic order."""
        self.ensure_enumerable(limit, "enumerate all cells")
        return _enumerate_cells(self.levels)

    def index_of(self, cell: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(cell), self.levels))

    def restrict(self, members: Iterable[int]) -> "CellSpace":
        return CellSpace(tuple(self.levels[vertex] for vertex in sorted(members)))


@lru_cache(maxsize=16)
def _enumerate_cells(levels: Tuple[int, ...]) -> np.ndarray:
    cells = np.indices(levels).reshape(len(levels), -1).T
    cells.flags.writeable = False
    return cells


def support(cell: Sequence[int]) -> FrozenSet[int]:
    """S(i), the vertices at which the cell is not at level 0."""
    return frozenset(vertex for vertex, level in enumerate(cell) if level != 0)


def triangleleft(j: Sequence[int], i: Sequence[int]) -> bool:
    """
    j ◁ i: S(j) is nonempty, S(j) ⊆ S(i), and both cells agree on S(j).
    """
    if len(j) != len(i):
        raise CellSpaceMismatch(len(j), len(i))
    support_j = support(j)
    return bool(support_j) and all(i[vertex] == j[vertex] for vertex in support_j)


def triangleleft_zero(j: Sequence[int], i: Sequence[int]) -> bool:
    """The extended relation ◁₀: j ◁ i, or j is the zero cell."""
    if len(j) != len(i):
        raise CellSpaceMismatch(len(j), len(i))
    return not support(j) or triangleleft(j, i)


def subcells(j: Sequence[int]) -> Iterator[Tuple[Cell, int]]:
    """
    Yields every j' with j' ◁₀ j together with the Möbius sign (-1)^{|S(j)|-|S(j')|}.
    """
    support_j = sorted(support(j))
    for size in range(len(support_j) + 1):
        sign = -1 if (len(support_j) - size) % 2 else 1
        for kept in itertools.combinations(support_j, size):
            sub = [0] * len(j)
            for vertex in kept:
                sub[vertex] = j[vertex]
            yield tuple(sub), sign


def pad_cell(cell: Sequence[int], members: Sequence[int], vertex_count: int) -> Cell:
    """Lifts a cell of I_M to I by putting level 0 outside of M."""
    padded = [0] * vertex_count
    for vertex, level in zip(sorted(members), cell):
        padded[vertex] = level
    return tuple(padded)


def restrict_cell(cell: Sequence[int], members: Iterable[int]) -> Cell:
    return tuple(cell[vertex] for vertex in sorted(members))


@dataclass(frozen=True)
class GeneratingClass:
    """
    A downward-closed family D of vertex sets, stored through its maximal members.
    A nonempty set belongs to D iff it is contained in one of the maximal sets.
    """

    maximal_sets: Tuple[FrozenSet[int], ...]

    def __post_init__(self):
        candidates = {frozenset(members) for members in self.maximal_sets}
        candidates.discard(frozenset())
        if not candidates:
            raise InvalidGeneratingClass("A generating class needs a nonempty member")
        maximal = [
            members
            for members in candidates
            if not any(members < other for other in candidates)
        ]
        object.__setattr__(
            self,
            "maximal_sets",
            tuple(sorted(maximal, key=lambda members: (len(members), sorted(members)))),
        )

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]]) -> "GeneratingClass":
        return cls(tuple(frozenset(members) for members in sets))

    @classmethod
    def saturated(cls, vertex_count: int) -> "GeneratingClass":
        return cls((frozenset(range(vertex_count)),))

    @property
    def vertices(self) -> FrozenSet[int]:
        return frozenset().union(*self.maximal_sets)

    def contains(self, members: Iterable[int]) -> bool:
        members = frozenset(members)
        return bool(members) and any(members <= maximal for maximal in self.maximal_sets)

    def __contains__(self, members) -> bool:
        return self.contains(members)

    def members(self) -> List[FrozenSet[int]]:
        """Every nonempty member of D, by size and then lexicographically."""
        found = set()
        for maximal in self.maximal_sets:
            ordered = sorted(maximal)
            for size in range(1, len(ordered) + 1):
                found.update(
                    frozenset(subset) for subset in itertools.combinations(ordered, size)
                )
        return sorted(found, key=lambda members: (len(members), sorted(members)))


class JSet:
    """
    The cells j with S(j) ∈ D; indexes the free canonical parameters. Cells are full
    length (level 0 off S(j)) and kept in lexicographic order.
    """

    def __init__(self, space: CellSpace, cells: Iterable[Sequence[int]]):
        validated = {space.validate_cell(cell) for cell in cells}
        if space.zero_cell in validated:
            raise InvalidGeneratingClass("The zero cell carries no free parameter")
        self.space = space
        self.cells: Tuple[Cell, ...] = tuple(sorted(validated))

    @classmethod
    def saturated(cls, space: CellSpace) -> "JSet":
        return build_jset(space, GeneratingClass.saturated(space.vertex_count))

    @cached_property
    def index(self) -> Dict[Cell, int]:
        return {cell: position for position, cell in enumerate(self.cells)}

    @cached_property
    def supports(self) -> Tuple[FrozenSet[int], ...]:
        return tuple(support(cell) for cell in self.cells)

    def position(self, cell: Sequence[int]) -> int:
        return self.index[tuple(cell)]

    def generating_class(self) -> GeneratingClass:
        return GeneratingClass(tuple(set(self.supports)))

    def design_matrix(self, limit: int = DEFAULT_ENUMERATION_GUARD) -> np.ndarray:
        """The (|I|, |J|) 0/1 matrix with entry 1 iff j ◁ i."""
        self.space.ensure_enumerable(limit, "build the design matrix")
        return self._design

    @cached_property
    def _design(self) -> np.ndarray:
        cells = _enumerate_cells(self.space.levels)
        design = np.zeros((cells.shape[0], len(self.cells)))
        for position, cell in enumerate(self.cells):
            mask = np.ones(cells.shape[0], dtype=bool)
            for vertex in self.supports[position]:
                mask &= cells[:, vertex] == cell[vertex]
            design[:, position] = mask
        design.flags.writeable = False
        return design

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[Cell]:
        return iter(self.cells)

    def __contains__(self, cell) -> bool:
        return tuple(cell) in self.index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, JSet)
            and self.space == other.space
            and self.cells == other.cells
        )

    def __hash__(self) -> int:
        return hash((self.space, self.cells))

    def __repr__(self) -> str:
        return f"JSet(levels={self.space.levels}, size={len(self.cells)})"


def build_jset(space: CellSpace, generating_class: GeneratingClass) -> JSet:
    vertices = generating_class.vertices
    if vertices != frozenset(range(space.vertex_count)):
        raise InvalidGeneratingClass(
            "The generating class must cover exactly the vertices "
            f"0..{space.vertex_count - 1}, it covers {sorted(vertices)}"
        )
    cells = []
    for members in generating_class.members():
        ordered = sorted(members)
        for nonzero_levels in itertools.product(
            *(range(1, space.levels[vertex]) for vertex in ordered)
        ):
            cell = [0] * space.vertex_count
            for vertex, level in zip(ordered, nonzero_levels):
                cell[vertex] = level
            cells.append(tuple(cell))
    return JSet(space, cells)


class ThetaVector:
    """
    The canonical parameter (theta_j, j ∈ J). theta0 = log p(0) is only known when the
    cumulant could be evaluated; it is None otherwise.
    """

    def __init__(
        self, jset: JSet, values: Sequence[float], theta0: Optional[float] = None
    ):
        values = np.array(values, dtype=float)
        if values.shape != (len(jset),):
            raise InvalidThetaVector(
                f"Expected {len(jset)} parameter values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidThetaVector("Canonical parameters must be finite")
        if theta0 is not None and not math.isfinite(theta0):
            raise InvalidThetaVector("theta0 must be finite")
        values.flags.writeable = False
        self.jset = jset
        self.values = values
        self.theta0 = None if theta0 is None else float(theta0)

    @classmethod
    def zeros(cls, jset: JSet) -> "ThetaVector":
        return cls(jset, np.zeros(len(jset)))

    @classmethod
    def from_mapping(
        cls,
        jset: JSet,
        mapping: Mapping[Sequence[int], float],
        theta0: Optional[float] = None,
    ) -> "ThetaVector":
        values = np.zeros(len(jset))
        for cell, value in mapping.items():
            cell = tuple(cell)
            if cell not in jset:
                raise InvalidThetaVector(f"Cell {cell} is not part of the J-set")
            values[jset.position(cell)] = value
        return cls(jset, values, theta0)

    @property
    def space(self) -> CellSpace:
        return self.jset.space

    def __getitem__(self, cell: Sequence[int]) -> float:
        """theta_i for any cell; 0 for cells outside of J."""
        position = self.jset.index.get(tuple(cell))
        return 0.0 if position is None else float(self.values[position])

    def __len__(self) -> int:
        return len(self.values)

    def as_dict(self) -> Dict[Cell, float]:
        return {cell: float(value) for cell, value in zip(self.jset.cells, self.values)}

    def __repr__(self) -> str:
        return f"ThetaVector({self.as_dict()}, theta0={self.theta0})"


class ProbabilityVector:
    """Strictly positive cell probabilities in lexicographic cell order."""

    def __init__(self, space: CellSpace, values: Sequence[float]):
        values = np.array(values, dtype=float)
        if values.shape != (space.size,):
            raise InvalidProbabilityVector(
                f"Expected {space.size} probabilities, got shape {values.shape}"
            )
        if not np.all(values > 0):
            raise InvalidProbabilityVector(
                "Hierarchical models require every cell probability to be positive"
            )
        if abs(values.sum() - 1.0) > _PROBABILITY_SUM_TOLERANCE:
            raise InvalidProbabilityVector(
                f"Probabilities sum to {values.sum()!r} instead of 1"
            )
        values.flags.writeable = False
        self.space = space
        self.values = values

    @classmethod
    def from_weights(cls, space: CellSpace, weights: Sequence[float]) -> "ProbabilityVector":
        weights = np.asarray(weights, dtype=float)
        return cls(space, weights / weights.sum())

    @classmethod
    def from_log_weights(
        cls, space: CellSpace, log_weights: Sequence[float]
    ) -> "ProbabilityVector":
        log_weights = np.asarray(log_weights, dtype=float)
        values = np.exp(log_weights - logsumexp(log_weights))
        return cls(space, values / values.sum())

    @classmethod
    def uniform(cls, space: CellSpace) -> "ProbabilityVector":
        return cls(space, np.full(space.size, 1.0 / space.size))

    def __getitem__(self, cell: Sequence[int]) -> float:
        return float(self.values[self.space.index_of(cell)])

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.space.levels)


class ContingencyTable:
    """
    Cell counts n(i) with total N. Counts are dense (lexicographic array) at desk scale
    and a sparse cell → count map once the space has more cells than `sparse_threshold`.
    """

    def __init__(
        self,
        space: CellSpace,
        dense: Optional[np.ndarray] = None,
        sparse: Optional[Mapping[Cell, int]] = None,
    ):
        if (dense is None) == (sparse is None):
            raise InvalidContingencyTable("Pass exactly one of dense or sparse counts")
        self.space = space
        self._dense = None
        self._sparse = None
        if dense is not None:
            dense = np.array(dense).reshape(-1)
            if dense.shape != (space.size,):
                raise InvalidContingencyTable(
                    f"Expected {space.size} counts, got {dense.shape[0]}"
                )
            if np.any(dense < 0) or np.any(dense != np.round(dense)):
                raise InvalidContingencyTable("Counts must be nonnegative integers")
            dense = dense.astype(np.int64)
            dense.flags.writeable = False
            self._dense = dense
        else:
            counts = {}
            for cell, count in sparse.items():
                cell = space.validate_cell(cell)
                if count < 0 or int(count) != count:
                    raise InvalidContingencyTable("Counts must be nonnegative integers")
                if count:
                    counts[cell] = counts.get(cell, 0) + int(count)
            self._sparse = counts

    @classmethod
    def from_mapping(
        cls,
        space: CellSpace,
        counts: Mapping[Sequence[int], int],
        sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
    ) -> "ContingencyTable":
        if space.size > sparse_threshold:
            return cls(space, sparse={tuple(cell): count for cell, count in counts.items()})
        dense = np.zeros(space.size, dtype=np.int64)
        for cell, count in counts.items():
            dense[space.index_of(space.validate_cell(cell))] += count
        return cls(space, dense=dense)

    @classmethod
    def from_records(
        cls,
        space: CellSpace,
        records: np.ndarray,
        sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
    ) -> "ContingencyTable":
        """Aggregates one cell per individual into counts."""
        records = np.asarray(records, dtype=np.int64).reshape(-1, space.vertex_count)
        if records.size and (
            np.any(records < 0) or np.any(records >= np.asarray(space.levels))
        ):
            raise InvalidContingencyTable("A record has a level outside its vertex range")
        if space.size > sparse_threshold:
            return cls(space, sparse=Counter(map(tuple, records.tolist())))
        indices = (
            np.ravel_multi_index(tuple(records.T), space.levels)
            if records.size
            else np.zeros(0, dtype=np.int64)
        )
        return cls(space, dense=np.bincount(indices, minlength=space.size))

    @property
    def is_sparse(self) -> bool:
        return self._sparse is not None

    @cached_property
    def total(self) -> int:
        if self._dense is not None:
            return int(self._dense.sum())
        return sum(self._sparse.values())

    def dense_counts(self, limit: int = DEFAULT_ENUMERATION_GUARD) -> np.ndarray:
        self.space.ensure_enumerable(limit, "use dense counts")
        if self._dense is not None:
            return self._dense
        dense = np.zeros(self.space.size, dtype=np.int64)
        for cell, count in self._sparse.items():
            dense[self.space.index_of(cell)] = count
        return dense

    def smoothed_counts(
        self, epsilon: float, limit: int = DEFAULT_ENUMERATION_GUARD
    ) -> np.ndarray:
        return self.dense_counts(limit).astype(float) + epsilon

    def count(self, cell: Sequence[int]) -> int:
        cell = self.space.validate_cell(cell)
        if self._dense is not None:
            return int(self._dense[self.space.index_of(cell)])
        return self._sparse.get(cell, 0)

    def nonzero(self) -> Tuple[np.ndarray, np.ndarray]:
        """The observed cells as a (U, |V|) array and their counts."""
        if self._dense is not None:
            indices = np.flatnonzero(self._dense)
            cells = np.array(np.unravel_index(indices, self.space.levels)).T
            return cells.reshape(-1, self.space.vertex_count), self._dense[indices]
        ordered = sorted(self._sparse.items())
        cells = np.array([cell for cell, _ in ordered], dtype=np.int64)
        counts = np.array([count for _, count in ordered], dtype=np.int64)
        return cells.reshape(-1, self.space.vertex_count), counts

    def items(self) -> Iterator[Tuple[Cell, int]]:
        cells, counts = self.nonzero()
        for cell, count in zip(cells.tolist(), counts.tolist()):
            yield tuple(cell), count

    def to_records(self) -> np.ndarray:
        cells, counts = self.nonzero()
        return np.repeat(cells, counts, axis=0)

    def marginal(
        self, members: Iterable[int], sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD
    ) -> "ContingencyTable":
        """The M-marginal table over I_M, M sorted ascending."""
        members = sorted(set(members))
        marginal_space = self.space.restrict(members)
        if self._dense is not None:
            others = tuple(
                vertex for vertex in range(self.space.vertex_count) if vertex not in members
            )
            counts = self._dense.reshape(self.space.levels).sum(axis=others)
            return ContingencyTable(marginal_space, dense=counts.reshape(-1))
        counts = Counter()
        for cell, count in self._sparse.items():
            counts[restrict_cell(cell, members)] += count
        return ContingencyTable.from_mapping(marginal_space, counts, sparse_threshold)

    def __repr__(self) -> str:
        mode = "sparse" if self.is_sparse else "dense"
        return f"ContingencyTable(levels={self.space.levels}, total={self.total}, {mode})"


def theta_from_p(p: ProbabilityVector, jset: JSet) -> ThetaVector:
    """
    Möbius inversion: theta_j = Σ_{j' ◁₀ j} (-1)^{|S(j)|-|S(j')|} log p(j')/p(0), where
    p(j') is the probability of the padded cell j' in the table p lives on.
    """
    if p.space != jset.space:
        raise CellSpaceMismatch(jset.space.vertex_count, p.space.vertex_count)
    log_p = np.log(p.values)
    log_p0 = log_p[0]
    values = np.empty(len(jset))
    for position, cell in enumerate(jset.cells):
        values[position] = math.fsum(
            sign * (log_p[jset.space.index_of(sub)] - log_p0)
            for sub, sign in subcells(cell)
            if any(sub)
        )
    return ThetaVector(jset, values, theta0=float(log_p0))


def log_weights(theta: ThetaVector, limit: int = DEFAULT_ENUMERATION_GUARD) -> np.ndarray:
    """Σ_{j ◁ i} theta_j for every cell i, in lexicographic order."""
    return theta.jset.design_matrix(limit) @ theta.values


def cumulant(theta: ThetaVector, limit: int = DEFAULT_ENUMERATION_GUARD) -> float:
    """k(theta) = log Σ_i exp Σ_{j ◁ i} theta_j."""
    return float(logsumexp(log_weights(theta, limit)))


def p_from_theta(
    theta: ThetaVector, limit: int = DEFAULT_ENUMERATION_GUARD
) -> ProbabilityVector:
    """log p(i) = theta_0 + Σ_{j ◁ i} theta_j with theta_0 = -k(theta)."""
    return ProbabilityVector.from_log_weights(theta.space, log_weights(theta, limit))


def normalized(theta: ThetaVector, limit: int = DEFAULT_ENUMERATION_GUARD) -> ThetaVector:
    """The same parameter with theta0 = -k(theta) filled in."""
    return ThetaVector(theta.jset, theta.values, theta0=-cumulant(theta, limit))


def mean_parameters(
    theta: ThetaVector, limit: int = DEFAULT_ENUMERATION_GUARD
) -> np.ndarray:
    """∇k(theta): the model probability of the event j ◁ i for every j ∈ J."""
    return theta.jset.design_matrix(limit).T @ p_from_theta(theta, limit).values


def canonical_statistics(
    table: ContingencyTable, jset: JSet, limit: int = DEFAULT_ENUMERATION_GUARD
) -> np.ndarray:
    """t = (n(j_{S(j)}), j ∈ J), the marginal counts of the cells i with j ◁ i."""
    if table.space != jset.space:
        raise CellSpaceMismatch(jset.space.vertex_count, table.space.vertex_count)
    return jset.design_matrix(limit).T @ table.dense_counts(limit).astype(float)


def loglik(
    theta: ThetaVector, table: ContingencyTable, limit: int = DEFAULT_ENUMERATION_GUARD
) -> float:
    """<theta, t> - N k(theta)."""
    statistics = canonical_statistics(table, theta.jset, limit)
    return float(theta.values @ statistics - table.total * cumulant(theta, limit))


def marginal_probabilities(
    p: ProbabilityVector, members: Iterable[int]
) -> ProbabilityVector:
    members = sorted(set(members))
    others = tuple(
        vertex for vertex in range(p.space.vertex_count) if vertex not in members
    )
    marginal = p.as_array().sum(axis=others).reshape(-1)
    return ProbabilityVector.from_weights(p.space.restrict(members), marginal)
