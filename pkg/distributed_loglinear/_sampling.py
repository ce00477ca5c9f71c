import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import softmax

from ._errors import InvalidExperimentSpec
from ._graphs import Graph
from ._model import (
    CellSpace,
    ContingencyTable,
    JSet,
    ThetaVector,
    p_from_theta,
    support,
)
from ._settings import (
    DEFAULT_BURN_IN,
    DEFAULT_ENUMERATION_GUARD,
    DEFAULT_SPARSE_THRESHOLD,
    DEFAULT_THINNING,
)

logger = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int], np.random.Generator]

EXACT = "exact"
GIBBS = "gibbs"


def make_rng(seed: SeedLike, *stream: int) -> np.random.Generator:
    """Independent, reproducible streams: (seed, stream...) always gives the same draws."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng([int(seed), *stream])
    return np.random.default_rng([*seed, *stream])


@dataclass(frozen=True, eq=False)
class SampleSet:
    """One cell per individual; `table` is the aggregated contingency table."""

    space: CellSpace
    records: np.ndarray
    method: str
    theta: Optional[ThetaVector] = None
    seed: Optional[Tuple[int, ...]] = None
    sparse_threshold: int = field(default=DEFAULT_SPARSE_THRESHOLD, repr=False)

    @property
    def size(self) -> int:
        return int(self.records.shape[0])

    @cached_property
    def table(self) -> ContingencyTable:
        return ContingencyTable.from_records(
            self.space, self.records, self.sparse_threshold
        )


def random_theta(
    jset: JSet, seed: SeedLike, low: float = -1.0, high: float = 1.0
) -> ThetaVector:
    """I.i.d. uniform components on [low, high]."""
    if not low < high:
        raise InvalidExperimentSpec(f"Empty parameter range [{low}, {high}]")
    rng = make_rng(seed)
    return ThetaVector(jset, rng.uniform(low, high, size=len(jset)))


def exact_sample(
    theta: ThetaVector,
    n: int,
    seed: SeedLike,
    limit: int = DEFAULT_ENUMERATION_GUARD,
    sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
) -> SampleSet:
    """Inverse-CDF draws over the lexicographic cell order."""
    if n < 0:
        raise InvalidExperimentSpec("The sample size must not be negative")
    space = theta.space
    probabilities = p_from_theta(theta, limit).values
    cumulative = np.cumsum(probabilities)
    rng = make_rng(seed)
    indices = np.searchsorted(cumulative, rng.random(n) * cumulative[-1], side="right")
    indices = np.minimum(indices, space.size - 1)
    records = np.array(np.unravel_index(indices, space.levels), dtype=np.int64).T
    return SampleSet(
        space,
        records.reshape(n, space.vertex_count),
        EXACT,
        theta,
        _seed_tuple(seed),
        sparse_threshold,
    )


@dataclass(frozen=True)
class _SiteTerms:
    """The components theta_j with v ∈ S(j), as arrays over those j."""

    levels: np.ndarray
    """j_v for every component."""
    others: np.ndarray
    """The other vertices any of the components depend on."""
    required: np.ndarray
    """(components, others) levels the other vertices must take; -1 where free."""
    values: np.ndarray


def _site_terms(theta: ThetaVector) -> List[_SiteTerms]:
    collected = [[] for _ in range(theta.space.vertex_count)]
    for cell, value in zip(theta.jset.cells, theta.values):
        for vertex in support(cell):
            collected[vertex].append((cell, float(value)))
    sites = []
    for vertex, terms in enumerate(collected):
        others = sorted(
            {other for cell, _ in terms for other in support(cell)} - {vertex}
        )
        required = np.full((len(terms), len(others)), -1, dtype=np.int64)
        for row, (cell, _) in enumerate(terms):
            for column, other in enumerate(others):
                if cell[other] != 0:
                    required[row, column] = cell[other]
        sites.append(
            _SiteTerms(
                np.array([cell[vertex] for cell, _ in terms], dtype=np.int64),
                np.array(others, dtype=np.int64),
                required,
                np.array([value for _, value in terms]),
            )
        )
    return sites


def gibbs_sample(
    theta: ThetaVector,
    graph: Optional[Graph],
    n: int,
    burn_in: int = DEFAULT_BURN_IN,
    thinning: int = DEFAULT_THINNING,
    seed: SeedLike = 0,
    sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
) -> SampleSet:
    """
    Single-site systematic-scan Gibbs sampler. The conditional of x_v only involves the
    components theta_j with v ∈ S(j), so no cell enumeration takes place; one state is
    recorded after every `thinning` full scans once `burn_in` scans are done.
    """
    space = theta.space
    if graph is not None and graph.vertex_count != space.vertex_count:
        raise InvalidExperimentSpec(
            f"The graph has {graph.vertex_count} vertices but the model has "
            f"{space.vertex_count}"
        )
    if n < 0 or burn_in < 0 or thinning < 1:
        raise InvalidExperimentSpec(
            "Gibbs sampling needs n >= 0, burn_in >= 0 and thinning >= 1"
        )
    rng = make_rng(seed)
    sites = _site_terms(theta)
    levels = space.levels
    vertex_count = space.vertex_count
    state = np.zeros(vertex_count, dtype=np.int64)
    records = np.zeros((n, vertex_count), dtype=np.int64)

    def scan(uniforms):
        for vertex, site in enumerate(sites):
            active = np.all(
                (site.required < 0) | (site.required == state[site.others]), axis=1
            )
            scores = np.bincount(
                site.levels, weights=site.values * active, minlength=levels[vertex]
            )
            cumulative = np.cumsum(softmax(scores))
            state[vertex] = min(
                int(np.searchsorted(cumulative, uniforms[vertex])), levels[vertex] - 1
            )

    for _ in range(burn_in):
        scan(rng.random(vertex_count))
    for record in range(n):
        for _ in range(thinning):
            scan(rng.random(vertex_count))
        records[record] = state
    logger.debug(
        "gibbs: %d records after %d burn-in scans, thinning %d", n, burn_in, thinning
    )
    return SampleSet(
        space, records, GIBBS, theta, _seed_tuple(seed), sparse_threshold
    )


def draw_samples(
    theta: ThetaVector,
    graph: Optional[Graph],
    n: int,
    seed: SeedLike,
    enumeration_guard: int = DEFAULT_ENUMERATION_GUARD,
    burn_in: int = DEFAULT_BURN_IN,
    thinning: int = DEFAULT_THINNING,
    sampler: Optional[str] = None,
    sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
) -> SampleSet:
    """Exact sampling within the enumeration guard, Gibbs sampling beyond it."""
    if sampler is None:
        sampler = EXACT if theta.space.size <= enumeration_guard else GIBBS
        if sampler == GIBBS:
            logger.info(
                "%d cells exceed the enumeration guard, falling back to Gibbs sampling",
                theta.space.size,
            )
    if sampler == EXACT:
        return exact_sample(theta, n, seed, enumeration_guard, sparse_threshold)
    if sampler == GIBBS:
        return gibbs_sample(
            theta, graph, n, burn_in, thinning, seed, sparse_threshold
        )
    raise InvalidExperimentSpec(f"Unknown sampler {sampler!r}; use exact or gibbs")


def _seed_tuple(seed: SeedLike) -> Optional[Tuple[int, ...]]:
    if isinstance(seed, np.random.Generator):
        return None
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(part) for part in seed)
