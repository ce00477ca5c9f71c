import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx

from ._errors import CapacityExceeded, InvalidGraph, NotDecomposable
from ._model import GeneratingClass
from ._settings import DEFAULT_MAX_CLIQUES

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph on the vertices 0..vertex_count-1."""

    vertex_count: int
    edges: FrozenSet[Edge]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise InvalidGraph("A graph needs at least one vertex")
        normalized = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidGraph(f"Self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise InvalidGraph(
                    f"Edge ({u}, {v}) leaves the vertex range 0..{self.vertex_count - 1}"
                )
            edge = (min(u, v), max(u, v))
            if edge in normalized:
                raise InvalidGraph(f"Duplicate edge {edge}")
            normalized.add(edge)
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Edge]) -> "Graph":
        return cls(vertex_count, frozenset(tuple(edge) for edge in edges))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        """Relabels the nodes 0..n-1 in sorted node order."""
        labels = {node: index for index, node in enumerate(sorted(graph.nodes))}
        return cls.from_edges(
            len(labels), ((labels[u], labels[v]) for u, v in graph.edges)
        )

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.vertex_count))
        graph.add_edges_from(self.edges)
        return graph

    @cached_property
    def adjacency(self) -> Tuple[FrozenSet[int], ...]:
        neighbours = [set() for _ in range(self.vertex_count)]
        for u, v in self.edges:
            neighbours[u].add(v)
            neighbours[v].add(u)
        return tuple(frozenset(members) for members in neighbours)

    def neighbours(self, vertex: int) -> FrozenSet[int]:
        return self.adjacency[vertex]

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)


@dataclass(frozen=True)
class Neighborhood:
    """
    M_v, the vertices within `hop` steps of `center`, and its buffer B_v: the members
    adjacent to some vertex outside of M_v.
    """

    center: int
    hop: int
    members: FrozenSet[int]
    buffer: FrozenSet[int]

    @property
    def sorted_members(self) -> List[int]:
        return sorted(self.members)

    def __repr__(self) -> str:
        return (
            f"Neighborhood(center={self.center}, hop={self.hop}, "
            f"members={sorted(self.members)}, buffer={sorted(self.buffer)})"
        )


def neighborhood(graph: Graph, vertex: int, hop: int = 1) -> Neighborhood:
    if not 0 <= vertex < graph.vertex_count:
        raise InvalidGraph(f"Vertex {vertex} is not part of the graph")
    if hop not in (1, 2):
        raise InvalidGraph(f"Neighborhoods have hop 1 or 2, not {hop}")
    members = {vertex} | graph.neighbours(vertex)
    if hop == 2:
        for neighbour in graph.neighbours(vertex):
            members |= graph.neighbours(neighbour)
    buffer = frozenset(
        member
        for member in members
        if any(other not in members for other in graph.neighbours(member))
    )
    return Neighborhood(vertex, hop, frozenset(members), buffer)


def maximal_cliques(
    graph: Graph, max_cliques: int = DEFAULT_MAX_CLIQUES
) -> List[FrozenSet[int]]:
    """Exact Bron–Kerbosch enumeration; isolated vertices come back as singletons."""
    cliques = []
    for clique in nx.find_cliques(graph.to_networkx()):
        if len(cliques) >= max_cliques:
            raise CapacityExceeded("enumerate maximal cliques", len(cliques) + 1, max_cliques)
        cliques.append(frozenset(clique))
    return sorted(cliques, key=lambda clique: (len(clique), sorted(clique)))


def cliques_generating_class(
    graph: Graph, max_cliques: int = DEFAULT_MAX_CLIQUES
) -> GeneratingClass:
    return GeneratingClass(tuple(maximal_cliques(graph, max_cliques)))


def is_decomposable(graph: Graph) -> bool:
    return nx.is_chordal(graph.to_networkx())


@dataclass(frozen=True)
class JunctionTree:
    cliques: Tuple[FrozenSet[int], ...]
    separators: Tuple[FrozenSet[int], ...]
    """One entry per tree edge, so a separator appears with its multiplicity."""
    edges: Tuple[Tuple[int, int], ...]


def junction_tree(
    graph: Graph, max_cliques: int = DEFAULT_MAX_CLIQUES
) -> JunctionTree:
    """
    A maximum-weight spanning tree of the clique intersection graph. For a chordal graph
    this has the running intersection property; empty separators between components are
    left out.
    """
    if not is_decomposable(graph):
        raise NotDecomposable()
    cliques = maximal_cliques(graph, max_cliques)
    clique_graph = nx.Graph()
    clique_graph.add_nodes_from(range(len(cliques)))
    for a, b in itertools.combinations(range(len(cliques)), 2):
        overlap = cliques[a] & cliques[b]
        if overlap:
            clique_graph.add_edge(a, b, weight=len(overlap))
    tree = nx.maximum_spanning_tree(clique_graph)
    tree_edges = sorted((min(a, b), max(a, b)) for a, b in tree.edges)
    separators = tuple(cliques[a] & cliques[b] for a, b in tree_edges)
    logger.debug(
        "junction tree with %d cliques and %d separators", len(cliques), len(separators)
    )
    return JunctionTree(tuple(cliques), separators, tuple(tree_edges))


def make_lattice(k: int) -> Graph:
    """k×k four-neighbour lattice without wraparound; vertex r*k + c sits at (r, c)."""
    if k < 2:
        raise InvalidGraph("A lattice needs k >= 2")
    return Graph.from_networkx(
        nx.convert_node_labels_to_integers(nx.grid_2d_graph(k, k), ordering="sorted")
    )


def make_random_graph(n: int, edge_prob: float, seed: int) -> Graph:
    """Erdős–Rényi G(n, p); the same seed always gives the same graph."""
    if not 0.0 <= edge_prob <= 1.0:
        raise InvalidGraph(f"Edge probability {edge_prob} is outside [0, 1]")
    if n < 1:
        raise InvalidGraph("A graph needs at least one vertex")
    return Graph.from_networkx(nx.gnp_random_graph(n, edge_prob, seed=seed))


def make_star(n_leaves: int) -> Graph:
    """Center vertex 0 joined to the leaves 1..n_leaves."""
    if n_leaves < 1:
        raise InvalidGraph("A star needs at least one leaf")
    return Graph.from_networkx(nx.star_graph(n_leaves))


def make_path(n: int) -> Graph:
    if n < 1:
        raise InvalidGraph("A path needs at least one vertex")
    return Graph.from_networkx(nx.path_graph(n))


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise InvalidGraph("A cycle needs at least three vertices")
    return Graph.from_networkx(nx.cycle_graph(n))


def make_complete(n: int) -> Graph:
    if n < 1:
        raise InvalidGraph("A complete graph needs at least one vertex")
    return Graph.from_networkx(nx.complete_graph(n))


def make_empty(n: int) -> Graph:
    if n < 1:
        raise InvalidGraph("A graph needs at least one vertex")
    return Graph(n, frozenset())


GENERATORS = {
    "lattice": make_lattice,
    "star": make_star,
    "path": make_path,
    "cycle": make_cycle,
    "complete": make_complete,
    "empty": make_empty,
    "random": make_random_graph,
}


def parse_generator(expression: str, seed: Optional[int] = None) -> Graph:
    """
    Builds a graph from `lattice:K`, `star:L`, `path:N`, `cycle:N`, `complete:N`,
    `empty:N` or `random:N:P[:SEED]`. A random graph without an inline seed uses `seed`.
    """
    name, *arguments = expression.split(":")
    if name not in GENERATORS:
        raise InvalidGraph(
            f"Unknown graph generator {name!r}; use one of {', '.join(GENERATORS)}"
        )
    try:
        if name == "random":
            if len(arguments) not in (2, 3):
                raise InvalidGraph("Use random:N:P[:SEED]")
            graph_seed = int(arguments[2]) if len(arguments) == 3 else seed
            if graph_seed is None:
                raise InvalidGraph("A random graph needs a seed")
            return make_random_graph(int(arguments[0]), float(arguments[1]), graph_seed)
        if len(arguments) != 1:
            raise InvalidGraph(f"Use {name}:N")
        return GENERATORS[name](int(arguments[0]))
    except ValueError:
        raise InvalidGraph(f"Could not parse the graph expression {expression!r}")
