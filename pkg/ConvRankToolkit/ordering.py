"""
Total orders from scores versus orders from pairwise comparators.

When a pairwise comparator is a sign-preserving function of a score
difference, sorting by score gives the same order as building the full
preference graph and topologically sorting it. The graph route is
quadratic and only serves as a test oracle.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InconsistentComparatorError, PreconditionError

logger = logging.getLogger(__name__)


def rank_by_score(scores):
    """Indices by descending score, ties broken by ascending index."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    # lexsort keys are applied last-first
    return [int(i) for i in np.lexsort((np.arange(scores.size), -scores))]


@dataclass(frozen=True)
class PreferenceGraph:
    n: int
    edges: frozenset

    def successors(self):
        adjacency = [[] for _ in range(self.n)]
        for i, j in sorted(self.edges):
            adjacency[i].append(j)
        return adjacency

    def is_tournament(self):
        return all(
            ((i, j) in self.edges) != ((j, i) in self.edges)
            for i in range(self.n)
            for j in range(i + 1, self.n)
        )

    def with_edge(self, i, j):
        return PreferenceGraph(self.n, self.edges | {(i, j)})


def build_graph(h, n):
    """Edge (i, j) whenever ``h(i, j) > 0``; evaluates all ordered pairs."""
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            forward = h(i, j) > 0
            reverse = h(j, i) > 0
            if forward and reverse:
                raise InconsistentComparatorError(
                    f'comparator prefers both {i} over {j} and {j} over {i}'
                )
            if forward:
                edges.add((i, j))
            if reverse:
                edges.add((j, i))
    return PreferenceGraph(n=n, edges=frozenset(edges))


@dataclass(frozen=True)
class TopoSortResult:
    order: Optional[list]
    unique: bool
    cycle: Optional[frozenset] = None

    @property
    def has_cycle(self):
        return self.cycle is not None


def topo_sort(graph):
    """
    Kahn's algorithm. A cycle is reported (not raised) with the vertices
    still carrying in-degree when the queue runs dry as witness. The order
    is unique iff every consecutive pair is joined by an edge.
    """
    indegree = [0] * graph.n
    adjacency = graph.successors()
    for _, j in graph.edges:
        indegree[j] += 1

    ready = deque(v for v in range(graph.n) if indegree[v] == 0)
    order = []
    while ready:
        vertex = ready.popleft()
        order.append(vertex)
        for successor in adjacency[vertex]:
            indegree[successor] -= 1
            if indegree[successor] == 0:
                ready.append(successor)

    if len(order) < graph.n:
        witness = frozenset(v for v in range(graph.n) if indegree[v] > 0)
        logger.debug('cycle detected among %s', sorted(witness))
        return TopoSortResult(order=None, unique=False, cycle=witness)

    unique = all((a, b) in graph.edges for a, b in zip(order, order[1:]))
    return TopoSortResult(order=order, unique=unique)


def verify_score_order(f, n, psi=None):
    """
    Check that the order induced by the comparator ``psi(f(i) - f(j))`` equals
    the descending-score order of ``f``. ``f`` is a callable on indices or a
    sequence of scores; ``psi`` must preserve sign (identity by default).
    """
    psi = psi or (lambda x: x)
    scores = [float(f(i)) for i in range(n)] if callable(f) else [float(s) for s in f]
    if len(scores) != n:
        raise PreconditionError(f'expected {n} scores, got {len(scores)}')
    if len(set(scores)) != len(scores):
        raise PreconditionError('score function has ties; the comparator would have ties too')

    graph = build_graph(lambda i, j: psi(scores[i] - scores[j]), n)
    result = topo_sort(graph)
    if result.has_cycle or not result.unique:
        logger.warning('induced graph on %d items has no unique topological sort', n)
        return False
    return result.order == rank_by_score(scores)
