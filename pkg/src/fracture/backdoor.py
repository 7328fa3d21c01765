"""Fracture backdoors: deletion sets that leave only small components.

The search runs on the incidence graph.  ``D`` is the set of vertices the
mode allows us to delete.
"""

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .model import IlpInstance, IncidenceGraph, incidence_graph, _check_vertex_ids


class BackdoorMode(Enum):
    VARIABLE = "variable"
    CONSTRAINT = "constraint"
    MIXED = "mixed"

    def allowed(self, graph: IncidenceGraph) -> FrozenSet[int]:
        if self is BackdoorMode.VARIABLE:
            return frozenset(range(graph.n_variables))
        if self is BackdoorMode.CONSTRAINT:
            return frozenset(range(graph.n_variables, graph.n_vertices))
        return frozenset(range(graph.n_vertices))


@dataclass(frozen=True)
class Backdoor:
    vertices: FrozenSet[int]
    ell: int

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        if self.ell < 1:
            raise ValueError("compactness bound must be positive")

    @property
    def size(self):
        return len(self.vertices)

    def split(self, n_variables: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Sorted variable indices and constraint indices of the deletion set."""
        zv = tuple(sorted(v for v in self.vertices if v < n_variables))
        zc = tuple(sorted(v - n_variables for v in self.vertices if v >= n_variables))
        return zv, zc

    def mode(self, n_variables: int) -> BackdoorMode:
        zv, zc = self.split(n_variables)
        if zv and zc:
            return BackdoorMode.MIXED
        return BackdoorMode.CONSTRAINT if zc else BackdoorMode.VARIABLE


def verify_backdoor(instance: IlpInstance, Z: Iterable[int], ell: int, mode: BackdoorMode) -> bool:
    graph = incidence_graph(instance)
    Z = _check_vertex_ids(Z, graph.n_vertices)
    if not Z <= mode.allowed(graph):
        return False
    return all(c.size <= ell for c in graph.components(Z))


# ------------------------------------------------------------ search core


def _parts(adj, alive) -> List[List[int]]:
    """Connected pieces of the subgraph induced by ``alive``, ordered by smallest vertex."""
    seen = set()
    out = []
    for start in sorted(alive):
        if start in seen:
            continue
        seen.add(start)
        stack = [start]
        part = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in alive and w not in seen:
                    seen.add(w)
                    part.append(w)
                    stack.append(w)
        out.append(part)
    return out


def _connected_prefix(adj, alive, start, size) -> List[int]:
    """First ``size`` vertices reached by depth-first search from ``start``."""
    order = []
    seen = {start}
    stack = [start]
    while stack and len(order) < size:
        v = stack.pop()
        order.append(v)
        for w in reversed(adj[v]):
            if w in alive and w not in seen:
                seen.add(w)
                stack.append(w)
    return order


def _branch(adj, alive: FrozenSet[int], allowed, bound: int, budget: int) -> Optional[FrozenSet[int]]:
    parts = _parts(adj, alive)
    big = [p for p in parts if len(p) > bound]
    if not big:
        return frozenset()
    if len(parts) > 1:
        chosen = set()
        left = budget
        for part in big:
            found = None
            for own in range(left + 1):
                found = _branch(adj, frozenset(part), allowed, bound, own)
                if found is not None:
                    break
            if found is None:
                return None
            chosen |= found
            left -= len(found)
        return frozenset(chosen)
    if budget == 0:
        return None
    piece = _connected_prefix(adj, alive, min(alive), bound + 1)
    for v in sorted(v for v in piece if v in allowed):
        found = _branch(adj, alive - {v}, allowed, bound, budget - 1)
        if found is not None:
            return found | {v}
    return None


def small_component_deletion(adj: Sequence[Sequence[int]], allowed: Iterable[int], bound: int,
                             budget: int) -> Optional[FrozenSet[int]]:
    """Delete at most ``budget`` vertices of ``allowed`` so every component has at most ``bound`` vertices."""
    return _branch(adj, frozenset(range(len(adj))), frozenset(allowed), bound, budget)


def greedy_component_deletion(adj: Sequence[Sequence[int]], allowed: Iterable[int],
                              bound: int) -> Optional[FrozenSet[int]]:
    allowed = frozenset(allowed)
    alive = set(range(len(adj)))
    chosen = set()
    while True:
        big = next((p for p in _parts(adj, alive) if len(p) > bound), None)
        if big is None:
            return frozenset(chosen)
        piece = _connected_prefix(adj, alive, min(big), bound + 1)
        take = [v for v in piece if v in allowed]
        if not take:
            return None
        chosen.update(take)
        alive.difference_update(take)


# ---------------------------------------------------------------- public


def find_backdoor_exact(instance: IlpInstance, k: int, mode: BackdoorMode) -> Optional[Backdoor]:
    """A deletion set of at most ``k`` vertices leaving components of at most ``k`` vertices."""
    if k < 1:
        raise ValueError("k must be positive")
    graph = incidence_graph(instance)
    found = small_component_deletion(graph.adjacency, mode.allowed(graph), k, k)
    return None if found is None else Backdoor(found, k)


def find_backdoor_approx(instance: IlpInstance, k: int, mode: BackdoorMode) -> Optional[Backdoor]:
    """Greedy deletion; at most ``k(k+1)`` vertices whenever a size-``k`` solution exists."""
    if k < 1:
        raise ValueError("k must be positive")
    graph = incidence_graph(instance)
    found = greedy_component_deletion(graph.adjacency, mode.allowed(graph), k)
    return None if found is None else Backdoor(found, k)


def fracture_number(instance: IlpInstance, mode: BackdoorMode, k_max: int) -> Optional[Tuple[int, Backdoor]]:
    if k_max < 1:
        raise ValueError("k_max must be positive")
    graph = incidence_graph(instance)
    allowed = mode.allowed(graph)
    for k in range(1, k_max + 1):
        found = small_component_deletion(graph.adjacency, allowed, k, k)
        if found is not None:
            return k, Backdoor(found, k)
    return None
