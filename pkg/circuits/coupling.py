# circuits/coupling.py
"""Coupling maps: which physical qubit pairs may share a two-qubit gate."""

from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, Iterable, List, Tuple

import networkx as nx

from utils.error_handling import RoutingError, ValidationError

MAP_NAMES = ('all_to_all', 'line', 't_shaped', 'custom')


@dataclass(frozen=True)
class CouplingMap:
    n_physical: int
    edges: FrozenSet[Tuple[int, int]]
    name: str = 'custom'

    def __post_init__(self):
        if self.name not in MAP_NAMES:
            raise ValidationError(f"coupling map name must be one of {MAP_NAMES}", field='name')
        if self.n_physical < 1:
            raise ValidationError("a coupling map needs at least one qubit", field='n_physical')
        edges = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b or not (0 <= a < self.n_physical and 0 <= b < self.n_physical):
                raise ValidationError(f"edge ({a}, {b}) is invalid for {self.n_physical} qubits", field='edges')
            edges.add((min(a, b), max(a, b)))
        object.__setattr__(self, 'edges', frozenset(edges))
        if not nx.is_connected(self.graph):
            raise RoutingError(f"coupling map {self.name!r} is not connected")

    @cached_property
    def graph(self) -> nx.Graph:
        # nodes and edges inserted in sorted order so path queries are deterministic
        g = nx.Graph()
        g.add_nodes_from(range(self.n_physical))
        g.add_edges_from(sorted(self.edges))
        return g

    def are_connected(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def shortest_path(self, a: int, b: int) -> List[int]:
        return nx.shortest_path(self.graph, a, b)

    @property
    def is_all_to_all(self) -> bool:
        n = self.n_physical
        return len(self.edges) == n * (n - 1) // 2

    @classmethod
    def all_to_all(cls, n: int) -> 'CouplingMap':
        return cls(n, frozenset((a, b) for a in range(n) for b in range(a + 1, n)), 'all_to_all')

    @classmethod
    def line(cls, n: int) -> 'CouplingMap':
        return cls(n, frozenset((q, q + 1) for q in range(n - 1)), 'line')

    @classmethod
    def t_shaped(cls, n: int) -> 'CouplingMap':
        """0-1-2 bar with a stem 1-3-4-...; the five-qubit case is the usual T device."""
        if n < 4:
            return cls.line(n) if n > 0 else cls(1, frozenset(), 'line')
        edges = {(0, 1), (1, 2), (1, 3)}
        edges.update((q, q + 1) for q in range(3, n - 1))
        return cls(n, frozenset(edges), 't_shaped')

    @classmethod
    def custom(cls, n: int, edges: Iterable[Tuple[int, int]]) -> 'CouplingMap':
        return cls(n, frozenset(tuple(e) for e in edges), 'custom')

    @classmethod
    def by_name(cls, name: str, n: int) -> 'CouplingMap':
        factories = {
            'all': cls.all_to_all, 'all_to_all': cls.all_to_all,
            'line': cls.line,
            't': cls.t_shaped, 't_shaped': cls.t_shaped,
        }
        if name not in factories:
            raise ValidationError(f"unknown coupling map {name!r}", field='coupling')
        return factories[name](n)
