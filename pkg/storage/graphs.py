"""
Modèles de graphes : DAG, squelette non orienté et indexation des arêtes.

L'identité d'un nœud est sa position dans `node_labels` ; les libellés ne
servent qu'à l'affichage.
"""
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np

from utils.errors import InvalidArgumentError


class EdgeIndexer:
    """
    Bijection entre les paires non ordonnées (a, b), a < b, et 0..k-1.

    L'ordre est lexicographique sur (a, b) : pour v = 3,
    (0,1) -> 0, (0,2) -> 1, (1,2) -> 2.
    """

    def __init__(self, v):
        if v < 0:
            raise InvalidArgumentError(f"Nombre de nœuds invalide: {v}")
        self.v = int(v)
        self.k = self.v * (self.v - 1) // 2
        # Indice de la première paire (a, a+1) de chaque ligne a
        self._offsets = [a * self.v - a * (a + 1) // 2 for a in range(max(self.v - 1, 0))]

    def index(self, a, b):
        """
        Rang lexicographique de la paire {a, b}.

        Args:
            a (int): Premier nœud
            b (int): Second nœud (l'ordre n'a pas d'importance)

        Returns:
            int: Indice dans 0..k-1

        Raises:
            InvalidArgumentError: Paire réflexive ou nœud hors limites
        """
        a, b = int(a), int(b)
        if a == b:
            raise InvalidArgumentError(f"Paire réflexive ({a},{b}) non autorisée")
        if not (0 <= a < self.v and 0 <= b < self.v):
            raise InvalidArgumentError(f"Nœud hors limites dans ({a},{b}) pour v={self.v}")
        if a > b:
            a, b = b, a
        return self._offsets[a] + (b - a - 1)

    def pair(self, idx):
        """
        Paire (a, b), a < b, associée à un indice.

        Args:
            idx (int): Indice dans 0..k-1

        Returns:
            tuple: (a, b)
        """
        idx = int(idx)
        if not 0 <= idx < self.k:
            raise InvalidArgumentError(f"Indice d'arête {idx} hors de 0..{self.k - 1}")
        a = bisect_right(self._offsets, idx) - 1
        return a, a + 1 + idx - self._offsets[a]

    def pairs(self):
        """Toutes les paires dans l'ordre des indices."""
        return [(a, b) for a in range(self.v) for b in range(a + 1, self.v)]

    def __eq__(self, other):
        return isinstance(other, EdgeIndexer) and other.v == self.v

    def __hash__(self):
        return hash(("EdgeIndexer", self.v))

    def __repr__(self):
        return f"<EdgeIndexer v={self.v} k={self.k}>"


def edge_index(pair, indexer):
    """
    Indice d'une paire non ordonnée de nœuds.

    Args:
        pair (tuple): Deux nœuds distincts
        indexer (EdgeIndexer): Indexeur du graphe

    Returns:
        int: Rang lexicographique de (min, max)
    """
    a, b = pair
    return indexer.index(a, b)


def edge_pair(idx, indexer):
    """Opération inverse de `edge_index`."""
    return indexer.pair(idx)


@dataclass(frozen=True)
class Dag:
    """
    Graphe orienté acyclique sur des nœuds libellés.

    Les arcs sont des paires (queue, tête) d'indices de nœuds.
    """
    node_labels: tuple
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, 'node_labels', tuple(str(label) for label in self.node_labels))
        object.__setattr__(self, 'arcs', frozenset((int(a), int(b)) for a, b in self.arcs))

        if len(set(self.node_labels)) != len(self.node_labels):
            raise InvalidArgumentError("Les libellés de nœuds doivent être distincts")
        v = len(self.node_labels)
        for tail, head in self.arcs:
            if tail == head:
                raise InvalidArgumentError(f"Boucle sur le nœud {tail}")
            if not (0 <= tail < v and 0 <= head < v):
                raise InvalidArgumentError(f"Arc ({tail},{head}) hors limites pour v={v}")
            if (head, tail) in self.arcs:
                raise InvalidArgumentError(f"Arcs opposés entre {tail} et {head}")
        if not nx.is_directed_acyclic_graph(self.graph):
            raise InvalidArgumentError("Le graphe contient un cycle orienté")

    @classmethod
    def empty(cls, node_labels):
        """DAG sans arc."""
        return cls(tuple(node_labels), frozenset())

    @property
    def v(self):
        return len(self.node_labels)

    @cached_property
    def graph(self):
        """Vue networkx (DiGraph) du DAG."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.node_labels)))
        graph.add_edges_from(self.arcs)
        return graph

    def parents(self, node):
        """Parents d'un nœud, triés par indice."""
        return tuple(sorted(tail for tail, head in self.arcs if head == node))

    def topological_order(self):
        """Ordre topologique, à égalité le plus petit indice d'abord."""
        return list(nx.lexicographical_topological_sort(self.graph))

    def to_dict(self):
        """Convertir en dictionnaire."""
        return {
            "nodes": list(self.node_labels),
            "arcs": [[self.node_labels[a], self.node_labels[b]] for a, b in sorted(self.arcs)]
        }

    def __repr__(self):
        return f"<Dag v={self.v} arcs={len(self.arcs)}>"


@dataclass(frozen=True)
class Skeleton:
    """
    Graphe non orienté : unité d'observation du bootstrap.

    Les arêtes sont des paires (i, j) avec i < j.
    """
    node_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        normalized = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise InvalidArgumentError(f"Boucle sur le nœud {a}")
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise InvalidArgumentError(f"Arête ({a},{b}) hors limites pour v={self.node_count}")
            normalized.add((min(a, b), max(a, b)))
        object.__setattr__(self, 'node_count', int(self.node_count))
        object.__setattr__(self, 'edges', frozenset(normalized))

    def indicator(self, indexer=None):
        """
        Vecteur de présence des k arêtes candidates.

        Args:
            indexer (EdgeIndexer): Indexeur (créé si absent)

        Returns:
            numpy.ndarray: Vecteur uint8 de longueur k
        """
        indexer = indexer or EdgeIndexer(self.node_count)
        vector = np.zeros(indexer.k, dtype=np.uint8)
        for a, b in self.edges:
            vector[indexer.index(a, b)] = 1
        return vector

    @classmethod
    def from_indicator(cls, vector, node_count):
        """Reconstruit un squelette à partir de son vecteur de présence."""
        indexer = EdgeIndexer(node_count)
        if len(vector) != indexer.k:
            raise InvalidArgumentError(f"Vecteur de longueur {len(vector)} au lieu de {indexer.k}")
        edges = frozenset(indexer.pair(i) for i in np.flatnonzero(np.asarray(vector)))
        return cls(node_count, edges)

    def sorted_edges(self):
        """Arêtes triées lexicographiquement."""
        return sorted(self.edges)

    def __repr__(self):
        return f"<Skeleton v={self.node_count} edges={len(self.edges)}>"


def skeleton_of(dag):
    """
    Squelette (biorientation unique) d'un DAG.

    Args:
        dag (Dag): DAG valide

    Returns:
        Skeleton: Arête {a,b} présente ssi l'arc (a,b) ou (b,a) l'est
    """
    return Skeleton(dag.v, frozenset((min(a, b), max(a, b)) for a, b in dag.arcs))
