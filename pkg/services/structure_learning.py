"""
Apprentissage de structure discret : échantillonnage avant, score BIC,
hill-climbing / TABU et Grow-Shrink.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from itertools import combinations

import networkx as nx
import numpy as np

from services.independence_tests import CiTestKind, ci_test
from storage.datasets import CategoricalDataset
from storage.graphs import Dag
from utils.errors import InvalidArgumentError
from utils.rng import substream

logger = logging.getLogger(__name__)

SCORE_EPSILON = 1e-10
DEFAULT_MAX_ITER = 1000
DEFAULT_MAX_COND = 4


def forward_sample(bn, n, seed):
    """
    Échantillonnage avant (ordre topologique) d'un réseau bayésien.

    Args:
        bn (BayesNet): Réseau
        n (int): Nombre de lignes
        seed (int ou numpy.random.Generator): Graine ou générateur

    Returns:
        CategoricalDataset: n lignes i.i.d.
    """
    if n < 1:
        raise InvalidArgumentError(f"Taille d'échantillon invalide: n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    data = np.zeros((n, bn.dag.v), dtype=np.int64)
    for node in bn.dag.topological_order():
        parents = list(bn.parent_order[node])
        rows = bn.row_index(node, data[:, parents])
        cumulative = np.cumsum(bn.cpts[node], axis=1)[rows]
        draws = rng.random(n)
        values = np.count_nonzero(draws[:, None] >= cumulative, axis=1)
        data[:, node] = np.minimum(values, len(bn.levels[node]) - 1)
    return CategoricalDataset(bn.names, bn.levels, data)


# ==================== SCORE BIC ====================

class BicScorer:
    """
    Score BIC décomposable avec cache des termes locaux.

    Terme local : log-vraisemblance multinomiale maximisée du nœud sachant
    ses parents, moins (r - 1) q / 2 · ln n.
    """

    def __init__(self, data):
        self.data = data
        self.log_n = math.log(data.n)
        self._cache = {}

    def local(self, node, parents):
        """Terme local de `node` pour l'ensemble de parents donné."""
        key = (node, frozenset(parents))
        if key not in self._cache:
            self._cache[key] = self._compute(node, sorted(parents))
        return self._cache[key]

    def _compute(self, node, parents):
        counts = self.data.level_counts
        r = counts[node]
        config = np.zeros(self.data.n, dtype=np.int64)
        q = 1
        for parent in parents:
            config = config * counts[parent] + self.data.data[:, parent]
            q *= counts[parent]
        table = np.bincount(config * r + self.data.data[:, node], minlength=q * r).reshape(q, r).astype(float)
        totals = table.sum(axis=1, keepdims=True)
        ratio = np.divide(table, totals, out=np.ones_like(table), where=table > 0)
        log_likelihood = float(np.sum(table * np.log(ratio)))
        return log_likelihood - (r - 1) * q / 2.0 * self.log_n

    def score(self, dag):
        """Score total d'un DAG."""
        return sum(self.local(node, dag.parents(node)) for node in range(dag.v))


def bic_score(dag, data, scorer=None):
    """
    Score BIC d'un DAG sur des données.

    Args:
        dag (Dag): Structure (mêmes variables que les données)
        data (CategoricalDataset): Données
        scorer (BicScorer): Cache réutilisable (optionnel)

    Returns:
        float: Σ_nœuds [log-vraisemblance - (d/2) ln n]
    """
    if dag.node_labels != data.names:
        raise InvalidArgumentError("Les nœuds du DAG doivent correspondre aux variables")
    return (scorer or BicScorer(data)).score(dag)


# ==================== HILL-CLIMBING / TABU ====================

class MoveType(IntEnum):
    """Mouvement élémentaire ; l'ordre sert au départage."""
    ADD = 0
    DELETE = 1
    REVERSE = 2


@dataclass(frozen=True, order=True)
class Move:
    kind: MoveType
    tail: int
    head: int

    def inverse(self):
        """Mouvement qui annule celui-ci."""
        if self.kind is MoveType.ADD:
            return Move(MoveType.DELETE, self.tail, self.head)
        if self.kind is MoveType.DELETE:
            return Move(MoveType.ADD, self.tail, self.head)
        return Move(MoveType.REVERSE, self.head, self.tail)


class _SearchState:
    """DAG modifiable pendant la recherche."""

    def __init__(self, v, arcs=()):
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(range(v))
        self.graph.add_edges_from(arcs)

    def parents(self, node):
        return set(self.graph.predecessors(node))

    def legal_moves(self):
        """Mouvements qui préservent l'acyclicité, triés (type, queue, tête)."""
        graph = self.graph
        moves = []
        for tail in graph.nodes:
            for head in graph.nodes:
                if tail == head:
                    continue
                if graph.has_edge(tail, head):
                    moves.append(Move(MoveType.DELETE, tail, head))
                    graph.remove_edge(tail, head)
                    if not nx.has_path(graph, tail, head):
                        moves.append(Move(MoveType.REVERSE, tail, head))
                    graph.add_edge(tail, head)
                elif not graph.has_edge(head, tail) and not nx.has_path(graph, head, tail):
                    moves.append(Move(MoveType.ADD, tail, head))
        return sorted(moves)

    def delta(self, move, scorer):
        tail, head = move.tail, move.head
        head_parents = self.parents(head)
        if move.kind is MoveType.ADD:
            return scorer.local(head, head_parents | {tail}) - scorer.local(head, head_parents)
        if move.kind is MoveType.DELETE:
            return scorer.local(head, head_parents - {tail}) - scorer.local(head, head_parents)
        tail_parents = self.parents(tail)
        return (scorer.local(head, head_parents - {tail}) - scorer.local(head, head_parents)
                + scorer.local(tail, tail_parents | {head}) - scorer.local(tail, tail_parents))

    def apply(self, move):
        if move.kind is MoveType.ADD:
            self.graph.add_edge(move.tail, move.head)
        elif move.kind is MoveType.DELETE:
            self.graph.remove_edge(move.tail, move.head)
        else:
            self.graph.remove_edge(move.tail, move.head)
            self.graph.add_edge(move.head, move.tail)

    def arcs(self):
        return frozenset(self.graph.edges)


def _search(start_arcs, v, scorer, tabu_length, max_iter):
    """Une descente (gloutonne ou TABU) ; renvoie (arcs, score) du meilleur DAG."""
    state = _SearchState(v, start_arcs)
    current = sum(scorer.local(node, state.parents(node)) for node in range(v))
    best_arcs, best_score = state.arcs(), current
    tabu = deque(maxlen=tabu_length) if tabu_length > 0 else None
    stale = 0

    for iteration in range(max_iter):
        chosen, chosen_delta = None, -math.inf
        for move in state.legal_moves():
            if tabu is not None and move in tabu:
                continue
            delta = state.delta(move, scorer)
            if delta > chosen_delta + SCORE_EPSILON:
                chosen, chosen_delta = move, delta

        if chosen is None:
            break
        if tabu is None and chosen_delta <= SCORE_EPSILON:
            break

        state.apply(chosen)
        current += chosen_delta
        logger.debug("Itération %d: %s %d->%d (delta %.4f)", iteration, chosen.kind.name,
                     chosen.tail, chosen.head, chosen_delta)
        if tabu is not None:
            tabu.append(chosen.inverse())

        if current > best_score + SCORE_EPSILON:
            best_arcs, best_score = state.arcs(), current
            stale = 0
        else:
            stale += 1
            if tabu is not None and stale >= tabu_length:
                break

    return best_arcs, best_score


def hill_climb(data, score="bic", tabu_length=0, max_iter=DEFAULT_MAX_ITER, seed=0,
               restarts=0, perturb=1):
    """
    Recherche locale sur les DAG (ajout, suppression, inversion d'arc).

    Avec tabu_length > 0 : les mouvements récemment annulés sont interdits et
    le meilleur mouvement non améliorant est pris en l'absence d'amélioration ;
    arrêt après tabu_length pas sans améliorer le meilleur score.

    Args:
        data (CategoricalDataset): Données
        score (str): Score ("bic")
        tabu_length (int): Taille de la liste tabou (0 = hill-climbing simple)
        max_iter (int): Nombre maximal de mouvements par descente
        seed (int): Graine des perturbations entre redémarrages
        restarts (int): Nombre de redémarrages
        perturb (int): Mouvements aléatoires appliqués à chaque redémarrage

    Returns:
        Dag: Meilleur DAG trouvé
    """
    if score != "bic":
        raise InvalidArgumentError(f"Score inconnu: {score}")
    if tabu_length < 0 or max_iter < 0 or restarts < 0 or perturb < 0:
        raise InvalidArgumentError("Paramètres de recherche négatifs")

    scorer = BicScorer(data)
    v = data.p
    best_arcs, best_score = _search(frozenset(), v, scorer, tabu_length, max_iter)

    if max_iter > 0:
        for restart in range(1, restarts + 1):
            rng = substream(seed, restart)
            state = _SearchState(v, best_arcs)
            for _ in range(perturb):
                moves = state.legal_moves()
                if not moves:
                    break
                state.apply(moves[int(rng.integers(len(moves)))])
            arcs, restart_score = _search(state.arcs(), v, scorer, tabu_length, max_iter)
            logger.debug("Redémarrage %d: score %.4f (meilleur %.4f)", restart, restart_score, best_score)
            if restart_score > best_score + SCORE_EPSILON:
                best_arcs, best_score = arcs, restart_score

    return Dag(data.names, best_arcs)


# ==================== GROW-SHRINK ====================

def _capped(blanket, max_cond):
    """Ensemble conditionnant limité aux max_cond premiers membres."""
    return tuple(blanket[:max_cond])


def markov_blanket(data, target, test, order, max_cond=DEFAULT_MAX_COND):
    """
    Couverture de Markov de `target` (phases grow puis shrink).

    Args:
        order (list): Ordre de départage des candidats à p-value égale

    Returns:
        list: Membres de la couverture, dans l'ordre d'ajout
    """
    blanket = []
    while True:
        best, best_p = None, None
        for candidate in order:
            if candidate == target or candidate in blanket:
                continue
            p = ci_test(data, target, candidate, _capped(blanket, max_cond), test).p_value
            if p <= test.alpha and (best_p is None or p < best_p):
                best, best_p = candidate, p
        if best is None:
            break
        blanket.append(best)

    for member in list(blanket):
        rest = [other for other in blanket if other != member]
        if ci_test(data, target, member, _capped(rest, max_cond), test).p_value > test.alpha:
            blanket.remove(member)
    return blanket


def _separating_set(data, x, y, candidates, test, max_cond):
    """Premier sous-ensemble (par taille croissante) qui rend x ⟂ y, sinon None."""
    for size in range(min(len(candidates), max_cond) + 1):
        for subset in combinations(sorted(candidates), size):
            if ci_test(data, x, y, subset, test).p_value > test.alpha:
                return set(subset)
    return None


def _add_arc(graph, tail, head):
    """Ajoute tail -> head si l'arc ne crée pas de cycle."""
    if graph.has_edge(tail, head) or graph.has_edge(head, tail):
        return graph.has_edge(tail, head)
    if nx.has_path(graph, head, tail):
        return False
    graph.add_edge(tail, head)
    return True


def grow_shrink(data, test=None, seed=0, max_cond=DEFAULT_MAX_COND):
    """
    Algorithme Grow-Shrink.

    1. Couverture de Markov de chaque variable (grow / shrink)
    2. Correction de symétrie : Y ∈ MB(X) ssi X ∈ MB(Y)
    3. Voisins : X - Y adjacents si aucun sous-ensemble conditionnant de la
       plus petite couverture ne les sépare
    4. Orientation des v-structures X -> Z <- Y
    5. Arêtes restantes orientées selon l'ordre des variables (acyclicité garantie)

    Args:
        data (CategoricalDataset): Données
        test (CiTestKind): Test d'indépendance (G², α = 0.05 par défaut)
        seed (int): Graine du départage dans la phase grow
        max_cond (int): Taille maximale des ensembles conditionnants

    Returns:
        Dag: Structure apprise
    """
    test = test or CiTestKind()
    if max_cond < 0:
        raise InvalidArgumentError(f"max_cond négatif: {max_cond}")
    v = data.p
    order = [int(i) for i in substream(seed).permutation(v)]

    blankets = {x: set(markov_blanket(data, x, test, order, max_cond)) for x in range(v)}
    for x in range(v):
        blankets[x] = {y for y in blankets[x] if x in blankets[y]}

    neighbors = {x: set() for x in range(v)}
    sepsets = {}
    for x in range(v):
        for y in sorted(blankets[x]):
            if y < x:
                continue
            candidates = min(blankets[x] - {y}, blankets[y] - {x}, key=lambda s: (len(s), sorted(s)))
            separator = _separating_set(data, x, y, candidates, test, max_cond)
            if separator is None:
                neighbors[x].add(y)
                neighbors[y].add(x)
            else:
                sepsets[(x, y)] = separator
    logger.debug("Grow-Shrink: %d arêtes", sum(len(n) for n in neighbors.values()) // 2)

    graph = nx.DiGraph()
    graph.add_nodes_from(range(v))
    for (x, y), separator in sorted(sepsets.items()):
        for z in sorted(neighbors[x] & neighbors[y]):
            if z not in separator:
                _add_arc(graph, x, z)
                _add_arc(graph, y, z)

    for x in range(v):
        for y in sorted(neighbors[x]):
            if y > x and not _add_arc(graph, x, y):
                _add_arc(graph, y, x)

    return Dag(data.names, frozenset(graph.edges))
