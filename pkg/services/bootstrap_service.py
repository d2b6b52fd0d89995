"""
Bootstrap non paramétrique des structures et confiance des caractéristiques.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from services.bernoulli_moments import estimate_moments
from services.independence_tests import CiStatistic, CiTestKind
from services.structure_learning import DEFAULT_MAX_COND, DEFAULT_MAX_ITER, grow_shrink, hill_climb
from storage.graphs import EdgeIndexer, skeleton_of
from utils.errors import InvalidArgumentError, LearnerError, VariabilityError
from utils.rng import derive_seed, substream

logger = logging.getLogger(__name__)

DEFAULT_TABU_LENGTH = 10
LEARNER_SPECS = ("gs-g2", "gs-x2", "hc", "tabu")


@dataclass(frozen=True)
class LearnerConfig:
    """
    Algorithme d'apprentissage et ses paramètres.

    Attributes:
        name (str): Spécification d'origine (gs-g2, gs-x2, hc, tabu)
        algorithm (str): "gs" ou "hc"
        test (CiTestKind): Test d'indépendance (Grow-Shrink)
        tabu_length (int): Liste tabou (hill-climbing)
    """
    name: str
    algorithm: str
    test: CiTestKind = CiTestKind()
    tabu_length: int = 0
    max_cond: int = DEFAULT_MAX_COND
    max_iter: int = DEFAULT_MAX_ITER
    restarts: int = 0
    perturb: int = 1

    @classmethod
    def parse(cls, spec, alpha=0.05, **options):
        """
        Construit une configuration à partir de son nom.

        Args:
            spec (str): gs-g2, gs-x2, hc ou tabu
            alpha (float): Seuil des tests (Grow-Shrink)
            **options: max_cond, max_iter, restarts, perturb

        Raises:
            InvalidArgumentError: Spécification inconnue
        """
        spec = str(spec).strip().lower()
        if spec == "gs-g2":
            return cls(spec, "gs", test=CiTestKind(CiStatistic.G2, alpha), **options)
        if spec == "gs-x2":
            return cls(spec, "gs", test=CiTestKind(CiStatistic.PEARSON_X2, alpha), **options)
        if spec == "hc":
            return cls(spec, "hc", **options)
        if spec == "tabu":
            return cls(spec, "hc", tabu_length=DEFAULT_TABU_LENGTH, **options)
        raise InvalidArgumentError(
            f"Algorithme inconnu '{spec}' (attendu: {', '.join(LEARNER_SPECS)})"
        )

    def learn(self, data, seed=0):
        """Applique l'algorithme et renvoie le DAG appris."""
        if self.algorithm == "gs":
            return grow_shrink(data, self.test, seed=seed, max_cond=self.max_cond)
        return hill_climb(
            data, score="bic", tabu_length=self.tabu_length, max_iter=self.max_iter,
            seed=seed, restarts=self.restarts, perturb=self.perturb
        )

    def to_dict(self):
        return {
            "name": self.name,
            "algorithm": self.algorithm,
            "test": self.test.statistic.value,
            "alpha": self.test.alpha,
            "tabu_length": self.tabu_length,
            "max_cond": self.max_cond,
            "max_iter": self.max_iter,
            "restarts": self.restarts,
            "perturb": self.perturb
        }


def _replicate(data, learner, seed, b):
    try:
        resample = data.resample(substream(seed, b))
        dag = learner.learn(resample, seed=derive_seed(seed, b))
    except (VariabilityError, ValueError, ArithmeticError) as exc:
        raise LearnerError(b, exc)
    logger.debug("Réplique %d: %d arcs", b, len(dag.arcs))
    return skeleton_of(dag)


def bootstrap_skeletons(data, learner, m, seed, n_jobs=1):
    """
    Bootstrap non paramétrique : m rééchantillonnages, un apprentissage chacun.

    La réplique b utilise le sous-flux (seed, b) ; l'ordre de la liste
    renvoyée est celui des répliques.

    Args:
        data (CategoricalDataset): Données d'origine
        learner (LearnerConfig): Algorithme
        m (int): Nombre de répliques (>= 1)
        seed (int): Graine
        n_jobs (int): Nombre de workers joblib

    Returns:
        list: m squelettes

    Raises:
        LearnerError: Échec d'une réplique (avec son indice)
    """
    if m < 1:
        raise InvalidArgumentError(f"Il faut au moins une réplique bootstrap (m={m})")
    logger.info("Bootstrap: %d répliques, algorithme %s, n=%d", m, learner.name, data.n)
    if n_jobs == 1:
        return [_replicate(data, learner, seed, b) for b in range(m)]
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_replicate)(data, learner, seed, b) for b in range(m)
    )


def _feature_pairs(feature):
    return {(min(a, b), max(a, b)) for a, b in feature}


def feature_confidence(samples, feature):
    """
    Confiance d'une caractéristique : fréquence des squelettes qui la contiennent.

    Args:
        samples (list): Squelettes (non vide)
        feature (iterable): Ensemble d'arêtes (paires de nœuds)

    Returns:
        float: Fraction des échantillons contenant toutes les arêtes
    """
    if not samples:
        raise InvalidArgumentError("Liste d'échantillons vide")
    wanted = _feature_pairs(feature)
    hits = sum(1 for sample in samples if wanted <= sample.edges)
    return hits / len(samples)


def edge_strengths(samples, labels=None):
    """
    Force de chaque arête candidate (fréquence bootstrap p̂ᵢ).

    Args:
        samples (list): Squelettes
        labels (list): Libellés des nœuds (indices à défaut)

    Returns:
        pandas.DataFrame: Colonnes edge, from, to, strength (une ligne par arête)
    """
    moments = estimate_moments(samples)
    indexer = EdgeIndexer(samples[0].node_count)
    names = list(labels) if labels is not None else [str(i) for i in range(indexer.v)]
    pairs = indexer.pairs()
    return pd.DataFrame({
        "edge": np.arange(indexer.k),
        "from": [names[a] for a, _ in pairs],
        "to": [names[b] for _, b in pairs],
        "strength": moments.p_hat
    })


def parse_edge_list(text, node_count):
    """
    Décode une liste `a-b,c-d` en indices d'arêtes.

    Returns:
        list: Indices triés des arêtes candidates
    """
    indexer = EdgeIndexer(node_count)
    indices = set()
    for token in str(text).split(","):
        token = token.strip()
        parts = token.split("-")
        if len(parts) != 2 or not all(part.strip().isdigit() for part in parts):
            raise InvalidArgumentError(f"Arête mal formée '{token}' (format a-b)")
        indices.add(indexer.index(int(parts[0]), int(parts[1])))
    return sorted(indices)
