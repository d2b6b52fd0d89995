"""
Moments de Bernoulli multivariée des arêtes d'un ensemble de squelettes.

Chaque arête candidate e_i est une variable de Bernoulli ; p̂ᵢ et p̂ᵢⱼ sont
les fréquences (simples et jointes) observées sur les échantillons bootstrap.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from joblib import Parallel, delayed

from storage.graphs import EdgeIndexer
from utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

MAX_ENUMERATION_NODES = 5
COUNT_CHUNK_ROWS = 4096


class EntropyClass(str, Enum):
    """Régime d'entropie de l'ensemble des squelettes."""
    MINIMUM = "minimum"
    INTERMEDIATE = "intermediate"
    MAXIMUM = "maximum"


@dataclass(frozen=True)
class EdgeMoments:
    """
    Moments d'ordre 1 et 2 des arêtes.

    Attributes:
        m (int): Nombre d'échantillons (None si chargé depuis un CSV)
        p_hat (numpy.ndarray): Fréquences p̂ᵢ, longueur k
        p_pair_hat (numpy.ndarray): Fréquences jointes p̂ᵢⱼ, k x k (diagonale = p̂)
        edge_ids (tuple): Indices des arêtes candidates représentées
        pair_counts (numpy.ndarray): Comptages entiers (m * p̂ᵢⱼ) si connus
    """
    m: int
    p_hat: np.ndarray
    p_pair_hat: np.ndarray
    edge_ids: tuple = None
    pair_counts: np.ndarray = None

    def __post_init__(self):
        if self.edge_ids is None:
            object.__setattr__(self, 'edge_ids', tuple(range(len(self.p_hat))))

    @property
    def k(self):
        return len(self.p_hat)

    @classmethod
    def from_pairs(cls, p_pair_hat, m=None, edge_ids=None):
        """Construit les moments à partir de la matrice p̂ᵢⱼ seule."""
        pairs = np.array(p_pair_hat, dtype=float)
        return cls(m=m, p_hat=np.diag(pairs).copy(), p_pair_hat=pairs, edge_ids=edge_ids)

    def exact_pairs(self):
        """
        Fréquences jointes en arithmétique rationnelle.

        Returns:
            list: Matrice k x k de Fraction (nécessite les comptages)
        """
        if self.pair_counts is None or not self.m:
            raise InvalidArgumentError("Comptages entiers indisponibles pour ces moments")
        return [[Fraction(int(count), self.m) for count in row] for row in self.pair_counts]

    def check(self, tol=1e-12):
        """
        Vérifie les contraintes des moments de Bernoulli.

        Returns:
            list: Violations détectées (vide si valide)
        """
        p, pairs = self.p_hat, self.p_pair_hat
        issues = []
        if np.any(pairs < -tol) or np.any(pairs > 1 + tol):
            issues.append("entrées hors de [0,1]")
        if not np.allclose(np.diag(pairs), p, atol=tol):
            issues.append("diagonale différente de p̂")
        if np.any(pairs > np.minimum.outer(p, p) + tol):
            issues.append("p̂ᵢⱼ > min(p̂ᵢ, p̂ⱼ)")
        if np.any(pairs < np.maximum(0.0, np.add.outer(p, p) - 1.0) - tol):
            issues.append("p̂ᵢⱼ < max(0, p̂ᵢ + p̂ⱼ - 1)")
        if self.pair_counts is not None and self.m:
            if not np.array_equal(self.pair_counts / self.m, pairs):
                issues.append("entrées non multiples de 1/m")
        return issues

    def to_dict(self):
        """Convertir en dictionnaire."""
        return {
            "m": self.m,
            "k": self.k,
            "edge_ids": list(self.edge_ids),
            "p_hat": self.p_hat.tolist(),
            "p_pair_hat": self.p_pair_hat.tolist()
        }


@dataclass(frozen=True)
class CovMatrix:
    """
    Matrice de covariance k x k d'un vecteur de Bernoulli multivarié.

    En population : symétrique, diagonale dans [0, 1/4], |σᵢⱼ| <= 1/4,
    semi-définie positive.
    """
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidArgumentError(f"Matrice carrée attendue, forme {entries.shape}")
        if not np.allclose(entries, entries.T, rtol=0.0, atol=1e-12):
            raise InvalidArgumentError("Matrice de covariance non symétrique")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    @property
    def k(self):
        return self.entries.shape[0]

    @classmethod
    def scaled_identity(cls, k, scale=0.25):
        """(scale) I_k ; la valeur par défaut est le cas d'entropie maximale."""
        return cls(scale * np.eye(k))

    @classmethod
    def zeros(cls, k):
        """Matrice nulle (entropie minimale)."""
        return cls(np.zeros((k, k)))

    def submatrix(self, indices):
        """Sous-matrice principale sur les indices donnés."""
        indices = list(indices)
        return CovMatrix(self.entries[np.ix_(indices, indices)])

    def within_bounds(self, tol=1e-12):
        """Vrai si la diagonale est dans [0, 1/4] et |σᵢⱼ| <= 1/4."""
        diagonal = np.diag(self.entries)
        return bool(
            np.all(diagonal >= -tol)
            and np.all(diagonal <= 0.25 + tol)
            and np.all(np.abs(self.entries) <= 0.25 + tol)
        )

    def to_dict(self):
        """Convertir en dictionnaire."""
        return {"k": self.k, "entries": self.entries.tolist()}


def presence_matrix(samples, indexer=None):
    """
    Matrice m x k de présence des arêtes (une ligne par squelette).

    Raises:
        InvalidArgumentError: Liste vide ou nombres de nœuds incohérents
    """
    if not samples:
        raise InvalidArgumentError("Liste d'échantillons vide")
    node_counts = {sample.node_count for sample in samples}
    if len(node_counts) != 1:
        raise InvalidArgumentError(f"Nombres de nœuds incohérents: {sorted(node_counts)}")
    indexer = indexer or EdgeIndexer(node_counts.pop())
    return np.stack([sample.indicator(indexer) for sample in samples])


def _pair_counts(rows):
    rows = rows.astype(np.int64)
    return rows.T @ rows


def count_pairs(presence, n_jobs=1):
    """
    Comptages entiers des présences simultanées (matrice k x k).

    Le découpage en blocs de lignes est fixe ; la somme entière est
    identique quel que soit le nombre de workers.
    """
    chunks = [presence[start:start + COUNT_CHUNK_ROWS]
              for start in range(0, presence.shape[0], COUNT_CHUNK_ROWS)]
    if n_jobs == 1 or len(chunks) == 1:
        partials = [_pair_counts(chunk) for chunk in chunks]
    else:
        partials = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_pair_counts)(chunk) for chunk in chunks
        )
    return sum(partials[1:], partials[0])


def estimate_moments(samples, restrict_to=None, n_jobs=1):
    """
    Estime p̂ᵢ et p̂ᵢⱼ à partir d'une liste de squelettes.

    Args:
        samples (list): Squelettes (au moins un, même nombre de nœuds)
        restrict_to (iterable): Sous-ensemble optionnel d'indices d'arêtes W
        n_jobs (int): Nombre de workers pour le comptage

    Returns:
        EdgeMoments: Moments sur W (toutes les arêtes par défaut)
    """
    presence = presence_matrix(samples)
    k = presence.shape[1]
    if restrict_to is None:
        edge_ids = tuple(range(k))
    else:
        edge_ids = tuple(sorted(set(int(i) for i in restrict_to)))
        invalid = [i for i in edge_ids if not 0 <= i < k]
        if invalid:
            raise InvalidArgumentError(f"Indices d'arêtes invalides: {invalid} (k={k})")
        presence = presence[:, list(edge_ids)]

    m = presence.shape[0]
    counts = count_pairs(presence, n_jobs=n_jobs)
    pairs = counts / m
    logger.debug("Moments estimés sur %d échantillons, %d arêtes", m, len(edge_ids))
    return EdgeMoments(
        m=m,
        p_hat=np.diag(pairs).copy(),
        p_pair_hat=pairs,
        edge_ids=edge_ids,
        pair_counts=counts
    )


def covariance_from_moments(moments):
    """
    Matrice de covariance : σᵢᵢ = p̂ᵢ - p̂ᵢ², σᵢⱼ = p̂ᵢⱼ - p̂ᵢp̂ⱼ.

    Args:
        moments (EdgeMoments): Moments valides

    Returns:
        CovMatrix: Covariance (forme « plug-in », diviseur m)
    """
    p = moments.p_hat
    sigma = moments.p_pair_hat - np.outer(p, p)
    np.fill_diagonal(sigma, p - p * p)
    return CovMatrix((sigma + sigma.T) / 2.0)


def classify_entropy(moments, tol=0.0):
    """
    Classe d'entropie des squelettes observés.

    Args:
        moments (EdgeMoments): Moments valides
        tol (float): Tolérance sur les frontières (>= 0)

    Returns:
        EntropyClass: MINIMUM si tous les p̂ᵢ valent 0 ou 1 ; MAXIMUM si tous
        valent 1/2 et les covariances hors diagonale sont nulles ;
        INTERMEDIATE sinon
    """
    if tol < 0:
        raise InvalidArgumentError(f"Tolérance négative: {tol}")
    p = moments.p_hat
    if np.all(np.minimum(np.abs(p), np.abs(p - 1.0)) <= tol):
        return EntropyClass.MINIMUM

    sigma = moments.p_pair_hat - np.outer(p, p)
    off_diagonal = sigma[~np.eye(len(p), dtype=bool)]
    if np.all(np.abs(p - 0.5) <= tol) and np.all(np.abs(off_diagonal) <= tol):
        return EntropyClass.MAXIMUM
    return EntropyClass.INTERMEDIATE


def enumerate_uniform_moments(v):
    """
    Moments obtenus en énumérant les 2^k squelettes sur v nœuds, à poids égal.

    Args:
        v (int): Nombre de nœuds (2 <= v <= 5)

    Returns:
        EdgeMoments: p̂ᵢ = 1/2 et p̂ᵢⱼ = 1/4 (i ≠ j), exactement
    """
    if v < 2 or v > MAX_ENUMERATION_NODES:
        raise InvalidArgumentError(
            f"Énumération possible pour 2 <= v <= {MAX_ENUMERATION_NODES}, reçu v={v}"
        )
    k = v * (v - 1) // 2
    patterns = np.arange(2 ** k, dtype=np.int64)
    presence = ((patterns[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    counts = count_pairs(presence)
    m = presence.shape[0]
    pairs = counts / m
    return EdgeMoments(m=m, p_hat=np.diag(pairs).copy(), p_pair_hat=pairs, pair_counts=counts)
