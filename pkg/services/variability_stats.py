"""
Statistiques descriptives de variabilité d'une matrice de covariance.

    VAR_T = tr(Σ)              (variance totale)
    VAR_G = det(Σ)             (variance généralisée)
    VAR_N = Σᵢ (λᵢ - k/4)²     (norme de Frobenius au cas d'entropie minimale)

Les formes normalisées valent 1 au cas d'entropie maximale Σ = (1/4)I_k et
0 au cas d'entropie minimale Σ = O ; les compléments valent 1 - normalisé.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from services.bernoulli_moments import CovMatrix
from utils.errors import EmptyReductionError, InvalidArgumentError
from utils.formatting import csv_text, key_value_block
from utils.matrix_kernel import det_sym, eigenvalues_sym, full_rank_reduce, trace

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "k", "var_t", "var_g", "var_n",
    "nvar_t", "nvar_g", "nvar_n",
    "cvar_t", "cvar_g", "cvar_n",
    "used_reduction", "k_star", "out_of_bounds"
]


class StatisticKind(str, Enum):
    """Statistique complémentaire utilisée par le test de Monte Carlo."""
    T = "t"
    G = "g"
    N = "n"


def var_n_bounds(k):
    """
    Bornes de VAR_N pour une covariance de Bernoulli de dimension k.

    Returns:
        tuple: (minimum k(k-1)²/16 en λ = 1/4, maximum k³/16 en λ = 0)
    """
    return k * (k - 1) ** 2 / 16.0, k ** 3 / 16.0


def normalized_n(var_n, k):
    """(k³ - 16 VAR_N) / (k(2k - 1))."""
    return (k ** 3 - 16.0 * var_n) / (k * (2 * k - 1))


@dataclass
class VariabilityReport:
    """
    Valeurs brutes, normalisées et complémentaires des trois statistiques.

    Attributes:
        used_reduction (bool): VAR_G calculée sur une sous-matrice réduite
        kept_indices (list): Indices gardés par la réduction
        k_star (int): Dimension utilisée pour normaliser VAR_G
        out_of_bounds (bool): Σ ou un résultat normalisé sort des bornes
            de population (possible avec une covariance estimée)
    """
    k: int
    var_t: float
    var_g: float
    var_n: float
    nvar_t: float
    nvar_g: float
    nvar_n: float
    used_reduction: bool = False
    kept_indices: list = field(default_factory=list)
    k_star: int = 0
    out_of_bounds: bool = False

    @property
    def cvar_t(self):
        return 1.0 - self.nvar_t

    @property
    def cvar_g(self):
        return 1.0 - self.nvar_g

    @property
    def cvar_n(self):
        return 1.0 - self.nvar_n

    def as_dict(self):
        """Convertir en dictionnaire ordonné (colonnes du CSV)."""
        values = {column: getattr(self, column) for column in REPORT_COLUMNS}
        values["kept_indices"] = list(self.kept_indices)
        return values

    def to_key_values(self):
        """Bloc texte `clé=valeur`."""
        pairs = [(column, getattr(self, column)) for column in REPORT_COLUMNS]
        pairs.append(("kept_indices", ";".join(str(i) for i in self.kept_indices)))
        return key_value_block(pairs)

    def csv_row(self):
        return [getattr(self, column) for column in REPORT_COLUMNS]

    @staticmethod
    def to_csv(reports):
        """CSV avec une ligne par matrice."""
        return csv_text(REPORT_COLUMNS, [report.csv_row() for report in reports])


def variability(sigma, reduce_for_det=False):
    """
    Calcule les trois statistiques de variabilité.

    Args:
        sigma (CovMatrix): Matrice de covariance (population ou estimée)
        reduce_for_det (bool): Calculer VAR_G sur la réduction de rang plein
            et normaliser par 4^{k*}

    Returns:
        VariabilityReport: Statistiques non tronquées
    """
    if not isinstance(sigma, CovMatrix):
        sigma = CovMatrix(sigma)
    k = sigma.k
    if k == 0:
        raise InvalidArgumentError("Matrice de dimension nulle")
    entries = sigma.entries

    var_t = float(trace(entries))
    eigenvalues = eigenvalues_sym(entries).eigenvalues
    var_n = float(np.sum((eigenvalues - k / 4.0) ** 2))

    used_reduction = False
    kept = list(range(k))
    k_star = k
    if reduce_for_det:
        try:
            reduced, kept = full_rank_reduce(entries)
            k_star = len(kept)
            used_reduction = k_star < k
            var_g = float(det_sym(reduced))
        except EmptyReductionError:
            logger.debug("Réduction vide: VAR_G = 0 avec k* = 0")
            kept, k_star, used_reduction, var_g = [], 0, True, 0.0
    else:
        var_g = float(det_sym(entries))

    nvar_t = 4.0 * var_t / k
    nvar_g = 4.0 ** k_star * var_g if k_star else 0.0
    nvar_n = normalized_n(var_n, k)

    normalized = (nvar_t, nvar_g, nvar_n)
    tol = 1e-9
    out_of_bounds = bool(
        not sigma.within_bounds()
        or any(value < -tol or value > 1.0 + tol for value in normalized)
    )

    return VariabilityReport(
        k=k,
        var_t=var_t,
        var_g=var_g,
        var_n=var_n,
        nvar_t=nvar_t,
        nvar_g=nvar_g,
        nvar_n=nvar_n,
        used_reduction=used_reduction,
        kept_indices=kept,
        k_star=k_star,
        out_of_bounds=out_of_bounds
    )


def null_distance(entries):
    """
    Distance ||Σ - (1/4)I_k||_F² au cas d'entropie maximale, rapportée à
    son maximum max(k(k-1), k)/16 (atteint en (1/4)J_k ou en O).

    Args:
        entries (numpy.ndarray): Matrice (k, k) ou pile (..., k, k)

    Returns:
        float ou numpy.ndarray: 0 en Σ = (1/4)I_k, 1 au point le plus éloigné
    """
    entries = np.asarray(entries, dtype=float)
    k = entries.shape[-1]
    gap = entries - 0.25 * np.eye(k)
    distance = np.sum(gap * gap, axis=(-2, -1))
    return 16.0 * distance / max(k * (k - 1), k)


def complement_statistic(entries, kind):
    """
    Statistique complémentaire sur une matrice ou une pile de matrices.

    Pour t et g : 1 - statistique normalisée. Pour n : distance normalisée à
    (1/4)I_k (null_distance), égale à t_N / t_N^max du test de Nagao.

    Args:
        entries (numpy.ndarray): Matrice (k, k) ou pile (..., k, k)
        kind (StatisticKind): t, g ou n

    Returns:
        float ou numpy.ndarray: Statistique (non tronquée), croissante avec
            l'écart à l'entropie maximale
    """
    kind = StatisticKind(kind)
    entries = np.asarray(entries, dtype=float)
    k = entries.shape[-1]

    if kind is StatisticKind.T:
        values = 1.0 - 4.0 * trace(entries) / k
    elif kind is StatisticKind.G:
        values = 1.0 - 4.0 ** k * det_sym(entries)
    else:
        values = null_distance(entries)

    if np.ndim(values) == 0:
        return float(values)
    return values
