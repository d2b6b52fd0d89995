"""
Noyau numérique : valeurs propres (Jacobi cyclique), déterminant, trace,
réduction de rang et fonctions spéciales des tests asymptotiques.

Les fonctions spéciales sont implémentées ici (série + fraction continue,
d'après "Numerical Recipes") pour rester reproductibles bit à bit.
"""
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from utils.errors import EmptyReductionError, InvalidArgumentError, NumericError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
DET_CLAMP = 1e-12
GAMMA_EPS = 1e-16
GAMMA_MAX_ITER = 100_000
FPMIN = sys.float_info.min / sys.float_info.epsilon


@dataclass(frozen=True)
class EigenDecomposition:
    """Valeurs propres triées par ordre décroissant."""
    eigenvalues: np.ndarray
    sweeps: int = 0
    residual: float = 0.0

    def __len__(self):
        return len(self.eigenvalues)


def _as_square(matrix):
    """Convertit en matrice carrée float64 (copie)."""
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"Matrice carrée attendue, forme {a.shape}")
    return a


def check_symmetric(matrix, tol=SYMMETRY_TOL):
    """
    Vérifie la symétrie à `tol` près (relativement à la norme de la matrice).

    Raises:
        InvalidArgumentError: Matrice non symétrique
    """
    a = np.asarray(matrix, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    asymmetry = float(np.max(np.abs(a - np.swapaxes(a, -1, -2)))) if a.size else 0.0
    if asymmetry > tol * scale:
        raise InvalidArgumentError(f"Matrice non symétrique (écart {asymmetry:.3e})")


def _off_diagonal_norm(a):
    off = a - np.diag(np.diag(a))
    return math.sqrt(float(np.sum(off * off)))


def eigenvalues_sym(matrix, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """
    Valeurs propres d'une matrice symétrique par rotations de Jacobi cycliques.

    La convergence est atteinte quand la masse hors diagonale (norme de
    Frobenius) passe sous tol * ||M||_F.

    Args:
        matrix: Matrice symétrique k x k
        tol (float): Tolérance relative de convergence
        max_sweeps (int): Nombre maximal de balayages

    Returns:
        EigenDecomposition: Valeurs propres décroissantes

    Raises:
        InvalidArgumentError: Matrice non symétrique
        NumericError: Non-convergence
    """
    a = _as_square(matrix)
    check_symmetric(a)
    a = (a + a.T) / 2.0
    k = a.shape[0]

    norm = float(np.linalg.norm(a))
    if k == 0 or norm == 0.0:
        return EigenDecomposition(np.zeros(k))

    threshold = tol * norm
    off = _off_diagonal_norm(a)
    sweeps = 0
    while off >= threshold:
        if sweeps >= max_sweeps:
            raise NumericError(
                f"Jacobi: pas de convergence après {max_sweeps} balayages (résidu {off:.3e})"
            )
        sweeps += 1
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
        off = _off_diagonal_norm(a)
        logger.debug("Jacobi: balayage %d, résidu %.3e", sweeps, off)

    eigenvalues = np.sort(np.diag(a))[::-1].copy()
    return EigenDecomposition(eigenvalues, sweeps=sweeps, residual=off)


def trace(matrix):
    """Trace (somme de la diagonale), aussi sur une pile de matrices."""
    return np.trace(np.asarray(matrix, dtype=float), axis1=-2, axis2=-1)


def det_sym(matrix):
    """
    Déterminant par élimination de Gauss avec pivot partiel.

    Accepte une matrice (k, k) ou une pile (..., k, k). Les valeurs
    légèrement négatives (> -1e-12) dues aux arrondis sont ramenées à 0.

    Returns:
        float ou numpy.ndarray: Déterminant(s)
    """
    a = np.array(matrix, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InvalidArgumentError(f"Matrice carrée attendue, forme {a.shape}")
    single = a.ndim == 2
    k = a.shape[-1]
    a = a.reshape(-1, k, k)
    batch = np.arange(a.shape[0])
    det = np.ones(a.shape[0])

    for j in range(k):
        pivot_rows = j + np.argmax(np.abs(a[:, j:, j]), axis=1)
        swap = pivot_rows != j
        if swap.any():
            rows_j = a[batch[swap], j, :].copy()
            a[batch[swap], j, :] = a[batch[swap], pivot_rows[swap], :]
            a[batch[swap], pivot_rows[swap], :] = rows_j
            det[swap] = -det[swap]
        pivots = a[:, j, j]
        det = det * pivots
        safe = np.where(pivots == 0.0, 1.0, pivots)
        factors = a[:, j + 1:, j] / safe[:, None]
        a[:, j + 1:, :] -= factors[:, :, None] * a[:, j, None, :]

    det = np.where((det < 0.0) & (det > -DET_CLAMP), 0.0, det)
    return float(det[0]) if single else det.reshape(np.shape(matrix)[:-2])


def full_rank_reduce(matrix, tol=1e-9):
    """
    Réduction à une sous-matrice principale de rang plein (Cholesky pivoté).

    On garde à chaque étape l'indice de plus grand pivot restant et on
    s'arrête quand le pivot suivant est < tol * (plus grand élément diagonal).

    Args:
        matrix: Matrice symétrique semi-définie positive
        tol (float): Seuil relatif des pivots

    Returns:
        tuple: (sous-matrice principale numpy, liste triée des indices gardés)

    Raises:
        EmptyReductionError: Matrice nulle (k* = 0)
    """
    a = _as_square(matrix)
    check_symmetric(a)
    k = a.shape[0]
    diagonal = np.diag(a).copy()
    scale = float(diagonal.max()) if k else 0.0
    if scale <= 0.0:
        raise EmptyReductionError("Réduction vide: la matrice est nulle (k*=0)")

    factor = np.zeros((k, k))
    residual = diagonal.copy()
    kept = []
    for step in range(k):
        candidates = [i for i in range(k) if i not in kept]
        j = max(candidates, key=lambda i: (residual[i], -i))
        pivot = residual[j]
        if pivot < tol * scale:
            break
        column = (a[:, j] - factor[:, :step] @ factor[j, :step]) / math.sqrt(pivot)
        factor[:, step] = column
        residual = residual - column ** 2
        kept.append(j)
        residual[kept] = 0.0

    kept = sorted(kept)
    return a[np.ix_(kept, kept)], kept


# ==================== FONCTIONS SPÉCIALES ====================

def _gamma_series(a, x):
    """Série de P(a, x), valable pour x < a + 1."""
    if x == 0.0:
        return 0.0
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * GAMMA_EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NumericError(f"Série gamma incomplète: pas de convergence (a={a}, x={x})")


def _gamma_continued_fraction(a, x):
    """Fraction continue (Lentz) de Q(a, x), valable pour x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < GAMMA_EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise NumericError(f"Fraction continue gamma: pas de convergence (a={a}, x={x})")


def _check_gamma_domain(a, x):
    if not (a > 0.0) or not math.isfinite(a):
        raise InvalidArgumentError(f"Paramètre de forme invalide: a={a}")
    if not (x >= 0.0):
        raise InvalidArgumentError(f"Argument négatif non autorisé: x={x}")


def reg_lower_inc_gamma(a, x):
    """
    Gamma incomplète régularisée inférieure P(a, x).

    Args:
        a (float): Forme, > 0
        x (float): Argument, >= 0

    Returns:
        float: P(a, x) dans [0, 1]
    """
    a, x = float(a), float(x)
    _check_gamma_domain(a, x)
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(_gamma_series(a, x), 1.0)
    return max(1.0 - _gamma_continued_fraction(a, x), 0.0)


def reg_upper_inc_gamma(a, x):
    """Gamma incomplète régularisée supérieure Q(a, x) = 1 - P(a, x)."""
    a, x = float(a), float(x)
    _check_gamma_domain(a, x)
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(1.0 - _gamma_series(a, x), 0.0)
    return min(_gamma_continued_fraction(a, x), 1.0)


def std_normal_cdf(z):
    """Fonction de répartition de la loi normale centrée réduite."""
    return 0.5 * math.erfc(-float(z) / math.sqrt(2.0))


def chi2_cdf(x, df):
    """P(χ²_df <= x)."""
    return reg_lower_inc_gamma(df / 2.0, max(float(x), 0.0) / 2.0)


def chi2_sf(x, df):
    """P(χ²_df >= x)."""
    return reg_upper_inc_gamma(df / 2.0, max(float(x), 0.0) / 2.0)


def gamma_cdf(x, shape, scale=1.0):
    """Fonction de répartition de Ga(shape, scale)."""
    return reg_lower_inc_gamma(shape, max(float(x), 0.0) / scale)
