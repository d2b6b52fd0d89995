"""
Significativité de Monte Carlo des statistiques complémentaires.

Sous H₀ (entropie maximale) les k arêtes sont des Ber(1/2) indépendantes :
on tire R matrices m x k, on calcule leur covariance empirique puis la
statistique complémentaire T*_r, et p̂ = (1/R) Σ 𝕀{T*_r >= T_obs}.

Les répliques sont groupées en blocs de taille fixe ; le bloc b utilise le
sous-flux (seed, b). Le résultat ne dépend pas du nombre de workers.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass
from enum import Enum
from itertools import combinations

import numpy as np
from joblib import Parallel, delayed

from services.bernoulli_moments import CovMatrix
from services.variability_stats import StatisticKind, complement_statistic
from utils.errors import InvalidArgumentError
from utils.rng import normalize_seed, substream

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 4096
DEFAULT_TIE_TOLERANCE = 1e-9
MAX_EXACT_DIMENSION = 3
MAX_EXACT_COMPOSITIONS = 5_000_000
EXACT_CHUNK = 262_144


class Divisor(str, Enum):
    """Diviseur de la covariance empirique des répliques."""
    M = "m"
    M_MINUS_1 = "m-1"

    def value_for(self, m):
        return m if self is Divisor.M else m - 1


@dataclass(frozen=True)
class McConfig:
    """
    Paramètres d'une estimation de Monte Carlo.

    Attributes:
        m (int): Nombre d'échantillons par réplique (>= 2)
        k (int): Dimension (nombre d'arêtes)
        replicates (int): Nombre de répliques R (>= 1)
        seed (int): Graine 64 bits
        statistic (StatisticKind): Statistique complémentaire t, g ou n
        divisor (Divisor): m (défaut calibré) ou m-1
        block_size (int): Nombre de répliques par sous-flux
        tie_tolerance (float): T* est compté si T* >= T_obs + tie_tolerance
    """
    m: int
    k: int
    replicates: int
    seed: int
    statistic: StatisticKind = StatisticKind.N
    divisor: Divisor = Divisor.M
    block_size: int = DEFAULT_BLOCK_SIZE
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE

    def __post_init__(self):
        try:
            object.__setattr__(self, 'statistic', StatisticKind(self.statistic))
            object.__setattr__(self, 'divisor', Divisor(self.divisor))
        except ValueError as exc:
            raise InvalidArgumentError(f"Configuration Monte Carlo invalide: {exc}")
        object.__setattr__(self, 'seed', normalize_seed(self.seed))

        if self.replicates < 1:
            raise InvalidArgumentError(f"Il faut au moins une réplique (R={self.replicates})")
        if self.m < 2:
            raise InvalidArgumentError(f"Il faut m >= 2 (m={self.m})")
        if self.k < 1:
            raise InvalidArgumentError(f"Dimension invalide: k={self.k}")
        if self.block_size < 1:
            raise InvalidArgumentError(f"Taille de bloc invalide: {self.block_size}")
        if self.tie_tolerance < 0:
            raise InvalidArgumentError(f"Tolérance négative: {self.tie_tolerance}")

    @property
    def block_count(self):
        return -(-self.replicates // self.block_size)

    def to_dict(self):
        """Convertir en dictionnaire (manifestes)."""
        values = asdict(self)
        values["statistic"] = self.statistic.value
        values["divisor"] = self.divisor.value
        return values


@dataclass(frozen=True)
class McResult:
    """Estimation p̂ et son erreur standard √(p̂(1 - p̂)/R)."""
    p_hat: float
    mc_standard_error: float
    replicates: int
    observed_statistic: float
    exceed_count: int

    def to_dict(self):
        return asdict(self)

    def summary_line(self):
        """Ligne `p_hat=<…> se=<…>` de la CLI."""
        return f"p_hat={self.p_hat:.6f} se={self.mc_standard_error:.6f}"


def sample_covariance(draws, divisor=Divisor.M):
    """
    Covariance empirique de lignes binaires.

    Args:
        draws (numpy.ndarray): Tirages (m, k) ou pile (..., m, k)
        divisor (Divisor): m ou m-1

    Returns:
        numpy.ndarray: Covariance(s) (..., k, k)
    """
    x = np.asarray(draws, dtype=float)
    m = x.shape[-2]
    d = Divisor(divisor).value_for(m)
    if d < 1:
        raise InvalidArgumentError(f"Diviseur nul pour m={m}")
    column_sums = x.sum(axis=-2)
    cross = np.matmul(np.swapaxes(x, -1, -2), x)
    # Numérateur entier (exact en float64) avant la division
    numerator = m * cross - column_sums[..., :, None] * column_sums[..., None, :]
    return numerator / (m * d)


def null_replicate(m, k, rng, divisor=Divisor.M):
    """
    Une réplique sous H₀ : covariance de m lignes Ber(1/2)^k indépendantes.

    Args:
        m (int): Nombre de lignes
        k (int): Nombre d'arêtes
        rng (numpy.random.Generator): Sous-flux dédié

    Returns:
        CovMatrix: Covariance empirique
    """
    draws = rng.integers(0, 2, size=(m, k), dtype=np.int8)
    return CovMatrix(sample_covariance(draws, divisor))


def _count_block(config, threshold, block):
    """Nombre de T* >= seuil dans le bloc `block`."""
    start = block * config.block_size
    size = min(config.block_size, config.replicates - start)
    rng = substream(config.seed, block)
    draws = rng.integers(0, 2, size=(size, config.m, config.k), dtype=np.int8)
    stats = complement_statistic(sample_covariance(draws, config.divisor), config.statistic)
    return int(np.count_nonzero(stats >= threshold))


def mc_pvalue(observed, config, n_jobs=1):
    """
    Estime la significativité de Monte Carlo de T_obs.

    Args:
        observed (float): Statistique complémentaire observée (même type)
        config (McConfig): Paramètres
        n_jobs (int): Nombre de workers joblib (threads)

    Returns:
        McResult: p̂, erreur standard et comptage
    """
    started = time.perf_counter()
    threshold = float(observed) + config.tie_tolerance
    logger.info(
        "Monte Carlo: R=%d m=%d k=%d stat=%s divisor=%s (%d blocs)",
        config.replicates, config.m, config.k, config.statistic.value,
        config.divisor.value, config.block_count
    )
    blocks = range(config.block_count)
    if n_jobs == 1 or config.block_count == 1:
        counts = [_count_block(config, threshold, block) for block in blocks]
    else:
        counts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_count_block)(config, threshold, block) for block in blocks
        )

    exceed = int(sum(counts))
    p_hat = exceed / config.replicates
    se = math.sqrt(p_hat * (1.0 - p_hat) / config.replicates)
    logger.info("Monte Carlo terminé en %.2fs: p_hat=%.6f", time.perf_counter() - started, p_hat)
    return McResult(
        p_hat=p_hat,
        mc_standard_error=se,
        replicates=config.replicates,
        observed_statistic=float(observed),
        exceed_count=exceed
    )


# ==================== LOI NULLE EXACTE (k <= 3) ====================

def composition_count(m, cells):
    """Nombre de façons de répartir m lignes entre `cells` motifs."""
    return math.comb(m + cells - 1, cells - 1)


def _compositions(m, cells):
    """Toutes les compositions de m en `cells` parts (tableau N x cells)."""
    total = composition_count(m, cells)
    if cells == 1:
        return np.full((1, 1), m, dtype=np.int64)
    bars = np.fromiter(
        combinations(range(m + cells - 1), cells - 1),
        dtype=np.dtype((np.int64, cells - 1)),
        count=total
    )
    padded = np.hstack([
        np.full((total, 1), -1, dtype=np.int64),
        bars,
        np.full((total, 1), m + cells - 1, dtype=np.int64)
    ])
    return np.diff(padded, axis=1) - 1


def exact_null_pvalue(observed, m, k, statistic=StatisticKind.N, divisor=Divisor.M,
                      tie_tolerance=DEFAULT_TIE_TOLERANCE,
                      max_compositions=MAX_EXACT_COMPOSITIONS):
    """
    Valeur exacte de P(T* >= T_obs) sous H₀, par énumération.

    La covariance empirique ne dépend que des effectifs des 2^k motifs
    d'arêtes, de loi multinomiale(m, 2^{-k}).

    Args:
        observed (float): Statistique complémentaire observée
        m (int): Nombre d'échantillons
        k (int): Dimension (<= 3)
        max_compositions (int): Garde-fou sur la taille de l'énumération

    Returns:
        float: Probabilité exacte (limite de p̂ quand R -> ∞)

    Raises:
        InvalidArgumentError: Dimension ou énumération trop grande
    """
    statistic = StatisticKind(statistic)
    divisor = Divisor(divisor)
    if not 1 <= k <= MAX_EXACT_DIMENSION:
        raise InvalidArgumentError(f"Énumération exacte limitée à 1 <= k <= {MAX_EXACT_DIMENSION} (k={k})")
    if m < 2:
        raise InvalidArgumentError(f"Il faut m >= 2 (m={m})")
    cells = 2 ** k
    total = composition_count(m, cells)
    if total > max_compositions:
        raise InvalidArgumentError(
            f"Énumération trop grande: {total} compositions (limite {max_compositions})"
        )

    patterns = ((np.arange(cells)[:, None] >> np.arange(k)) & 1).astype(float)
    outer = np.einsum('ci,cj->cij', patterns, patterns).reshape(cells, k * k)
    log_factorials = np.array([math.lgamma(i + 1) for i in range(m + 1)])
    log_norm = log_factorials[m] - m * k * math.log(2.0)
    d = divisor.value_for(m)
    threshold = float(observed) + tie_tolerance

    counts = _compositions(m, cells)
    probability = 0.0
    for start in range(0, total, EXACT_CHUNK):
        chunk = counts[start:start + EXACT_CHUNK]
        weights = np.exp(log_norm - log_factorials[chunk].sum(axis=1))
        column_sums = chunk @ patterns
        cross = (chunk @ outer).reshape(-1, k, k)
        cov = (m * cross - column_sums[:, :, None] * column_sums[:, None, :]) / (m * d)
        stats = complement_statistic(cov, statistic)
        probability += math.fsum(weights[stats >= threshold])

    logger.debug("Loi nulle exacte: %d compositions, p=%.6f", total, probability)
    return min(probability, 1.0)
