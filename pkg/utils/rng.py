"""
Sous-flux aléatoires reproductibles.

Un sous-flux est identifié par la graine globale et une clé (indice de bloc,
de réplique, de taille d'échantillon...). Le résultat ne dépend donc pas de
l'ordre d'exécution des tâches.
"""
import numpy as np

SEED_MASK = (1 << 64) - 1


def normalize_seed(seed):
    """Ramène une graine entière sur 64 bits non signés."""
    return int(seed) & SEED_MASK


def substream(seed, *keys):
    """
    Crée un générateur indépendant pour (seed, *keys).

    Args:
        seed (int): Graine globale
        *keys (int): Clés du sous-flux (entiers positifs)

    Returns:
        numpy.random.Generator: Générateur PCG64 dédié
    """
    entropy = [normalize_seed(seed)] + [int(key) for key in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed, *keys):
    """
    Dérive une nouvelle graine 64 bits pour (seed, *keys).

    Returns:
        int: Graine dérivée
    """
    entropy = [normalize_seed(seed)] + [int(key) for key in keys]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])
