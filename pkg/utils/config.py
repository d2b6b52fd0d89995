"""
Configuration de l'application, lue depuis l'environnement (fichier .env).
"""
import os
from dataclasses import dataclass
from dotenv import load_dotenv

# Charger les variables d'environnement
load_dotenv()

APP_NAME = "bn-variability"
APP_VERSION = "1.0.0"


@dataclass(frozen=True)
class Settings:
    """
    Paramètres par défaut des commandes et de l'API.

    Les options de la ligne de commande ont toujours priorité.
    """
    seed: int = 20100
    threads: int = 1
    mc_replicates: int = 100_000
    mc_divisor: str = "m"
    api_max_replicates: int = 200_000
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls):
        """
        Construit les paramètres à partir des variables d'environnement.

        Returns:
            Settings: Paramètres résolus
        """
        return cls(
            seed=int(os.environ.get('VARIABILITY_SEED', cls.seed)),
            threads=int(os.environ.get('VARIABILITY_THREADS', cls.threads)),
            mc_replicates=int(os.environ.get('VARIABILITY_MC_REPLICATES', cls.mc_replicates)),
            mc_divisor=os.environ.get('VARIABILITY_MC_DIVISOR', cls.mc_divisor),
            api_max_replicates=int(os.environ.get('VARIABILITY_API_MAX_REPLICATES', cls.api_max_replicates)),
            log_level=os.environ.get('VARIABILITY_LOG_LEVEL', cls.log_level).upper()
        )


settings = Settings.from_env()
