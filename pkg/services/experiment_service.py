"""
Service d'orchestration : tables de référence, campagnes d'expériences et
manifestes d'exécution.
"""
import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime

import numpy as np

from services.bernoulli_moments import CovMatrix, covariance_from_moments, estimate_moments
from services.bootstrap_service import bootstrap_skeletons
from services.montecarlo import Divisor, McConfig, mc_pvalue
from services.parametric_tests import det_gamma_test, nagao_test, trace_test
from services.structure_learning import forward_sample
from services.variability_stats import REPORT_COLUMNS, StatisticKind, complement_statistic, variability
from utils.config import APP_VERSION
from utils.errors import InvalidArgumentError
from utils.formatting import csv_text
from utils.rng import derive_seed, substream

logger = logging.getLogger(__name__)

SIGMAS = {
    "sigma1": np.array([[6.0, 1.0], [1.0, 6.0]]) / 25.0,
    "sigma2": np.array([[66.0, -21.0], [-21.0, 126.0]]) / 625.0,
    "sigma3": np.array([[66.0, 91.0], [91.0, 126.0]]) / 625.0,
}
TABLE_SIZES = (10, 20, 50, 100, 200)
TABLE_TESTS = (("trace", trace_test), ("det-gamma", det_gamma_test), ("nagao", nagao_test))
FULL_REPLICATES = 1_000_000
MANIFEST_FILENAME = "manifest.json"
EXPERIMENT_COLUMNS = ["size", "replicate", "learner", "p_value"]


def file_digest(path):
    """Empreinte sha256 d'un fichier."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Trace d'une exécution : commande, configuration complète, graines,
    version, empreintes des entrées et durée.
    """
    command: str
    config: dict = field(default_factory=dict)
    seed: int = None
    version: str = APP_VERSION
    inputs: dict = field(default_factory=dict)
    started_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec='seconds'))
    wall_clock_seconds: float = 0.0

    def add_input(self, path):
        """Enregistre l'empreinte d'un fichier d'entrée."""
        if path and path != "-" and os.path.isfile(path):
            self.inputs[str(path)] = file_digest(path)

    def finish(self, started):
        self.wall_clock_seconds = round(time.perf_counter() - started, 3)
        return self

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n"


def observed_covariance(moments, divisor=Divisor.M):
    """
    Covariance observée, sur le même estimateur que les répliques nulles.

    Le diviseur m donne la forme « plug-in » ; m-1 la corrige d'un
    facteur m/(m-1).
    """
    sigma = covariance_from_moments(moments)
    divisor = Divisor(divisor)
    if divisor is Divisor.M or not moments.m or moments.m < 2:
        return sigma
    return CovMatrix(sigma.entries * moments.m / divisor.value_for(moments.m))


class ExperimentService:
    """
    Service pour reproduire les tables de référence et les campagnes
    d'expériences (courbes de significativité).
    """

    @staticmethod
    def table1():
        """
        Statistiques descriptives de Σ₁, Σ₂, Σ₃.

        Returns:
            str: CSV `matrix,k,var_t,...`
        """
        rows = [[name] + variability(CovMatrix(sigma)).csv_row() for name, sigma in SIGMAS.items()]
        return csv_text(["matrix"] + REPORT_COLUMNS, rows)

    @staticmethod
    def table2():
        """
        Significativités asymptotiques (brutes et corrigées).

        Returns:
            str: CSV `test,matrix,m,statistic,p_raw,p_corrected,bounds_flag`
        """
        rows = []
        for test_name, test in TABLE_TESTS:
            for name, sigma in SIGMAS.items():
                for m in TABLE_SIZES:
                    result = test(CovMatrix(sigma), m)
                    rows.append([test_name, name, m, result.statistic,
                                 result.p_raw, result.p_corrected, result.bounds_flag])
        return csv_text(["test", "matrix", "m", "statistic", "p_raw", "p_corrected", "bounds_flag"], rows)

    @staticmethod
    def table3(replicates, seed, divisor=Divisor.M, n_jobs=1):
        """
        Significativités de Monte Carlo des statistiques complémentaires.

        Les répliques nulles d'une même taille m sont partagées entre
        statistiques et matrices (sous-flux dérivé de (seed, m)).

        Returns:
            str: CSV `statistic,matrix,m,observed,p_hat,se`
        """
        rows = []
        for kind in StatisticKind:
            for name, sigma in SIGMAS.items():
                observed = complement_statistic(sigma, kind)
                for m in TABLE_SIZES:
                    config = McConfig(m=m, k=sigma.shape[0], replicates=replicates,
                                      seed=derive_seed(seed, m), statistic=kind, divisor=divisor)
                    result = mc_pvalue(observed, config, n_jobs=n_jobs)
                    rows.append([kind.value, name, m, observed, result.p_hat, result.mc_standard_error])
            logger.info("Table Monte Carlo: statistique %s terminée", kind.value)
        return csv_text(["statistic", "matrix", "m", "observed", "p_hat", "se"], rows)

    @staticmethod
    def reproduce_tables(output_dir, replicates, seed, divisor=Divisor.M, n_jobs=1):
        """
        Écrit table1.csv, table2.csv et table3.csv dans output_dir.

        Returns:
            dict: Chemins des fichiers écrits
        """
        os.makedirs(output_dir, exist_ok=True)
        contents = {
            "table1.csv": ExperimentService.table1(),
            "table2.csv": ExperimentService.table2(),
            "table3.csv": ExperimentService.table3(replicates, seed, divisor, n_jobs),
        }
        paths = {}
        for filename, text in contents.items():
            path = os.path.join(output_dir, filename)
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            paths[filename] = path
        return paths

    @staticmethod
    def skeleton_pvalue(samples, mc_replicates, seed, statistic=StatisticKind.N,
                        divisor=Divisor.M, n_jobs=1):
        """
        Significativité de Monte Carlo d'un ensemble de squelettes bootstrap.

        Returns:
            McResult: Résultat pour la statistique complémentaire observée
        """
        moments = estimate_moments(samples, n_jobs=n_jobs)
        observed = complement_statistic(observed_covariance(moments, divisor).entries, statistic)
        config = McConfig(m=moments.m, k=moments.k, replicates=mc_replicates, seed=seed,
                          statistic=statistic, divisor=divisor)
        return mc_pvalue(observed, config, n_jobs=n_jobs)

    @staticmethod
    def run_experiment(bn, sizes, replicates, learners, m, mc_replicates, seed,
                       statistic=StatisticKind.N, divisor=Divisor.M, n_jobs=1):
        """
        Campagne (taille, réplique, algorithme) -> significativité de Monte Carlo.

        Pour chaque taille et réplique, un jeu de données est tiré du réseau
        (partagé par les algorithmes), puis m squelettes bootstrap sont
        appris et la significativité de la statistique complémentaire est
        estimée.

        Args:
            bn (BayesNet): Réseau de référence
            sizes (list): Tailles d'échantillon
            replicates (int): Répliques par taille (>= 0)
            learners (list): Configurations LearnerConfig
            m (int): Squelettes bootstrap par réplique
            mc_replicates (int): Répliques de Monte Carlo R
            seed (int): Graine

        Returns:
            str: CSV `size,replicate,learner,p_value`
        """
        if replicates < 0:
            raise InvalidArgumentError(f"Nombre de répliques négatif: {replicates}")
        if not learners:
            raise InvalidArgumentError("Au moins un algorithme est requis")
        if any(size < 1 for size in sizes):
            raise InvalidArgumentError(f"Tailles d'échantillon invalides: {list(sizes)}")

        rows = []
        for size in sizes:
            for replicate in range(replicates):
                data = forward_sample(bn, size, substream(seed, size, replicate))
                for position, learner in enumerate(learners):
                    skeletons = bootstrap_skeletons(
                        data, learner, m, derive_seed(seed, size, replicate, position), n_jobs=n_jobs
                    )
                    result = ExperimentService.skeleton_pvalue(
                        skeletons, mc_replicates, derive_seed(seed, size, replicate, position, 1),
                        statistic=statistic, divisor=divisor, n_jobs=n_jobs
                    )
                    rows.append([size, replicate, learner.name, result.p_hat])
                    logger.debug("Cellule n=%d r=%d %s: p=%.6f", size, replicate, learner.name, result.p_hat)
            logger.info("Expérience: taille %d terminée", size)
        return csv_text(EXPERIMENT_COLUMNS, rows)


# Instance globale du service
experiment_service = ExperimentService()
