#!/usr/bin/env python3
"""
Ligne de commande : variabilité des structures de réseaux bayésiens.

Usage:
    python cli.py moments samples.txt
    python cli.py describe sigma.csv
    python cli.py test sigma.csv --m 50 --which all
    python cli.py mc sigma.csv --m 10 --stat t --replicates 100000
    python cli.py sample --n 1000
    python cli.py bootstrap data.csv --learner gs-g2 --m 50
    python cli.py experiment --sizes 100,300,1000 --learners gs-g2,hc
    python cli.py reproduce-tables tables/

Codes de sortie : 0 succès, 2 usage, 3 entrée invalide, 4 échec numérique.
"""
import functools
import io
import logging
import math
import os
import sys
import time

import click
import numpy as np

from services.bernoulli_moments import CovMatrix, EdgeMoments, classify_entropy, covariance_from_moments, estimate_moments
from services.bootstrap_service import LEARNER_SPECS, LearnerConfig, bootstrap_skeletons, edge_strengths, parse_edge_list
from services.experiment_service import FULL_REPLICATES, MANIFEST_FILENAME, RunManifest, experiment_service, observed_covariance
from services.montecarlo import Divisor, McConfig, exact_null_pvalue, mc_pvalue
from services.parametric_tests import TestKind, TestResult, run_tests
from services.structure_learning import forward_sample
from services.variability_stats import StatisticKind, VariabilityReport, complement_statistic, variability
from storage.archive import dumps_archive, load_archive, read_upper_triangle_csv, write_moments_csv
from storage.datasets import load_reference_network, read_bayes_net, read_dataset_csv, read_schema, write_dataset_csv
from utils.config import APP_NAME, APP_VERSION, settings
from utils.errors import InputParseError, VariabilityError
from utils.formatting import csv_text, fmt17

logger = logging.getLogger(APP_NAME)


def handle_errors(func):
    """Convertit les erreurs de l'application en message et code de sortie."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except VariabilityError as exc:
            click.echo(f"❌ Erreur: {exc.message}", err=True)
            raise click.exceptions.Exit(exc.exit_code)
    return wrapper


def _configure_logging(verbose):
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, settings.log_level, logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _emit(ctx, text):
    """Écrit le résultat principal dans --out ou sur la sortie standard."""
    out = ctx.obj["out"]
    if out:
        _write_text(out, text)
    else:
        click.echo(text, nl=False)


def _start_manifest(ctx, inputs=()):
    manifest = RunManifest(
        command=ctx.info_name,
        config={**ctx.params, "threads": ctx.obj["threads"], "out": ctx.obj["out"]},
        seed=ctx.obj["seed"]
    )
    for path in inputs:
        manifest.add_input(path)
    return manifest


def _finish_manifest(ctx, manifest, started, beside=None):
    """
    Manifeste dans `<out>.manifest.json`, ou sur la sortie d'erreur.

    Avec `beside`, une copie est aussi écrite dans ce chemin.
    """
    text = manifest.finish(started).to_json()
    logger.info("Commande %s terminée en %.3fs", manifest.command, manifest.wall_clock_seconds)
    if beside:
        _write_text(beside, text)
    out = ctx.obj["out"]
    if out:
        _write_text(f"{out}.manifest.json", text)
    else:
        click.echo(text, nl=False, err=True)


def _read_archive(path):
    with open(path, encoding="utf-8", newline="") as f:
        return load_archive(f)


def _is_archive(path):
    with open(path, encoding="utf-8", newline="") as f:
        return f.readline().startswith("nodes=")


def _edge_selection(edges, k):
    """
    Indices retenus : liste d'arêtes `a-b,c-d` (v déduit de k) ou d'indices `i,j`.
    """
    if "-" in edges:
        v = int(round((1 + math.sqrt(1 + 8 * k)) / 2))
        if v * (v - 1) // 2 != k:
            raise InputParseError(f"Dimension k={k} sans graphe complet associé")
        return parse_edge_list(edges, v)
    try:
        keep = sorted({int(i) for i in edges.split(",")})
    except ValueError:
        raise InputParseError(f"Liste d'indices invalide: {edges}")
    if any(not 0 <= i < k for i in keep):
        raise InputParseError(f"Indices hors de la matrice: {edges}")
    return keep


def _load_matrix(path, edges=None):
    """
    Lit Σ depuis un CSV triangulaire (`sigma_ij`) ou des moments (`p_ij`).

    Returns:
        tuple: (CovMatrix, EdgeMoments ou None)
    """
    with open(path, encoding="utf-8", newline="") as f:
        value_column, matrix = read_upper_triangle_csv(f)
    if edges:
        keep = _edge_selection(edges, matrix.shape[0])
        matrix = matrix[np.ix_(keep, keep)]
    if value_column == "p_ij":
        moments = EdgeMoments.from_pairs(matrix)
        return covariance_from_moments(moments), moments
    return CovMatrix(matrix), None


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--seed", type=int, default=settings.seed, show_default=True, help="Graine globale.")
@click.option("--threads", type=click.IntRange(min=1), default=settings.threads, show_default=True,
              help="Nombre de workers.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Fichier de sortie.")
@click.option("-v", "--verbose", count=True, help="Plus de journalisation (-v, -vv).")
@click.version_option(APP_VERSION, prog_name=APP_NAME)
@click.pass_context
def cli(ctx, seed, threads, out, verbose):
    """Variabilité des structures de réseaux bayésiens apprises par bootstrap."""
    _configure_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, threads=threads, out=out)


@cli.command()
@click.argument("archive", type=click.Path(exists=True, dir_okay=False))
@click.option("--edges", default=None, help="Sous-ensemble d'arêtes W, format a-b,c-d.")
@click.option("--tol", type=click.FloatRange(min=0.0), default=0.0, show_default=True,
              help="Tolérance de la classe d'entropie.")
@click.pass_context
@handle_errors
def moments(ctx, archive, edges, tol):
    """Moments des arêtes (CSV i,j,p_ij) et classe d'entropie."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [archive])
    content = _read_archive(archive)
    restrict_to = parse_edge_list(edges, content.node_count) if edges else None
    result = estimate_moments(content.samples, restrict_to=restrict_to, n_jobs=ctx.obj["threads"])
    entropy = classify_entropy(result, tol)

    buffer = io.StringIO()
    write_moments_csv(result, buffer)
    _emit(ctx, buffer.getvalue())
    # Le CSV occupe la sortie standard quand --out est absent
    click.echo(f"entropy={entropy.value}", err=not ctx.obj["out"])
    _finish_manifest(ctx, manifest, started)


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--reduce-for-det", is_flag=True, help="VAR_G sur la réduction de rang plein.")
@click.option("--format", "output_format", type=click.Choice(["kv", "csv"]), default="kv", show_default=True)
@click.option("--edges", default=None, help="Sous-ensemble W : arêtes a-b,c-d ou indices i,j.")
@click.pass_context
@handle_errors
def describe(ctx, source, reduce_for_det, output_format, edges):
    """Statistiques de variabilité de Σ (CSV sigma_ij ou moments p_ij)."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [source])
    sigma, _ = _load_matrix(source, edges)
    report = variability(sigma, reduce_for_det=reduce_for_det)
    if output_format == "csv":
        _emit(ctx, VariabilityReport.to_csv([report]))
    else:
        _emit(ctx, report.to_key_values())
    _finish_manifest(ctx, manifest, started)


@cli.command("test")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--m", "m", type=click.IntRange(min=1), required=True, help="Nombre d'échantillons bootstrap.")
@click.option("--which", type=click.Choice([kind.value for kind in TestKind] + ["all"]), default="all",
              show_default=True)
@click.pass_context
@handle_errors
def test_command(ctx, source, m, which):
    """Tests asymptotiques de H₀ : Σ = (1/4)I_k (CSV de résultats)."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [source])
    sigma, _ = _load_matrix(source)
    _emit(ctx, TestResult.to_csv(run_tests(sigma, m, which)))
    _finish_manifest(ctx, manifest, started)


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--m", "m", type=click.IntRange(min=2), default=None,
              help="Nombre d'échantillons (déduit d'une archive).")
@click.option("--stat", type=click.Choice([kind.value for kind in StatisticKind]), default="n", show_default=True)
@click.option("--replicates", type=click.IntRange(min=1), default=settings.mc_replicates, show_default=True)
@click.option("--divisor", type=click.Choice([d.value for d in Divisor]), default=settings.mc_divisor,
              show_default=True)
@click.option("--exact", is_flag=True, help="Loi nulle exacte par énumération (k <= 3).")
@click.pass_context
@handle_errors
def mc(ctx, source, m, stat, replicates, divisor, exact):
    """Significativité de Monte Carlo de la statistique complémentaire."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [source])
    if _is_archive(source):
        samples = _read_archive(source).samples
        edge_moments = estimate_moments(samples, n_jobs=ctx.obj["threads"])
        sigma = observed_covariance(edge_moments, divisor)
        m = edge_moments.m
    else:
        sigma, _ = _load_matrix(source)
    if m is None or m < 2:
        raise click.UsageError("--m est requis (>= 2) pour une matrice")

    observed = complement_statistic(sigma.entries, stat)
    if exact:
        p_exact = exact_null_pvalue(observed, m, sigma.k, stat, divisor)
        _emit(ctx, f"p_exact={p_exact:.6f} observed={fmt17(observed)}\n")
    else:
        config = McConfig(m=m, k=sigma.k, replicates=replicates, seed=ctx.obj["seed"],
                          statistic=stat, divisor=divisor)
        manifest.config["mc"] = config.to_dict()
        result = mc_pvalue(observed, config, n_jobs=ctx.obj["threads"])
        _emit(ctx, result.summary_line() + "\n")
    _finish_manifest(ctx, manifest, started)


def _load_network(path):
    if not path:
        return load_reference_network()
    with open(path, encoding="utf-8") as f:
        return read_bayes_net(f)


@cli.command()
@click.option("--network", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Réseau JSON (réseau de référence par défaut).")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Nombre de lignes.")
@click.pass_context
@handle_errors
def sample(ctx, network, n):
    """Échantillonnage avant d'un réseau bayésien (CSV de données)."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [network] if network else [])
    bn = _load_network(network)
    data = forward_sample(bn, n, ctx.obj["seed"])
    buffer = io.StringIO()
    write_dataset_csv(data, buffer)
    _emit(ctx, buffer.getvalue())
    _finish_manifest(ctx, manifest, started)


@cli.command()
@click.argument("data_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--learner", type=click.Choice(LEARNER_SPECS), default="gs-g2", show_default=True)
@click.option("--m", "m", type=click.IntRange(min=1), default=50, show_default=True,
              help="Nombre de répliques bootstrap.")
@click.option("--alpha", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.05,
              show_default=True)
@click.option("--schema", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Niveaux déclarés (JSON).")
@click.option("--strength-out", type=click.Path(dir_okay=False), default=None,
              help="CSV de la force de chaque arête.")
@click.pass_context
@handle_errors
def bootstrap(ctx, data_file, learner, m, alpha, schema, strength_out):
    """Bootstrap non paramétrique : archive de squelettes."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [data_file] + ([schema] if schema else []))
    levels = None
    if schema:
        with open(schema, encoding="utf-8") as f:
            levels = read_schema(f)
    with open(data_file, encoding="utf-8", newline="") as f:
        data = read_dataset_csv(f, levels)

    config = LearnerConfig.parse(learner, alpha=alpha)
    manifest.config["learner_config"] = config.to_dict()
    skeletons = bootstrap_skeletons(data, config, m, ctx.obj["seed"], n_jobs=ctx.obj["threads"])

    _emit(ctx, dumps_archive(skeletons, node_count=data.p, labels=data.names))

    if strength_out:
        strengths = edge_strengths(skeletons, data.names)
        with open(strength_out, "w", encoding="utf-8", newline="") as f:
            f.write(csv_text(list(strengths.columns), strengths.itertuples(index=False)))
    _finish_manifest(ctx, manifest, started)


def _int_list(value):
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"liste d'entiers attendue: {value}")


@cli.command()
@click.option("--network", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Réseau JSON (réseau de référence par défaut).")
@click.option("--sizes", default="100,300,1000,3000", show_default=True, help="Tailles d'échantillon.")
@click.option("--replicates", type=click.IntRange(min=0), default=20, show_default=True,
              help="Répliques par taille.")
@click.option("--learners", default="gs-g2,hc", show_default=True, help="Algorithmes (gs-g2, gs-x2, hc, tabu).")
@click.option("--m", "m", type=click.IntRange(min=2), default=50, show_default=True,
              help="Squelettes bootstrap par réplique.")
@click.option("--mc-replicates", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--stat", type=click.Choice([kind.value for kind in StatisticKind]), default="n", show_default=True)
@click.option("--divisor", type=click.Choice([d.value for d in Divisor]), default=settings.mc_divisor,
              show_default=True)
@click.option("--alpha", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.05,
              show_default=True)
@click.pass_context
@handle_errors
def experiment(ctx, network, sizes, replicates, learners, m, mc_replicates, stat, divisor, alpha):
    """Campagne d'expériences : CSV size,replicate,learner,p_value."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx, [network] if network else [])
    bn = _load_network(network)
    configs = [LearnerConfig.parse(spec, alpha=alpha) for spec in learners.split(",") if spec.strip()]
    text = experiment_service.run_experiment(
        bn, _int_list(sizes), replicates, configs, m, mc_replicates, ctx.obj["seed"],
        statistic=stat, divisor=divisor, n_jobs=ctx.obj["threads"]
    )
    _emit(ctx, text)
    _finish_manifest(ctx, manifest, started)


@cli.command("reproduce-tables")
@click.argument("output_dir", type=click.Path(file_okay=False))
@click.option("--replicates", type=click.IntRange(min=1), default=settings.mc_replicates, show_default=True,
              help="Répliques de Monte Carlo de la table 3.")
@click.option("--full", is_flag=True, help=f"Utiliser R = {FULL_REPLICATES}.")
@click.option("--divisor", type=click.Choice([d.value for d in Divisor]), default=settings.mc_divisor,
              show_default=True)
@click.pass_context
@handle_errors
def reproduce_tables(ctx, output_dir, replicates, full, divisor):
    """Écrit table1.csv, table2.csv, table3.csv et manifest.json."""
    started = time.perf_counter()
    manifest = _start_manifest(ctx)
    if full:
        replicates = FULL_REPLICATES
    manifest.config["replicates"] = replicates
    paths = experiment_service.reproduce_tables(
        output_dir, replicates, ctx.obj["seed"], divisor=divisor, n_jobs=ctx.obj["threads"]
    )
    for path in paths.values():
        click.echo(f"✅ {path}", err=True)
    _finish_manifest(ctx, manifest, started, beside=os.path.join(output_dir, MANIFEST_FILENAME))


if __name__ == "__main__":
    cli()
