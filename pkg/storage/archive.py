"""
Formats texte : archives de squelettes, CSV des moments et des matrices.

Archive de squelettes (UTF-8, LF) :
    nodes=<v>
    labels=<a,b,...>          (ligne optionnelle)
    0-1,1-2                   (un échantillon par ligne)
    -                         (échantillon sans arête)
"""
import io
import re
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from storage.graphs import EdgeIndexer, Skeleton
from utils.errors import ArchiveParseError, InputParseError, InvalidArgumentError
from utils.formatting import csv_text

NODES_PATTERN = re.compile(r"^nodes=(0|[1-9][0-9]*)$")
TOKEN_PATTERN = re.compile(r"^(0|[1-9][0-9]*)-(0|[1-9][0-9]*)$")
EMPTY_RECORD = "-"


@dataclass
class SkeletonArchive:
    """Contenu d'une archive : nombre de nœuds, libellés et échantillons."""
    node_count: int
    labels: tuple = None
    samples: list = field(default_factory=list)

    def label_of(self, node):
        """Libellé d'un nœud (son indice à défaut)."""
        return self.labels[node] if self.labels else str(node)


def _parse_record(line, node_count, line_number):
    """Décode une ligne d'échantillon en squelette."""
    if line == EMPTY_RECORD:
        return Skeleton(node_count, frozenset())
    if line != line.strip():
        raise ArchiveParseError("espace superflu", line_number)

    edges = []
    for token in line.split(","):
        match = TOKEN_PATTERN.match(token)
        if not match:
            raise ArchiveParseError(f"jeton mal formé '{token}'", line_number)
        a, b = int(match.group(1)), int(match.group(2))
        if a == b:
            raise ArchiveParseError("self-loop", line_number)
        if a >= node_count or b >= node_count:
            raise ArchiveParseError(f"nœud hors limites dans '{token}' (v={node_count})", line_number)
        if a > b:
            raise ArchiveParseError(f"paire non normalisée '{token}'", line_number)
        edges.append((a, b))

    if len(set(edges)) != len(edges):
        raise ArchiveParseError("arête dupliquée", line_number)
    if edges != sorted(edges):
        raise ArchiveParseError("arêtes non triées", line_number)
    return Skeleton(node_count, frozenset(edges))


def load_archive(stream):
    """
    Lit une archive complète de squelettes.

    Args:
        stream: Flux texte ouvert en lecture

    Returns:
        SkeletonArchive: En-tête et échantillons (ordre conservé)

    Raises:
        ArchiveParseError: Ligne invalide (avec son numéro)
    """
    lines = stream.read().split("\n")
    # Une fin de fichier LF produit une dernière ligne vide
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ArchiveParseError("en-tête 'nodes=<v>' manquant", 1)

    match = NODES_PATTERN.match(lines[0])
    if not match:
        raise ArchiveParseError("en-tête 'nodes=<v>' attendu", 1)
    node_count = int(match.group(1))

    labels = None
    first_record = 1
    if len(lines) > 1 and lines[1].startswith("labels="):
        labels = tuple(lines[1][len("labels="):].split(","))
        if len(labels) != node_count or len(set(labels)) != node_count:
            raise ArchiveParseError(f"{node_count} libellés distincts attendus", 2)
        first_record = 2

    samples = []
    for offset, line in enumerate(lines[first_record:]):
        samples.append(_parse_record(line, node_count, first_record + offset + 1))

    return SkeletonArchive(node_count=node_count, labels=labels, samples=samples)


def read_skeleton_archive(stream):
    """
    Lit les échantillons d'une archive de squelettes.

    Returns:
        list: Liste de Skeleton partageant le même nombre de nœuds
    """
    return load_archive(stream).samples


def format_record(skeleton):
    """Encode un squelette en ligne d'archive."""
    if not skeleton.edges:
        return EMPTY_RECORD
    return ",".join(f"{a}-{b}" for a, b in skeleton.sorted_edges())


def write_skeleton_archive(samples, stream, node_count=None, labels=None):
    """
    Écrit une archive de squelettes.

    Args:
        samples (list): Squelettes (même nombre de nœuds)
        stream: Flux texte ouvert en écriture
        node_count (int): Requis seulement pour une liste vide
        labels (list): Libellés optionnels des nœuds
    """
    counts = {sample.node_count for sample in samples}
    if node_count is not None:
        counts.add(int(node_count))
    if len(counts) != 1:
        raise InvalidArgumentError("Les échantillons doivent partager le même nombre de nœuds")
    v = counts.pop()

    stream.write(f"nodes={v}\n")
    if labels is not None:
        labels = [str(label) for label in labels]
        if len(labels) != v:
            raise InvalidArgumentError(f"{v} libellés attendus, {len(labels)} fournis")
        stream.write("labels=" + ",".join(labels) + "\n")
    for sample in samples:
        stream.write(format_record(sample) + "\n")


def dumps_archive(samples, node_count=None, labels=None):
    """Archive sous forme de chaîne."""
    buffer = io.StringIO()
    write_skeleton_archive(samples, buffer, node_count=node_count, labels=labels)
    return buffer.getvalue()


# ==================== CSV TRIANGULAIRES ====================

def upper_triangle_csv(matrix, value_column):
    """
    CSV `i,j,<valeur>` du triangle supérieur (diagonale comprise).

    Args:
        matrix (numpy.ndarray): Matrice symétrique k x k
        value_column (str): Nom de la colonne des valeurs

    Returns:
        str: Contenu CSV (17 chiffres significatifs)
    """
    matrix = np.asarray(matrix, dtype=float)
    k = matrix.shape[0]
    rows = [(i, j, matrix[i, j]) for i in range(k) for j in range(i, k)]
    return csv_text(["i", "j", value_column], rows)


def write_moments_csv(moments, stream):
    """Exporte les moments p̂ᵢ / p̂ᵢⱼ (colonne `p_ij`)."""
    stream.write(upper_triangle_csv(moments.p_pair_hat, "p_ij"))


def write_matrix_csv(matrix, stream):
    """Exporte une matrice de covariance (colonne `sigma_ij`)."""
    stream.write(upper_triangle_csv(matrix, "sigma_ij"))


def read_upper_triangle_csv(stream):
    """
    Lit un CSV triangulaire `i,j,p_ij` ou `i,j,sigma_ij`.

    Returns:
        tuple: (nom de la colonne de valeurs, matrice symétrique numpy)

    Raises:
        InputParseError: Colonnes ou indices invalides
    """
    try:
        df = pd.read_csv(stream, dtype={"i": "int64", "j": "int64"}, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputParseError(f"CSV illisible: {exc}")

    columns = list(df.columns)
    if len(columns) != 3 or columns[:2] != ["i", "j"] or columns[2] not in ("p_ij", "sigma_ij"):
        raise InputParseError(f"Colonnes 'i,j,p_ij' ou 'i,j,sigma_ij' attendues, trouvées: {columns}")
    value_column = columns[2]
    if df.empty:
        raise InputParseError("CSV sans ligne de données")
    if (df["i"] < 0).any() or (df["i"] > df["j"]).any():
        raise InputParseError("Seul le triangle supérieur (0 <= i <= j) est accepté")

    k = int(df["j"].max()) + 1
    matrix = np.full((k, k), np.nan)
    for i, j, value in df.itertuples(index=False):
        if not np.isnan(matrix[i, j]):
            raise InputParseError(f"Entrée ({i},{j}) dupliquée")
        matrix[i, j] = matrix[j, i] = float(value)
    if np.isnan(matrix).any():
        raise InputParseError(f"Triangle supérieur incomplet pour k={k}")
    return value_column, matrix
