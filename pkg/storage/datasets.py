"""
Données catégorielles et réseaux bayésiens discrets (CPT).

Formats :
- Jeu de données : CSV, première ligne = noms des variables, cellules =
  libellés de niveaux. Les niveaux sont numérotés par ordre de première
  apparition, sauf si un schéma JSON {"variable": ["niveau", ...]} est fourni.
- Réseau : document JSON {"nodes": [{"name", "levels", "parents", "cpt"}]}.
  Les lignes de la CPT suivent l'ordre mixte des parents déclarés, le
  premier parent variant le plus lentement.
"""
import json
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from storage.graphs import Dag
from utils.errors import InputParseError, InvalidArgumentError

CPT_TOLERANCE = 1e-9
DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
REFERENCE_NETWORK = os.path.join(DATA_DIR, "reference_network.json")


@dataclass(frozen=True)
class CategoricalDataset:
    """
    Jeu de données discret : une colonne d'indices de niveaux par variable.

    Attributes:
        names (tuple): Noms des variables
        levels (tuple): Pour chaque variable, la liste ordonnée de ses niveaux
        data (numpy.ndarray): Matrice n x p d'indices (int64)
    """
    names: tuple
    levels: tuple
    data: np.ndarray

    def __post_init__(self):
        names = tuple(str(name) for name in self.names)
        levels = tuple(tuple(str(level) for level in variable) for variable in self.levels)
        data = np.asarray(self.data, dtype=np.int64)
        if data.ndim != 2:
            raise InvalidArgumentError(f"Matrice de données 2D attendue, forme {data.shape}")
        if len(names) != data.shape[1] or len(levels) != data.shape[1]:
            raise InvalidArgumentError("Noms, niveaux et colonnes de données incohérents")
        if len(set(names)) != len(names):
            raise InvalidArgumentError("Noms de variables dupliqués")
        if data.shape[0] < 1:
            raise InvalidArgumentError("Le jeu de données doit contenir au moins une ligne")
        counts = np.array([len(variable) for variable in levels])
        if np.any(counts < 1):
            raise InvalidArgumentError("Chaque variable doit avoir au moins un niveau")
        if np.any(data < 0) or np.any(data >= counts):
            raise InvalidArgumentError("Indice de niveau hors limites")
        data.setflags(write=False)
        object.__setattr__(self, 'names', names)
        object.__setattr__(self, 'levels', levels)
        object.__setattr__(self, 'data', data)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def p(self):
        return self.data.shape[1]

    @property
    def level_counts(self):
        return tuple(len(variable) for variable in self.levels)

    def index_of(self, name):
        """Position d'une variable."""
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidArgumentError(f"Variable inconnue: {name}")

    def with_rows(self, rows):
        """Nouveau jeu de données restreint (ou rééchantillonné) aux lignes données."""
        return CategoricalDataset(self.names, self.levels, self.data[np.asarray(rows)])

    def resample(self, rng):
        """Rééchantillonnage non paramétrique : n lignes tirées avec remise."""
        return self.with_rows(rng.integers(0, self.n, size=self.n))

    def to_frame(self):
        """DataFrame pandas avec les libellés de niveaux."""
        return pd.DataFrame({
            name: np.asarray(self.levels[j], dtype=object)[self.data[:, j]]
            for j, name in enumerate(self.names)
        })

    def __repr__(self):
        return f"<CategoricalDataset n={self.n} p={self.p}>"


def dataset_from_frame(frame, schema=None):
    """
    Construit un jeu de données à partir d'un DataFrame de libellés.

    Args:
        frame (pandas.DataFrame): Une colonne par variable (chaînes)
        schema (dict): Niveaux déclarés par variable (optionnel)

    Returns:
        CategoricalDataset: Jeu de données encodé

    Raises:
        InputParseError: Valeur manquante ou niveau non déclaré
    """
    if frame.shape[1] == 0:
        raise InputParseError("Aucune variable dans le jeu de données")
    if frame.shape[0] == 0:
        raise InputParseError("Jeu de données vide")

    levels = []
    columns = []
    for name in frame.columns:
        values = frame[name].astype(str)
        if (values == "").any():
            raise InputParseError(f"Valeur manquante dans la colonne '{name}'")
        if schema is not None:
            if name not in schema:
                raise InputParseError(f"Variable '{name}' absente du schéma")
            declared = [str(level) for level in schema[name]]
            unknown = sorted(set(values) - set(declared))
            if unknown:
                raise InputParseError(f"Niveaux non déclarés pour '{name}': {unknown}")
        else:
            declared = list(pd.unique(values))
        lookup = {level: i for i, level in enumerate(declared)}
        levels.append(declared)
        columns.append(values.map(lookup).to_numpy(dtype=np.int64))

    return CategoricalDataset(tuple(frame.columns), tuple(levels), np.column_stack(columns))


def read_dataset_csv(stream, schema=None):
    """
    Lit un jeu de données CSV.

    Args:
        stream: Flux texte ou chemin
        schema (dict): Niveaux déclarés par variable (optionnel)

    Returns:
        CategoricalDataset: Jeu de données
    """
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False)
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputParseError(f"CSV de données illisible: {exc}")
    return dataset_from_frame(frame, schema)


def read_schema(stream):
    """Lit un schéma JSON {"variable": ["niveau", ...]}."""
    try:
        schema = json.load(stream)
    except json.JSONDecodeError as exc:
        raise InputParseError(f"Schéma JSON invalide: {exc}")
    if not isinstance(schema, dict) or not all(isinstance(v, list) for v in schema.values()):
        raise InputParseError("Le schéma doit associer chaque variable à une liste de niveaux")
    return schema


def write_dataset_csv(dataset, stream):
    """Écrit le jeu de données en CSV (libellés, fin de ligne LF)."""
    stream.write(dataset.to_frame().to_csv(index=False, lineterminator="\n"))


@dataclass(frozen=True)
class BayesNet:
    """
    Réseau bayésien discret.

    Attributes:
        dag (Dag): Structure
        levels (tuple): Niveaux de chaque nœud
        parent_order (tuple): Parents de chaque nœud, dans l'ordre de la CPT
        cpts (tuple): Pour chaque nœud, tableau (Π niveaux des parents) x niveaux
    """
    dag: Dag
    levels: tuple
    parent_order: tuple
    cpts: tuple

    def __post_init__(self):
        v = self.dag.v
        levels = tuple(tuple(str(level) for level in node) for node in self.levels)
        parent_order = tuple(tuple(int(p) for p in parents) for parents in self.parent_order)
        cpts = tuple(np.asarray(cpt, dtype=float) for cpt in self.cpts)
        if not (len(levels) == len(parent_order) == len(cpts) == v):
            raise InvalidArgumentError("Niveaux, parents et CPT doivent couvrir chaque nœud")

        for node in range(v):
            name = self.dag.node_labels[node]
            if sorted(parent_order[node]) != list(self.dag.parents(node)):
                raise InvalidArgumentError(f"Parents de '{name}' incohérents avec le DAG")
            rows = int(np.prod([len(levels[p]) for p in parent_order[node]], dtype=np.int64))
            cpt = cpts[node]
            if cpt.shape != (rows, len(levels[node])):
                raise InvalidArgumentError(
                    f"CPT de '{name}': forme {cpt.shape}, attendue {(rows, len(levels[node]))}"
                )
            if np.any(cpt < 0):
                raise InvalidArgumentError(f"CPT de '{name}': probabilité négative")
            if np.any(np.abs(cpt.sum(axis=1) - 1.0) > CPT_TOLERANCE):
                raise InvalidArgumentError(f"CPT de '{name}': une ligne ne somme pas à 1")
            cpt.setflags(write=False)

        object.__setattr__(self, 'levels', levels)
        object.__setattr__(self, 'parent_order', parent_order)
        object.__setattr__(self, 'cpts', cpts)

    @property
    def names(self):
        return self.dag.node_labels

    def row_index(self, node, parent_values):
        """
        Ligne de CPT pour des valeurs des parents (premier parent le plus lent).

        Args:
            node (int): Nœud
            parent_values (numpy.ndarray): Tableau (n, nb parents) d'indices

        Returns:
            numpy.ndarray: Indices de ligne (n,)
        """
        parent_values = np.asarray(parent_values, dtype=np.int64)
        index = np.zeros(parent_values.shape[0], dtype=np.int64)
        for column, parent in enumerate(self.parent_order[node]):
            index = index * len(self.levels[parent]) + parent_values[:, column]
        return index

    def to_dict(self):
        """Document JSON du réseau."""
        names = self.names
        return {
            "nodes": [
                {
                    "name": names[node],
                    "levels": list(self.levels[node]),
                    "parents": [names[p] for p in self.parent_order[node]],
                    "cpt": self.cpts[node].tolist()
                }
                for node in range(self.dag.v)
            ]
        }


def bayes_net_from_dict(document):
    """
    Construit un réseau à partir de son document JSON.

    Raises:
        InputParseError: Champ manquant, parent inconnu ou réseau invalide
    """
    try:
        nodes = document["nodes"]
        names = [str(node["name"]) for node in nodes]
        position = {name: i for i, name in enumerate(names)}
        parent_order = [[position[parent] for parent in node["parents"]] for node in nodes]
        arcs = frozenset((parent, child) for child, parents in enumerate(parent_order) for parent in parents)
        return BayesNet(
            dag=Dag(tuple(names), arcs),
            levels=tuple(node["levels"] for node in nodes),
            parent_order=tuple(parent_order),
            cpts=tuple(node["cpt"] for node in nodes)
        )
    except (KeyError, TypeError) as exc:
        raise InputParseError(f"Document de réseau incomplet: {exc}")
    except InvalidArgumentError as exc:
        raise InputParseError(f"Réseau invalide: {exc.message}")


def read_bayes_net(stream):
    """Lit un réseau bayésien depuis un flux JSON."""
    try:
        document = json.load(stream)
    except json.JSONDecodeError as exc:
        raise InputParseError(f"Document de réseau JSON invalide: {exc}")
    return bayes_net_from_dict(document)


def write_bayes_net(bn, stream):
    """Écrit le réseau au format JSON."""
    json.dump(bn.to_dict(), stream, indent=2)
    stream.write("\n")


def load_reference_network():
    """Réseau de référence à 8 nœuds livré avec le dépôt."""
    with open(REFERENCE_NETWORK, encoding="utf-8") as f:
        return read_bayes_net(f)
