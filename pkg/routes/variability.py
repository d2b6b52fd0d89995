"""
Routes pour les statistiques de variabilité et les tests asymptotiques.
"""
from flask import Blueprint, jsonify, request

from services.bernoulli_moments import CovMatrix
from services.parametric_tests import run_tests
from services.variability_stats import variability
from utils.errors import InvalidArgumentError

# Créer le Blueprint pour les routes de variabilité
variability_bp = Blueprint('variability', __name__)


def read_payload():
    """Corps JSON de la requête (dictionnaire obligatoire)."""
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise InvalidArgumentError("Corps JSON attendu")
    return data


def matrix_from_payload(data):
    """
    Lit le champ 'matrix' (liste de lignes) en CovMatrix.

    Raises:
        InvalidArgumentError: Champ absent ou non numérique
    """
    rows = data.get('matrix')
    if not isinstance(rows, list) or not rows:
        raise InvalidArgumentError("Le champ 'matrix' (liste de lignes) est requis")
    try:
        return CovMatrix([[float(value) for value in row] for row in rows])
    except (TypeError, ValueError):
        raise InvalidArgumentError("Le champ 'matrix' doit contenir uniquement des nombres")


def int_field(data, name, default=None, minimum=None):
    """Champ entier optionnel du corps JSON."""
    value = data.get(name, default)
    if value is None:
        raise InvalidArgumentError(f"Le champ '{name}' est requis")
    if isinstance(value, bool) or not isinstance(value, (int, str)) or not str(value).lstrip('-').isdigit():
        raise InvalidArgumentError(f"Le champ '{name}' doit être un entier")
    value = int(value)
    if minimum is not None and value < minimum:
        raise InvalidArgumentError(f"Le champ '{name}' doit être >= {minimum}")
    return value


@variability_bp.route('/describe', methods=['POST'])
def describe():
    """
    Calcule VAR_T, VAR_G, VAR_N, leurs versions normalisées et complémentaires.

    Body JSON attendu:
        {
            "matrix": [[0.24, 0.04], [0.04, 0.24]],
            "reduce_for_det": false
        }

    Returns:
        JSON: Rapport de variabilité
    """
    data = read_payload()
    sigma = matrix_from_payload(data)
    report = variability(sigma, reduce_for_det=bool(data.get('reduce_for_det', False)))

    values = report.as_dict()
    values.update(cvar_t=report.cvar_t, cvar_g=report.cvar_g, cvar_n=report.cvar_n)
    return jsonify({
        "success": True,
        "report": values
    }), 200


@variability_bp.route('/test', methods=['POST'])
def parametric_test():
    """
    Tests asymptotiques de H₀ : Σ = (1/4) I_k.

    Body JSON attendu:
        {
            "matrix": [[0.24, 0.04], [0.04, 0.24]],
            "m": 20,
            "which": "all"
        }

    Returns:
        JSON: Liste des résultats (statistique, p brute et corrigée)
    """
    data = read_payload()
    sigma = matrix_from_payload(data)
    m = int_field(data, 'm', minimum=1)
    results = run_tests(sigma, m, which=str(data.get('which', 'all')))

    return jsonify({
        "success": True,
        "count": len(results),
        "results": [result.to_dict() for result in results]
    }), 200
