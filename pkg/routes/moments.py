"""
Routes pour l'estimation des moments d'arêtes à partir d'une archive.
"""
import io

from flask import Blueprint, current_app, jsonify, request

from services.bernoulli_moments import classify_entropy, covariance_from_moments, estimate_moments
from storage.archive import load_archive
from utils.errors import InvalidArgumentError

# Créer le Blueprint pour les routes des moments
moments_bp = Blueprint('moments', __name__)


def _archive_text():
    """Texte de l'archive : champ JSON 'archive' ou fichier 'file' (form-data)."""
    if request.is_json:
        data = request.get_json(silent=True) or {}
        text = data.get('archive')
        if not isinstance(text, str):
            raise InvalidArgumentError("Le champ 'archive' (texte) est requis")
        return text, data

    if 'file' not in request.files:
        raise InvalidArgumentError("Aucune archive fournie (JSON 'archive' ou fichier 'file')")
    file = request.files['file']
    if file.filename == '':
        raise InvalidArgumentError("Aucun fichier sélectionné")
    return io.TextIOWrapper(io.BytesIO(file.read()), encoding='utf-8').read(), request.form


@moments_bp.route('/moments', methods=['POST'])
def compute_moments():
    """
    Estime p̂ᵢ, p̂ᵢⱼ et la covariance d'une archive de squelettes.

    Deux modes d'envoi possibles:

    1. Via JSON (application/json):
        {
            "archive": "nodes=3\\n0-1\\n0-1,1-2\\n",
            "tol": 0.0
        }

    2. Via fichier (form-data):
        - file: archive de squelettes
        - tol (optionnel)

    Returns:
        JSON: Moments, triangle supérieur de la covariance et classe d'entropie
    """
    text, options = _archive_text()
    try:
        tol = float(options.get('tol', 0.0))
    except (TypeError, ValueError):
        raise InvalidArgumentError("Le champ 'tol' doit être un nombre")

    archive = load_archive(io.StringIO(text))
    if not archive.samples:
        raise InvalidArgumentError("L'archive ne contient aucun échantillon")

    moments = estimate_moments(archive.samples)
    sigma = covariance_from_moments(moments).entries
    entropy = classify_entropy(moments, tol=tol)
    current_app.logger.info("Moments: m=%d k=%d classe=%s", moments.m, moments.k, entropy.value)

    pairs = [
        {"i": i, "j": j, "p_ij": moments.p_pair_hat[i, j], "sigma_ij": sigma[i, j]}
        for i in range(moments.k) for j in range(i, moments.k)
    ]
    return jsonify({
        "success": True,
        "nodes": archive.node_count,
        "labels": list(archive.labels) if archive.labels else None,
        "m": moments.m,
        "k": moments.k,
        "p_hat": moments.p_hat.tolist(),
        "pairs": pairs,
        "entropy_class": entropy.value
    }), 200
