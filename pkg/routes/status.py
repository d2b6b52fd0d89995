"""
Route de santé de l'API.
"""
from datetime import datetime

from flask import Blueprint, current_app, jsonify

from utils.config import APP_NAME, APP_VERSION

status_bp = Blueprint('status', __name__)


@status_bp.route('/health', methods=['GET'])
def health_check():
    """
    Version du service et paramètres par défaut des calculs.

    Returns:
        JSON: Statut, version, graine et diviseur par défaut, limite de répliques
    """
    return jsonify({
        "success": True,
        "status": "healthy",
        "service": APP_NAME,
        "version": APP_VERSION,
        "defaults": {
            "seed": current_app.config['DEFAULT_SEED'],
            "divisor": current_app.config['DEFAULT_DIVISOR'],
            "max_replicates": current_app.config['MAX_REPLICATES']
        },
        "timestamp": datetime.now().isoformat()
    }), 200
