"""
API Flask de variabilité des squelettes de réseaux bayésiens.

Les calculs (moments, statistiques, tests, Monte Carlo) sont exposés en
JSON ; l'apprentissage par bootstrap reste réservé à la ligne de commande.
"""
from flask import Flask, jsonify
from flask_cors import CORS

from utils.config import APP_NAME, APP_VERSION, settings
from utils.errors import VariabilityError

from routes.moments import moments_bp
from routes.variability import variability_bp
from routes.montecarlo import montecarlo_bp
from routes.status import status_bp

BLUEPRINTS = (moments_bp, variability_bp, montecarlo_bp, status_bp)


def endpoint_catalog(max_replicates):
    """Description des endpoints, groupés par blueprint."""
    return {
        "moments": {
            "POST /moments": "p̂ᵢ, p̂ᵢⱼ et classe d'entropie d'une archive (JSON 'archive' ou fichier 'file')"
        },
        "variability": {
            "POST /describe": "VAR_T, VAR_G, VAR_N normalisées et complémentaires d'une matrice",
            "POST /test": "Tests trace, det-gauss, det-gamma, nagao de Σ = (1/4)I_k"
        },
        "montecarlo": {
            "POST /mc": f"Significativité de Monte Carlo (au plus {max_replicates} répliques)"
        },
        "system": {
            "GET /health": "Version et paramètres par défaut"
        }
    }


def register_error_handlers(app):
    """Réponses JSON `success: false` pour toutes les erreurs."""

    @app.errorhandler(VariabilityError)
    def variability_error(error):
        app.logger.info("Requête rejetée (%s): %s", error.code, error.message)
        return jsonify(error.to_dict()), error.http_status

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({
            "success": False,
            "error": "Endpoint non trouvé",
            "code": "not_found",
            "message": "GET / liste les endpoints de calcul"
        }), 404

    @app.errorhandler(500)
    def internal_error(error):
        app.logger.exception("Erreur interne")
        return jsonify({
            "success": False,
            "error": "Erreur interne du serveur",
            "code": "internal_error"
        }), 500


def create_app(config=None):
    """
    Construit l'application Flask.

    Args:
        config (dict): Surcharges de app.config (tests, déploiement)

    Returns:
        Flask: Application avec blueprints et gestionnaires d'erreurs
    """
    app = Flask(__name__)
    app.json.ensure_ascii = False
    app.json.sort_keys = False
    app.config.update(
        MAX_REPLICATES=settings.api_max_replicates,
        DEFAULT_SEED=settings.seed,
        DEFAULT_DIVISOR=settings.mc_divisor
    )
    if config:
        app.config.update(config)

    CORS(app, resources={r"/*": {"origins": "*"}})
    for blueprint in BLUEPRINTS:
        app.register_blueprint(blueprint)

    @app.route('/', methods=['GET'])
    def home():
        return jsonify({
            "success": True,
            "name": APP_NAME,
            "version": APP_VERSION,
            "endpoints": endpoint_catalog(app.config['MAX_REPLICATES'])
        }), 200

    register_error_handlers(app)
    return app


if __name__ == '__main__':
    print(f"🚀 {APP_NAME} {APP_VERSION} sur http://localhost:5000 (GET / pour les endpoints)")
    create_app().run(host='0.0.0.0', port=5000, debug=True)
