"""
Routes pour la significativité de Monte Carlo.
"""
from flask import Blueprint, current_app, jsonify

from routes.variability import int_field, matrix_from_payload, read_payload
from services.montecarlo import McConfig, mc_pvalue
from services.variability_stats import StatisticKind, complement_statistic
from utils.errors import InvalidArgumentError

# Créer le Blueprint pour les routes Monte Carlo
montecarlo_bp = Blueprint('montecarlo', __name__)


@montecarlo_bp.route('/mc', methods=['POST'])
def monte_carlo():
    """
    Estime P(T* >= T_obs) sous H₀ par simulation.

    Body JSON attendu:
        {
            "matrix": [[0.24, 0.04], [0.04, 0.24]],
            "m": 20,
            "stat": "n",
            "replicates": 10000,
            "seed": 20100,
            "divisor": "m"
        }

    Returns:
        JSON: p̂, erreur standard et configuration utilisée
    """
    data = read_payload()
    sigma = matrix_from_payload(data)
    m = int_field(data, 'm', minimum=2)
    replicates = int_field(data, 'replicates', default=10_000, minimum=1)
    seed = int_field(data, 'seed', default=current_app.config['DEFAULT_SEED'])

    max_replicates = current_app.config['MAX_REPLICATES']
    if replicates > max_replicates:
        raise InvalidArgumentError(f"Au plus {max_replicates} répliques par requête")

    try:
        kind = StatisticKind(str(data.get('stat', 'n')).lower())
    except ValueError:
        raise InvalidArgumentError("Le champ 'stat' doit valoir t, g ou n")

    config = McConfig(
        m=m, k=sigma.k, replicates=replicates, seed=seed, statistic=kind,
        divisor=str(data.get('divisor', current_app.config['DEFAULT_DIVISOR']))
    )
    observed = complement_statistic(sigma.entries, kind)
    result = mc_pvalue(observed, config)

    return jsonify({
        "success": True,
        "result": result.to_dict(),
        "config": config.to_dict()
    }), 200
