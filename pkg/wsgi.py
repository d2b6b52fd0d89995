"""
Point d'entrée WSGI de l'API de variabilité (gunicorn wsgi:application).

La limite de répliques de POST /mc suit VARIABILITY_API_MAX_REPLICATES.
"""
from app import create_app

application = create_app()
