"""Blueprints Flask de l'API."""
