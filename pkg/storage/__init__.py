"""Graphes, archives de squelettes et jeux de données."""
