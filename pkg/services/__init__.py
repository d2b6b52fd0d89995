"""Calculs : moments, statistiques, tests, Monte Carlo, apprentissage."""
