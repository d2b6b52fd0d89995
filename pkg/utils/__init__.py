"""Configuration, erreurs, formatage et noyaux numériques."""
