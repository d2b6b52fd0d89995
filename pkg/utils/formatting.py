"""
Formatage des nombres et des sorties texte/CSV.
"""
import csv
import io
import math


def fmt17(value):
    """Nombre avec 17 chiffres significatifs (fichiers lisibles par machine)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def fmt6(value):
    """Nombre avec 6 décimales (tableaux destinés aux humains)."""
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.6f}"


def key_value_block(pairs, formatter=fmt17):
    """
    Construit un bloc texte `clé=valeur`, une paire par ligne.

    Args:
        pairs (list): Liste de tuples (clé, valeur)
        formatter (callable): Formatage des valeurs non textuelles

    Returns:
        str: Bloc terminé par un saut de ligne
    """
    lines = []
    for key, value in pairs:
        text = value if isinstance(value, str) else formatter(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def csv_text(header, rows, formatter=fmt17):
    """
    Écrit un CSV (séparateur virgule, fin de ligne LF) en mémoire.

    Args:
        header (list): Noms des colonnes
        rows (iterable): Lignes de valeurs
        formatter (callable): Formatage des valeurs non textuelles

    Returns:
        str: Contenu CSV
    """
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([value if isinstance(value, str) else formatter(value) for value in row])
    return output.getvalue()
