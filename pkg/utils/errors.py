"""
Exceptions de l'application.

Chaque erreur porte un message (en français), un code machine et le code de
sortie utilisé par la CLI.
"""


class VariabilityError(Exception):
    """Erreur de base de l'application."""

    code = "error"
    exit_code = 1
    http_status = 400

    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def to_dict(self):
        """Convertir en dictionnaire (réponses JSON)."""
        return {
            "success": False,
            "error": self.message,
            "code": self.code
        }


class InvalidArgumentError(VariabilityError):
    """Précondition violée par un argument."""

    code = "invalid_argument"
    exit_code = 2


class InputParseError(VariabilityError):
    """Entrée mal formée (archive, CSV, document de réseau)."""

    code = "parse_error"
    exit_code = 3


class ArchiveParseError(InputParseError):
    """Erreur de lecture d'une archive de squelettes, avec numéro de ligne."""

    def __init__(self, message, line_number):
        super().__init__(f"{message} at line {line_number}")
        self.line_number = line_number


class NumericError(VariabilityError):
    """Échec numérique (non-convergence, matrice non symétrique...)."""

    code = "numeric_error"
    exit_code = 4
    http_status = 422


class EmptyReductionError(NumericError):
    """La réduction de rang d'une matrice nulle ne garde aucun indice."""

    code = "empty_reduction"


class LearnerError(VariabilityError):
    """Échec de l'algorithme d'apprentissage dans une réplique bootstrap."""

    code = "learner_error"
    exit_code = 4

    def __init__(self, replicate, cause):
        super().__init__(f"Réplique bootstrap {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause
