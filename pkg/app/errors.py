"""Exceptions du simulateur.

Les noyaux (model_core, source, upconversion, interferometer, detection,
analysis) lèvent ces erreurs sans journaliser ; la CLI les traduit en code
de sortie.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Argument numérique non fini ou hors domaine."""


class ConfigError(ValueError):
    """Configuration incohérente (longueur d'onde, étage, paramètre)."""


class ScenarioValidationError(ConfigError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("scénario invalide : " + "; ".join(self.violations))


class ContractError(RuntimeError):
    """Contrat d'entrée violé (tags non triés, grilles disjointes...)."""


class FitError(RuntimeError):
    """Scan de franges dégénéré."""


class CalibrationError(RuntimeError):
    """Cibles de calibration inatteignables."""
