"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: InvalidInput/Config -> 2,
Numerical (incl. training divergence) -> 3, file format / IO -> 4.
"""

from __future__ import annotations


class ChimeraError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(ChimeraError):
    """Caller passed values outside the supported domain."""


class ConfigError(InvalidInputError):
    """A config object or config file failed validation."""


class NumericalError(ChimeraError):
    """A numerical procedure failed (singular system, divergence, ...).

    ``details`` carries diagnostic scalars, e.g. a condition-number
    estimate or the epoch at which training diverged.
    """

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class TrainingDivergedError(NumericalError):
    """Loss became non-finite during training; details carry the epoch."""


class InfeasibleEvaluationError(NumericalError):
    """Objective evaluation hit non-physical output (e.g. lift <= 0)."""


class FileFormatError(ChimeraError):
    """A model or dataset file has the wrong magic, version or length."""
