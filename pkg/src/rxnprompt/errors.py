"""Exception hierarchy shared across the pipeline.

The CLI maps these onto its stable exit codes: ConfigError -> 2,
DataError -> 3, BackendError -> 4.
"""


class RxnPromptError(Exception):
    """Base class for all library errors."""


class ConfigError(RxnPromptError):
    """Bad configuration, unusable paths or invalid parameters."""


class DataError(RxnPromptError):
    """Malformed datasets, inconsistent records or id mismatches."""


class BackendError(RxnPromptError):
    """Failures of external embedding or generation services."""


class SmilesError(RxnPromptError):
    """Lexing or parsing failure of a SMILES string."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
