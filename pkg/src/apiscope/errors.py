"""Exception types shared across the package."""


class MalformedFqnError(ValueError):
    """A fully qualified method name with fewer than 3 segments or bad identifiers."""


class IngestError(ValueError):
    """A corpus, API-database, or labels file could not be parsed."""


class TrainingError(RuntimeError):
    """Classifier training cannot proceed (e.g. single-class data)."""


class DivergenceError(TrainingError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} in epoch {epoch}")
        self.epoch = epoch


class ModelFormatError(ValueError):
    """A model file is corrupt, truncated, or of an unsupported version."""


class ProviderError(RuntimeError):
    """An embedding provider failed or returned an invalid vector."""
