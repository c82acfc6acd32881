"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid input or configuration.

    ``field`` carries a dotted path (``"model.eps"``) when the error originates
    from a config file, so the CLI can point at the offending entry.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ResolutionError(ConfigurationError):
    """Kernel support too narrow for the grid."""


class ContractionViolation(ConfigurationError):
    """Decay study requested for parameters violating the contraction condition."""

    def __init__(self, message: str, constants=None):
        self.constants = constants
        super().__init__(message)


class StepFailure(RuntimeError):
    """A time step could not be completed; ``state`` holds the last good state."""

    def __init__(self, message: str, state=None):
        self.state = state
        super().__init__(message)
