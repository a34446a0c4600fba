"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A configuration is invalid; carries every violation found, not just the first."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class IngestionError(ValueError):
    """External data (snapshot files, initial data) does not match the expected shape."""


class BlowupError(RuntimeError):
    """The explicit integrator produced non-finite values; carries the offending time."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"non-finite solution values at t={time!r}")
