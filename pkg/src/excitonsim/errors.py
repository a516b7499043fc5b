"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent user-supplied configuration."""


class NumericalValidationError(RuntimeError):
    """A numerical invariant (norm, trace, positivity) drifted out of tolerance."""
