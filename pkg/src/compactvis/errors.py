"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A configuration value is missing or inconsistent."""


class ShapeError(ValueError):
    """Sequence lengths or grid shapes do not match."""


class GenerationError(RuntimeError):
    """Constraint-driven data generation exhausted its attempt budget."""


class ValidationError(ValueError):
    """A result log or answer record violates the expected schema."""
