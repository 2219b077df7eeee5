"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Matrix or subsystem dimensions do not agree."""


class ValidationError(ValueError):
    """An input failed a numerical validity check (e.g. Hermiticity)."""


class DomainError(ValueError):
    """An argument is outside the domain of the requested operation."""


class ConsistencyError(RuntimeError):
    """An internal construction produced an inconsistent result."""


class GenerationError(RuntimeError):
    """A rejection sampler exhausted its attempt budget."""


class IntegrationError(RuntimeError):
    """Time propagation breached a state invariant."""


class NumericalError(RuntimeError):
    """A quantity expected to be real carried a significant imaginary part."""


class FitError(ValueError):
    """A readout model cannot be trained on the given data."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
