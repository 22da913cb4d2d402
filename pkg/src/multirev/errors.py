"""Exception types raised by the library."""


class InvalidParameter(ValueError):
    pass


class ModelViolation(ValueError):
    """The problem does not satisfy the structural assumptions of the schemes."""


class NotACovariance(ValueError):
    pass


class StepRejected(RuntimeError):
    """Implicit step failed to converge; a smaller macro step is needed."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class ConfigError(ValueError):
    pass


class ResourceError(MemoryError):
    pass


class DomainError(ValueError):
    """Argument outside the domain of analyticity of a closed form."""
