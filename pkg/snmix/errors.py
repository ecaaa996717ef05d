class SnmixError(ValueError):
    """Base class for every error raised by snmix."""


class DomainError(SnmixError):
    """An argument is outside the domain of the operation."""


class DegenerateComponentError(SnmixError):
    """A component collapsed during a CM-step (empty responsibility or non-positive variance)."""

    def __init__(self, message: str, component: int = -1):
        super().__init__(message)
        self.component = component


class ValidityError(SnmixError):
    """The modified estimator cannot be applied to this fit."""


class InputError(SnmixError):
    """A data or model file could not be read or parsed."""

    def __init__(self, message: str, line: int = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
