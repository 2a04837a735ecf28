class ParameterError(ValueError):
    """A model parameter is outside the range a builder or formula supports."""


class ResourceError(ParameterError):
    """Requested size would need an unreasonably large dense matrix."""


class NumericalError(ArithmeticError):
    """A numerical certificate (unitarity, eigen-residual, ...) failed."""


class UnitarityError(NumericalError):
    pass


class EigensolverError(NumericalError):
    pass


class SingularPointError(NumericalError):
    pass


class InsufficientDataError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
