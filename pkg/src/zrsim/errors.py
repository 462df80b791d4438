class ModelError(ValueError):
    """Base class for invalid model inputs."""


class ParameterError(ModelError):
    pass


class UtilityError(ParameterError):
    """Custom utility failed the concavity/monotonicity sampling check."""


class MarketDomainError(ModelError):
    """Hotelling validity violated: a transport cost does not exceed the
    surplus gap between the ISPs."""

    def __init__(self, message, t_name=None):
        super().__init__(message)
        self.t_name = t_name
