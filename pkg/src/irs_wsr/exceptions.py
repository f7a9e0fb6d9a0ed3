class DimensionError(ValueError):
    """Array shapes are inconsistent with each other or with the system size."""


class DegenerateRetractionError(ArithmeticError):
    """The retraction would have to normalize a (numerically) zero quantity."""


class FeasibilityError(ValueError):
    """A point violates the constraint set it is supposed to live on."""


class SingularChannelError(ArithmeticError):
    """The stacked effective channel cannot be inverted (ZF) or is all-zero (MRT)."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
