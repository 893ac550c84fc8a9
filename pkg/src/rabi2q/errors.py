"""Exception and warning types shared across the package."""


class InvalidCutoffError(ValueError):
    """Fock cutoff is outside the supported range."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its domain."""


class PhaseMismatchError(DomainError):
    """Control parameter lies on the wrong side of the critical point."""


class NonHermitianError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class InvalidDensityError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid sweep configuration."""


class TooFewPointsError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """Fock cutoff is probably too small for the requested squeezing."""
