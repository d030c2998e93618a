"""Exception hierarchy for the package."""


class EpigError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDistributionError(EpigError, ValueError):
    pass


class AlignmentError(EpigError, ValueError):
    """Prediction tensors do not share the same posterior draws."""


class DegenerateSupportError(EpigError, ValueError):
    pass


class IllConditionedKernelError(EpigError, RuntimeError):
    pass


class ImpossibleObservationError(EpigError, ValueError):
    pass


class UnsupportedClassError(EpigError, ValueError):
    pass


class TrainingError(EpigError, RuntimeError):
    pass


class PoolExhaustedError(EpigError, RuntimeError):
    pass


class SchemaError(EpigError, ValueError):
    pass


class ConfigError(EpigError, ValueError):
    """Raised with every validation problem found, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
