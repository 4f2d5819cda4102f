"""Exception types shared across the package."""


class OrbergmanError(Exception):
    """Base class for all package-specific errors."""


class Infeasible(OrbergmanError):
    """No positive solution exists for the requested weight window."""


class MismatchedOrder(OrbergmanError):
    """Weight systems with different moduli cannot be combined."""


class FiberActionNotFaithful(OrbergmanError):
    """A stabilizer would act on the line bundle fiber with a non-primitive root."""


class MetricNotPositive(OrbergmanError):
    """A perturbed metric failed the positivity check on the validation grid."""


class QuadratureNotConverged(OrbergmanError):
    """Nested quadrature node counts disagree beyond the certification tolerance."""


class IllConditioned(OrbergmanError):
    """The expansion design matrix exceeds the conditioning threshold."""


class DegenerateData(OrbergmanError):
    """Decay data sits at the arithmetic noise floor and cannot be fitted."""


class ConfigInvalid(OrbergmanError):
    """An experiment configuration failed validation."""
